//! Measured operator norms of the Fortin operators over a finite polynomial
//! probe space: lower bounds for the continuity constants, via a
//! generalized symmetric eigenproblem in the respective graph norms.

use super::pidiv::{PiDiv, VecProbe};
use super::pigrad::PiGrad;
use crate::mesh::Mesh;
use crate::refelem::dim_p;
use crate::refelem::quadrature::quadrature_rule;
use crate::Result;
use nalgebra::DMatrix;

#[derive(Debug, Clone, Copy)]
pub struct CpiEstimate {
    pub c_pi: f64,
    pub probe_degree: usize,
    pub probe_dim: usize,
}

/// Largest generalized eigenvalue sqrt of (A^T Gt A) x = lambda Gp x.
fn pencil_max(a: &DMatrix<f64>, gt: &DMatrix<f64>, gp: &DMatrix<f64>) -> f64 {
    let num = a.transpose() * gt * a;
    let chol = gp
        .clone()
        .cholesky()
        .expect("probe Gram is positive definite");
    let li = chol
        .l()
        .try_inverse()
        .expect("triangular factor invertible");
    let reduced = &li * num * li.transpose();
    let sym = 0.5 * (&reduced + reduced.transpose());
    let eig = sym.symmetric_eigen();
    eig.eigenvalues.max().max(0.0).sqrt()
}

/// Operator norm of the mean-shifted bubble interpolant over scalar probes
/// of the given degree, in the H1 norm; `weights` optionally maps the norm
/// to a physical element (det, metric), reference when `None`.
pub fn measure_cpi_grad(
    pi: &PiGrad,
    probe_degree: usize,
    geometry: Option<(&Mesh, usize)>,
) -> Result<CpiEstimate> {
    let scalar = pi.pi0.scalar.clone();
    assert!(scalar.degree >= probe_degree);
    let n = dim_p(probe_degree);
    let rule = quadrature_rule(2 * scalar.degree + 2)?;

    let (det, met) = geometry_factors(geometry);

    // Probe H1 Gram.
    let mut gp = DMatrix::<f64>::zeros(n, n);
    for qi in 0..rule.len() {
        let [x, y] = rule.xy(qi);
        let w = rule.weights[qi] * det;
        let (sv, sg) = scalar.eval_grad(n, x, y);
        for i in 0..n {
            for j in 0..n {
                let g = met[0][0] * sg[i][0] * sg[j][0]
                    + met[0][1] * sg[i][0] * sg[j][1]
                    + met[1][0] * sg[i][1] * sg[j][0]
                    + met[1][1] * sg[i][1] * sg[j][1];
                gp[(i, j)] += w * (sv[i] * sv[j] + g);
            }
        }
    }

    // Images of the probe basis: coefficients in (bubbles + constant).
    let nb = pi.pi0.bubbles.cardinality();
    let mut a = DMatrix::<f64>::zeros(nb + 1, n);
    for j in 0..n {
        let scalar_j = scalar.clone();
        let f = move |x: f64, y: f64| scalar_j.eval(j + 1, x, y)[j];
        let img = pi.apply(&f);
        for i in 0..nb {
            a[(i, j)] = img.coeffs[i];
        }
        a[(nb, j)] = img.constant;
    }

    // Output H1 Gram over (bubbles, constant).
    let bubbles = &pi.pi0.bubbles;
    let n_r = dim_p(bubbles.r);
    let mut gt = DMatrix::<f64>::zeros(nb + 1, nb + 1);
    for qi in 0..rule.len() {
        let [x, y] = rule.xy(qi);
        let w = rule.weights[qi] * det;
        let (sv, sg) = scalar.eval_grad(n_r, x, y);
        // Values/grads of the bubble combinations.
        let mut bv = vec![0.0; nb + 1];
        let mut bg = vec![[0.0; 2]; nb + 1];
        for bj in 0..nb {
            for k in 0..n_r {
                let c = bubbles.coeffs[(k, bj)];
                if c != 0.0 {
                    bv[bj] += c * sv[k];
                    bg[bj][0] += c * sg[k][0];
                    bg[bj][1] += c * sg[k][1];
                }
            }
        }
        bv[nb] = 1.0;
        for i in 0..=nb {
            for j in 0..=nb {
                let g = met[0][0] * bg[i][0] * bg[j][0]
                    + met[0][1] * bg[i][0] * bg[j][1]
                    + met[1][0] * bg[i][1] * bg[j][0]
                    + met[1][1] * bg[i][1] * bg[j][1];
                gt[(i, j)] += w * (bv[i] * bv[j] + g);
            }
        }
    }

    Ok(CpiEstimate {
        c_pi: pencil_max(&a, &gt, &gp),
        probe_degree,
        probe_dim: n,
    })
}

/// Operator norm of the H(div) interpolant over vector probes, in the
/// H(div) norm; Piola-weighted when a geometry is given.
pub fn measure_cpi_div(
    pi: &PiDiv,
    probe_degree: usize,
    geometry: Option<(&Mesh, usize)>,
) -> Result<CpiEstimate> {
    let scalar = pi.scalar.clone();
    assert!(scalar.degree >= probe_degree);
    let n_s = dim_p(probe_degree);
    let n = 2 * n_s;
    let rule = quadrature_rule(2 * scalar.degree + 2)?;

    // Piola weights: |tau|^2 -> det^{-1} tau^T (A^T A) tau, |div|^2 -> det^{-1}.
    let (inv_det, ata) = match geometry {
        None => (1.0, [[1.0, 0.0], [0.0, 1.0]]),
        Some((mesh, elem)) => {
            let aff = &mesh.affine[elem];
            let a = aff.a;
            let mut m = [[0.0; 2]; 2];
            for i in 0..2 {
                for j in 0..2 {
                    for k in 0..2 {
                        m[i][j] += a[k][i] * a[k][j];
                    }
                }
            }
            (1.0 / aff.det, m)
        }
    };

    // Probe Gram in the (possibly mapped) H(div) norm.
    let mut gp = DMatrix::<f64>::zeros(n, n);
    for qi in 0..rule.len() {
        let [x, y] = rule.xy(qi);
        let w = rule.weights[qi] * inv_det;
        let (sv, sg) = scalar.eval_grad(n_s, x, y);
        for i in 0..n_s {
            for ci in 0..2 {
                for j in 0..n_s {
                    for cj in 0..2 {
                        let mut val = ata[ci][cj] * sv[i] * sv[j];
                        val += sg[i][ci] * sg[j][cj]; // div * div
                        gp[(2 * i + ci, 2 * j + cj)] += w * val;
                    }
                }
            }
        }
    }

    // Images over the constrained basis.
    let nb = pi.diagnostics.size;
    let mut a_mat = DMatrix::<f64>::zeros(nb, n);
    let mut images = Vec::with_capacity(n);
    for j in 0..n_s {
        for c in 0..2 {
            let scalar_j = scalar.clone();
            let val = move |x: f64, y: f64| -> [f64; 2] {
                let v = scalar_j.eval(j + 1, x, y)[j];
                if c == 0 {
                    [v, 0.0]
                } else {
                    [0.0, v]
                }
            };
            let scalar_j2 = scalar.clone();
            let div = move |x: f64, y: f64| -> f64 {
                let (_, g) = scalar_j2.eval_grad(j + 1, x, y);
                g[j][c]
            };
            let img = pi.apply(&VecProbe {
                val: &val,
                div: &div,
            });
            for i in 0..nb {
                a_mat[(i, 2 * j + c)] = img.coeffs[i];
            }
            images.push(img.coeffs.clone());
        }
    }

    // Target Gram over the constrained basis, same weighted norm.
    let mut gt = DMatrix::<f64>::zeros(nb, nb);
    for qi in 0..rule.len() {
        let [x, y] = rule.xy(qi);
        let w = rule.weights[qi] * inv_det;
        // Values/divs of each constrained basis function.
        let mut vals = vec![[0.0; 2]; nb];
        let mut divs = vec![0.0; nb];
        for (bi, item) in vals.iter_mut().enumerate() {
            let e = nalgebra::DVector::from_fn(nb, |k, _| if k == bi { 1.0 } else { 0.0 });
            let img = super::pidiv::DivImage::from_coeffs(pi, e);
            *item = img.eval(x, y);
            divs[bi] = img.div(x, y);
        }
        for i in 0..nb {
            for j in 0..nb {
                let mut val = divs[i] * divs[j];
                for ci in 0..2 {
                    for cj in 0..2 {
                        val += ata[ci][cj] * vals[i][ci] * vals[j][cj];
                    }
                }
                gt[(i, j)] += w * val;
            }
        }
    }

    Ok(CpiEstimate {
        c_pi: pencil_max(&a_mat, &gt, &gp),
        probe_degree,
        probe_dim: n,
    })
}

fn geometry_factors(geometry: Option<(&Mesh, usize)>) -> (f64, [[f64; 2]; 2]) {
    match geometry {
        None => (1.0, [[1.0, 0.0], [0.0, 1.0]]),
        Some((mesh, elem)) => {
            let aff = &mesh.affine[elem];
            let ait = [
                [aff.a_inv[0][0], aff.a_inv[1][0]],
                [aff.a_inv[0][1], aff.a_inv[1][1]],
            ];
            let mut met = [[0.0; 2]; 2];
            for k in 0..2 {
                for l in 0..2 {
                    for a in 0..2 {
                        met[k][l] += ait[a][k] * ait[a][l];
                    }
                }
            }
            (aff.det, met)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cpi_at_least_one_on_target_space() {
        // Both operators reproduce their targets, so the measured norm over
        // a probe space containing target members is >= 1 (up to rounding).
        let pg = PiGrad::build(1, 8).unwrap();
        let est = measure_cpi_grad(&pg, 8, None).unwrap();
        assert!(est.c_pi >= 1.0 - 1e-9, "grad c_pi {}", est.c_pi);
        let pd = PiDiv::build(1, 8).unwrap();
        let est = measure_cpi_div(&pd, 8, None).unwrap();
        assert!(est.c_pi >= 1.0 - 1e-9, "div c_pi {}", est.c_pi);
    }

    #[test]
    fn cpi_stable_under_probe_enrichment() {
        let pg = PiGrad::build(1, 10).unwrap();
        let e8 = measure_cpi_grad(&pg, 8, None).unwrap();
        let e10 = measure_cpi_grad(&pg, 10, None).unwrap();
        let rel = (e10.c_pi - e8.c_pi).abs() / e8.c_pi;
        assert!(rel < 0.05, "grad c_pi drift {rel:.3}");
        let pd = PiDiv::build(1, 10).unwrap();
        let d8 = measure_cpi_div(&pd, 8, None).unwrap();
        let d10 = measure_cpi_div(&pd, 10, None).unwrap();
        let rel = (d10.c_pi - d8.c_pi).abs() / d8.c_pi;
        assert!(rel < 0.05, "div c_pi drift {rel:.3}");
    }

    #[test]
    fn elementwise_cpi_uniform_across_refinement() {
        // Uniform refinement of the structured mesh keeps element shapes, so
        // the mapped per-element measurement must be h-uniform.
        let pg = PiGrad::build(1, 6).unwrap();
        let pd = PiDiv::build(1, 6).unwrap();
        let mut mesh = Mesh::unit_square(2).unwrap();
        let mut grad_vals = Vec::new();
        let mut div_vals = Vec::new();
        for _level in 0..3 {
            let g = measure_cpi_grad(&pg, 6, Some((&mesh, 0))).unwrap();
            let d = measure_cpi_div(&pd, 6, Some((&mesh, 0))).unwrap();
            grad_vals.push(g.c_pi);
            div_vals.push(d.c_pi);
            mesh = mesh.refine_uniform().unwrap();
        }
        for w in grad_vals.windows(2) {
            assert!((w[1] - w[0]).abs() / w[0] < 0.10, "grad drift {w:?}");
        }
        for w in div_vals.windows(2) {
            assert!((w[1] - w[0]).abs() / w[0] < 0.10, "div drift {w:?}");
        }
    }
}
