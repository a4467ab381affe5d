//! The H(div) interpolation operator into the normal-trace-constrained
//! subspace of the degree-(p+1) Raviart-Thomas space.
//!
//! Construction on the reference element: orthonormalize the RT generators,
//! build the L2(dK)-orthogonal complement of the continuous boundary space
//! inside the discontinuous one, kill the complement components of the
//! normal trace to get the constrained space, then solve the square system
//! of volume moments against P_p(K;V) and boundary moments against the
//! continuous trace space.

use super::SquareSystem;
use crate::refelem::quadrature::{edge_rule, quadrature_rule, EdgeRule, QuadratureRule};
use crate::refelem::scalar::ScalarBasis;
use crate::refelem::trace::{edge_lengths, edge_outward_normal, edge_point, TraceBasis};
use crate::refelem::{dim_p, legendre_mode, monomial};
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector, LU};
use std::sync::Arc;

/// Vector polynomial probe given by value and divergence evaluators.
pub struct VecProbe<'a> {
    pub val: &'a dyn Fn(f64, f64) -> [f64; 2],
    pub div: &'a dyn Fn(f64, f64) -> f64,
}

/// Image in the constrained RT space, evaluable pointwise.
pub struct DivImage<'a> {
    op: &'a PiDiv,
    /// Coefficients over the constrained-space basis.
    pub coeffs: DVector<f64>,
}

impl<'a> DivImage<'a> {
    pub fn from_coeffs(op: &'a PiDiv, coeffs: DVector<f64>) -> DivImage<'a> {
        DivImage { op, coeffs }
    }
}

impl DivImage<'_> {
    pub fn eval(&self, x: f64, y: f64) -> [f64; 2] {
        let gen_c = &self.op.to_generators * &self.coeffs;
        let mut out = [0.0; 2];
        for (g, c) in gen_c.iter().enumerate() {
            if *c != 0.0 {
                let v = self.op.gen_val(g, x, y);
                out[0] += c * v[0];
                out[1] += c * v[1];
            }
        }
        out
    }

    pub fn div(&self, x: f64, y: f64) -> f64 {
        let gen_c = &self.op.to_generators * &self.coeffs;
        gen_c
            .iter()
            .enumerate()
            .map(|(g, c)| c * self.op.gen_div(g, x, y))
            .sum()
    }
}

pub struct PiDiv {
    pub p: usize,
    pub scalar: Arc<ScalarBasis>,
    pub trace: TraceBasis,
    pub diagnostics: SquareSystem,
    /// Margins of the numerically computed subspaces: smallest retained and
    /// largest discarded singular values of the complement and nullspace
    /// computations.
    pub complement_gap: f64,
    pub constraint_gap: f64,
    /// Maps constrained-space coefficients to RT generator coefficients.
    to_generators: DMatrix<f64>,
    lu: LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    vol: QuadratureRule,
    edge: EdgeRule,
    p_dim: usize,
    homog: Vec<(usize, usize)>,
}

impl PiDiv {
    fn gen_val(&self, g: usize, x: f64, y: f64) -> [f64; 2] {
        gen_val(&self.scalar, &self.homog, self.p_dim_rt(), g, x, y)
    }

    fn gen_div(&self, g: usize, x: f64, y: f64) -> f64 {
        gen_div(&self.scalar, &self.homog, self.p_dim_rt(), g, x, y)
    }

    /// dim P_{p+1}: the scalar factor of the vector part of RT_{p+1}.
    fn p_dim_rt(&self) -> usize {
        dim_p(self.p + 1)
    }

    pub fn build(p: usize, probe_degree: usize) -> Result<PiDiv> {
        let d_all = probe_degree.max(p + 2);
        let scalar = Arc::new(ScalarBasis::orthonormal(d_all)?);
        let trace = TraceBasis::build(p)?;
        let vol = quadrature_rule(2 * d_all + 2)?;
        let edge = edge_rule(2 * d_all + 2)?;
        let p_dim = dim_p(p);
        let p1_dim = dim_p(p + 1);
        let n_gen = 2 * p1_dim + (p + 2);
        let homog: Vec<(usize, usize)> = (0..=p + 1).map(|i| (p + 1 - i, i)).collect();

        // Orthonormalize the RT generators in L2(K;V).
        let nq = vol.len();
        let mut samples = DMatrix::<f64>::zeros(2 * nq, n_gen);
        for qi in 0..nq {
            let [x, y] = vol.xy(qi);
            let sw = vol.weights[qi].sqrt();
            for g in 0..n_gen {
                let v = gen_val(&scalar, &homog, p1_dim, g, x, y);
                samples[(qi, g)] = sw * v[0];
                samples[(nq + qi, g)] = sw * v[1];
            }
        }
        let ortho = mgs_coeffs(&samples)?;

        // Discontinuous boundary modes of degree p+1, orthonormal in
        // L2(dK): per-edge Legendre scaled by 1/sqrt(edge length).
        let lens = edge_lengths();
        let n_disc = 3 * (p + 2);
        let n_tilde = trace.tilde_dim();

        // T[t, d] = <tilde_t, disc_d>.
        let mut t_mat = DMatrix::<f64>::zeros(n_tilde, n_disc);
        for e in 0..3 {
            for (qi, &t) in edge.points.iter().enumerate() {
                let w = edge.weights[qi] * lens[e];
                for ti in 0..n_tilde {
                    let tv = trace.eval_tilde(ti, e, t);
                    if tv == 0.0 {
                        continue;
                    }
                    for k in 0..=(p + 1) {
                        let mu = legendre_mode(k, t) / lens[e].sqrt();
                        t_mat[(ti, e * (p + 2) + k)] += w * tv * mu;
                    }
                }
            }
        }
        let (perp, complement_gap) = nullspace(&t_mat, 3)?;

        // Normal-trace constraint: <perp_k, rt_j . n> = 0.
        // First the moments of each orthonormal RT function against the
        // orthonormal disc modes.
        let mut disc_mom = DMatrix::<f64>::zeros(n_disc, n_gen);
        for e in 0..3 {
            let nh = edge_outward_normal(e);
            for (qi, &t) in edge.points.iter().enumerate() {
                let w = edge.weights[qi] * lens[e];
                let xh = edge_point(e, t);
                for g in 0..n_gen {
                    let v = gen_val(&scalar, &homog, p1_dim, g, xh[0], xh[1]);
                    let vn = v[0] * nh[0] + v[1] * nh[1];
                    for k in 0..=(p + 1) {
                        let mu = legendre_mode(k, t) / lens[e].sqrt();
                        disc_mom[(e * (p + 2) + k, g)] += w * vn * mu;
                    }
                }
            }
        }
        let disc_mom_ortho = &disc_mom * &ortho; // against orthonormal RT funcs
        let constraint = perp.transpose() * &disc_mom_ortho; // 3 x n_rt
        let (bmat, constraint_gap) = nullspace(&constraint, n_gen - 3)?;

        let n_b = n_gen - 3;
        let expect = 2 * p_dim + 3 * (p + 1);
        if n_b != expect {
            return Err(Error::Singular {
                context: format!("constrained RT space is not square ({n_b} vs {expect})"),
                sigma_min: 0.0,
            });
        }

        // Square system over the constrained basis.
        let to_generators = &ortho * &bmat;
        let mut m = DMatrix::<f64>::zeros(n_b, n_b);
        // Volume moments against orthonormal P_p(K;V).
        for qi in 0..nq {
            let [x, y] = vol.xy(qi);
            let w = vol.weights[qi];
            let sv = scalar.eval(p_dim, x, y);
            for j in 0..n_b {
                let mut val = [0.0; 2];
                for g in 0..n_gen {
                    let c = to_generators[(g, j)];
                    if c != 0.0 {
                        let v = gen_val(&scalar, &homog, p1_dim, g, x, y);
                        val[0] += c * v[0];
                        val[1] += c * v[1];
                    }
                }
                for s in 0..p_dim {
                    for comp in 0..2 {
                        m[(2 * s + comp, j)] += w * sv[s] * val[comp];
                    }
                }
            }
        }
        // Boundary moments against the continuous trace space.
        for e in 0..3 {
            let nh = edge_outward_normal(e);
            for (qi, &t) in edge.points.iter().enumerate() {
                let w = edge.weights[qi] * lens[e];
                let xh = edge_point(e, t);
                for j in 0..n_b {
                    let mut vn = 0.0;
                    for g in 0..n_gen {
                        let c = to_generators[(g, j)];
                        if c != 0.0 {
                            let v = gen_val(&scalar, &homog, p1_dim, g, xh[0], xh[1]);
                            vn += c * (v[0] * nh[0] + v[1] * nh[1]);
                        }
                    }
                    for ti in 0..n_tilde {
                        let tv = trace.eval_tilde(ti, e, t);
                        if tv != 0.0 {
                            m[(2 * p_dim + ti, j)] += w * vn * tv;
                        }
                    }
                }
            }
        }

        let diagnostics = super::square_diagnostics(&m);
        if diagnostics.sigma_min <= 1e-12 * diagnostics.sigma_max {
            return Err(Error::Singular {
                context: "H(div) interpolation square system".into(),
                sigma_min: diagnostics.sigma_min,
            });
        }
        let lu = m.lu();
        Ok(PiDiv {
            p,
            scalar,
            trace,
            diagnostics,
            complement_gap,
            constraint_gap,
            to_generators,
            lu,
            vol,
            edge,
            p_dim,
            homog,
        })
    }

    pub fn apply(&self, probe: &VecProbe) -> DivImage<'_> {
        let n_b = self.to_generators.ncols();
        let n_tilde = self.trace.tilde_dim();
        let mut rhs = DVector::<f64>::zeros(n_b);
        for qi in 0..self.vol.len() {
            let [x, y] = self.vol.xy(qi);
            let w = self.vol.weights[qi];
            let tv = (probe.val)(x, y);
            let sv = self.scalar.eval(self.p_dim, x, y);
            for s in 0..self.p_dim {
                for comp in 0..2 {
                    rhs[2 * s + comp] += w * sv[s] * tv[comp];
                }
            }
        }
        let lens = edge_lengths();
        for e in 0..3 {
            let nh = edge_outward_normal(e);
            for (qi, &t) in self.edge.points.iter().enumerate() {
                let w = self.edge.weights[qi] * lens[e];
                let xh = edge_point(e, t);
                let tv = (probe.val)(xh[0], xh[1]);
                let vn = tv[0] * nh[0] + tv[1] * nh[1];
                for ti in 0..n_tilde {
                    let tvv = self.trace.eval_tilde(ti, e, t);
                    if tvv != 0.0 {
                        rhs[2 * self.p_dim + ti] += w * vn * tvv;
                    }
                }
            }
        }
        let coeffs = self.lu.solve(&rhs).expect("verified nonsingular");
        DivImage { op: self, coeffs }
    }
}

fn gen_val(
    scalar: &ScalarBasis,
    homog: &[(usize, usize)],
    p1_dim: usize,
    g: usize,
    x: f64,
    y: f64,
) -> [f64; 2] {
    if g < 2 * p1_dim {
        let (s, c) = (g / 2, g % 2);
        let v = scalar.eval(s + 1, x, y)[s];
        if c == 0 {
            [v, 0.0]
        } else {
            [0.0, v]
        }
    } else {
        let (i, j) = homog[g - 2 * p1_dim];
        let (xc, yc) = (x - monomial::CENTER, y - monomial::CENTER);
        let m = xc.powi(i as i32) * yc.powi(j as i32);
        [xc * m, yc * m]
    }
}

fn gen_div(
    scalar: &ScalarBasis,
    homog: &[(usize, usize)],
    p1_dim: usize,
    g: usize,
    x: f64,
    y: f64,
) -> f64 {
    if g < 2 * p1_dim {
        let (s, c) = (g / 2, g % 2);
        let (_, grads) = scalar.eval_grad(s + 1, x, y);
        grads[s][c]
    } else {
        let (i, j) = homog[g - 2 * p1_dim];
        let deg = (i + j) as f64;
        let (xc, yc) = (x - monomial::CENTER, y - monomial::CENTER);
        (deg + 2.0) * xc.powi(i as i32) * yc.powi(j as i32)
    }
}

/// Modified Gram-Schmidt on weighted sample columns; returns the
/// coefficient matrix of the orthonormal combination.
fn mgs_coeffs(samples: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = samples.ncols();
    let mut v = samples.clone();
    let mut r = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut col = v.column(j).clone_owned();
        for _pass in 0..2 {
            for i in 0..j {
                let qi = v.column(i);
                let proj = qi.dot(&col);
                r[(i, j)] += proj;
                col.axpy(-proj, &qi, 1.0);
            }
        }
        let norm = col.norm();
        if norm <= 1e-13 * samples.column(j).norm().max(1.0) {
            return Err(Error::Singular {
                context: "RT generator set is rank deficient".into(),
                sigma_min: norm,
            });
        }
        r[(j, j)] = norm;
        col /= norm;
        v.set_column(j, &col);
    }
    let mut coeffs = DMatrix::<f64>::identity(n, n);
    for j in 0..n {
        for i in (0..n).rev() {
            let mut s = coeffs[(i, j)];
            for k in i + 1..n {
                s -= r[(i, k)] * coeffs[(k, j)];
            }
            coeffs[(i, j)] = s / r[(i, i)];
        }
    }
    Ok(coeffs)
}

/// Orthonormal nullspace basis of an underdetermined matrix with the
/// expected nullity; the second value is the separation ratio between the
/// discarded and retained singular values.
pub(crate) fn nullspace(m: &DMatrix<f64>, nullity: usize) -> Result<(DMatrix<f64>, f64)> {
    let n = m.ncols();
    let mtm = m.transpose() * m;
    let eig = mtm.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap());
    let discarded = eig.eigenvalues[order[nullity - 1]].abs().sqrt();
    let retained = eig.eigenvalues[order[nullity]].abs().sqrt();
    if !(retained > 1e-10 * eig.eigenvalues[order[n - 1]].abs().sqrt().max(1.0)) {
        return Err(Error::Singular {
            context: "nullspace dimension larger than expected".into(),
            sigma_min: retained,
        });
    }
    let mut basis = DMatrix::<f64>::zeros(n, nullity);
    for (c, &i) in order[..nullity].iter().enumerate() {
        basis.set_column(c, &eig.eigenvectors.column(i));
    }
    Ok((basis, retained / discarded.max(1e-300)))
}
