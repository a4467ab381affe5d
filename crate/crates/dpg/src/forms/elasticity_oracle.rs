//! Brute-force quadrature oracle for the elasticity element blocks,
//! integrating every term pointwise at double exactness. Test-only.

use super::elasticity::ComplianceTensor;
use super::ElementKit;
use crate::mesh::Mesh;
use crate::refelem::basis::{components, BasisKind};
use crate::refelem::quadrature::{edge_rule, quadrature_rule};
use crate::refelem::trace::edge_point;
use crate::refelem::{dim_p, legendre_mode};
use nalgebra::{DMatrix, DVector};

fn mat_dot(a: &[[f64; 2]; 2], b: &[[f64; 2]; 2]) -> f64 {
    (0..2)
        .flat_map(|i| (0..2).map(move |j| (i, j)))
        .map(|(i, j)| a[i][j] * b[i][j])
        .sum()
}

fn sym_part(m: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
    [
        [m[0][0], 0.5 * (m[0][1] + m[1][0])],
        [0.5 * (m[0][1] + m[1][0]), m[1][1]],
    ]
}

/// Dense (B_K, G_K, beta row) by direct quadrature.
pub fn dense_blocks(
    kit: &ElementKit,
    mesh: &Mesh,
    elem: usize,
    c: &ComplianceTensor,
    q0: f64,
) -> (DMatrix<f64>, DMatrix<f64>, DVector<f64>) {
    let p = kit.p;
    let p_dim = dim_p(p);
    let nt_tau = dim_p(kit.layout.r_tau);
    let nt_v = dim_p(kit.layout.r_v);
    let n_test = kit.layout.n_test();
    let n_cols = kit.n_cols();
    let (n_sig, n_u, n_tr, n_fx, _) = kit.col_counts();
    let col_u = n_sig;
    let col_tr = col_u + n_u;
    let col_fx = col_tr + n_tr;
    let col_alpha = col_fx + n_fx;
    let row_v0 = 3 * nt_tau;
    let row_q0 = row_v0 + 2 * nt_v;

    let aff = &mesh.affine[elem];
    let vol = quadrature_rule(2 * kit.vol.exactness).unwrap();
    let edg = edge_rule(2 * kit.edge.exactness).unwrap();
    let sym = components(BasisKind::SymMatrix);
    let full = components(BasisKind::FullMatrix);
    let skew = components(BasisKind::SkewMatrix);
    let q0_inv = 1.0 / q0;

    let mut b = DMatrix::<f64>::zeros(n_test, n_cols);
    let mut g = DMatrix::<f64>::zeros(n_test, n_test);
    let mut beta = DVector::<f64>::zeros(n_cols);

    for qi in 0..vol.len() {
        let [xh, yh] = vol.xy(qi);
        let w = vol.weights[qi] * aff.det;
        let nmax = nt_tau.max(nt_v).max(p_dim);
        let (tv, tg) = kit.scalar.eval_grad(nmax, xh, yh);
        let gp: Vec<[f64; 2]> = tg.iter().map(|&gh| aff.push_gradient(gh)).collect();

        for i in 0..nt_tau {
            for ms in 0..3 {
                let row = 3 * i + ms;
                let sm = sym[ms].as_matrix();
                // (A sigma, tau)
                for s in 0..p_dim {
                    for m in 0..4 {
                        let asig = c.apply(elem, sym_part(&full[m].as_matrix()));
                        b[(row, 4 * s + m)] += w * tv[s] * tv[i] * mat_dot(&asig, &sm);
                    }
                }
                // (u, div tau); div(phi_i S_ms) = S_ms grad_phys(phi_i)
                let dv = [
                    sm[0][0] * gp[i][0] + sm[0][1] * gp[i][1],
                    sm[1][0] * gp[i][0] + sm[1][1] * gp[i][1],
                ];
                for s in 0..p_dim {
                    for cc in 0..2 {
                        b[(row, col_u + 2 * s + cc)] += w * tv[s] * dv[cc];
                    }
                }
                // Q0^{-1} (alpha I, A tau)
                let at = c.apply(elem, sm);
                b[(row, col_alpha)] += w * q0_inv * tv[i] * (at[0][0] + at[1][1]);
            }
        }

        for j in 0..nt_v {
            for cc in 0..2 {
                let row = row_v0 + 2 * j + cc;
                // (sigma, grad v): grad(phi_j e_cc) has row cc = grad_phys.
                for s in 0..p_dim {
                    for m in 0..4 {
                        let em = full[m].as_matrix();
                        b[(row, 4 * s + m)] +=
                            w * tv[s] * (em[cc][0] * gp[j][0] + em[cc][1] * gp[j][1]);
                    }
                }
            }
        }

        for l in 0..p_dim {
            let row = row_q0 + l;
            let wmat = skew[0].as_matrix();
            for s in 0..p_dim {
                for m in 0..4 {
                    b[(row, 4 * s + m)] += w * tv[l] * tv[s] * mat_dot(&full[m].as_matrix(), &wmat);
                }
            }
        }

        // beta row
        for s in 0..p_dim {
            for m in 0..4 {
                let asig = c.apply(elem, sym_part(&full[m].as_matrix()));
                beta[4 * s + m] += w * q0_inv * tv[s] * (asig[0][0] + asig[1][1]);
            }
        }

        // Gram
        for i in 0..nt_tau {
            for j in 0..nt_tau {
                for ms in 0..3 {
                    for ns in 0..3 {
                        let smi = sym[ms].as_matrix();
                        let smj = sym[ns].as_matrix();
                        let di = [
                            smi[0][0] * gp[i][0] + smi[0][1] * gp[i][1],
                            smi[1][0] * gp[i][0] + smi[1][1] * gp[i][1],
                        ];
                        let dj = [
                            smj[0][0] * gp[j][0] + smj[0][1] * gp[j][1],
                            smj[1][0] * gp[j][0] + smj[1][1] * gp[j][1],
                        ];
                        let mut val = di[0] * dj[0] + di[1] * dj[1];
                        val += tv[i] * tv[j] * mat_dot(&smi, &smj);
                        g[(3 * i + ms, 3 * j + ns)] += w * val;
                    }
                }
            }
        }
        for i in 0..nt_v {
            for j in 0..nt_v {
                let dot = gp[i][0] * gp[j][0] + gp[i][1] * gp[j][1];
                for cc in 0..2 {
                    g[(row_v0 + 2 * i + cc, row_v0 + 2 * j + cc)] += w * (tv[i] * tv[j] + dot);
                }
            }
        }
        for i in 0..p_dim {
            for j in 0..p_dim {
                g[(row_q0 + i, row_q0 + j)] += w * tv[i] * tv[j];
            }
        }
    }

    // Skeleton terms.
    for le in 0..3 {
        let fu = mesh.tri_facets[elem][le];
        let facet = &mesh.facets[fu.facet];
        let n_out = [fu.sign * facet.normal[0], fu.sign * facet.normal[1]];
        for (qi, &t) in edg.points.iter().enumerate() {
            let w = edg.weights[qi] * facet.length;
            let tl = if fu.forward { t } else { 1.0 - t };
            let xh = edge_point(le, tl);
            let tv = kit.scalar.eval(nt_tau.max(nt_v), xh[0], xh[1]);

            for mode in 0..(3 + 3 * p) {
                let mv = trace_mode(kit, mesh, elem, le, mode, t);
                if mv == 0.0 {
                    continue;
                }
                for i in 0..nt_tau {
                    for ms in 0..3 {
                        let sm = sym[ms].as_matrix();
                        let tn = [
                            sm[0][0] * n_out[0] + sm[0][1] * n_out[1],
                            sm[1][0] * n_out[0] + sm[1][1] * n_out[1],
                        ];
                        for cc in 0..2 {
                            b[(3 * i + ms, col_tr + 2 * mode + cc)] -= w * mv * tv[i] * tn[cc];
                        }
                    }
                }
            }
            for k in 0..=p {
                let mu = legendre_mode(k, t) * fu.sign;
                for cc in 0..2 {
                    let col = col_fx + le * 2 * (p + 1) + 2 * k + cc;
                    for j in 0..nt_v {
                        b[(row_v0 + 2 * j + cc, col)] -= w * mu * tv[j];
                    }
                }
            }
        }
    }

    (b, g, beta)
}

#[allow(clippy::manual_checked_ops)]
fn trace_mode(kit: &ElementKit, mesh: &Mesh, elem: usize, le: usize, mode: usize, t: f64) -> f64 {
    let f = &mesh.facets[mesh.tri_facets[elem][le].facet];
    if mode < 3 {
        let gv = mesh.tris[elem][mode];
        if f.a == gv {
            1.0 - t
        } else if f.b == gv {
            t
        } else {
            0.0
        }
    } else if kit.p == 0 {
        0.0
    } else {
        let m = mode - 3;
        let (me, k) = (m / kit.p, m % kit.p);
        if me != le {
            0.0
        } else {
            kit.trace.bubble(k, t)
        }
    }
}
