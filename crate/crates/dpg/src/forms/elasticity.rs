//! Local blocks of the ultraweak plane-strain elasticity form
//!   b(U, V) = (A sigma, tau) + (u, div tau) - <u^, tau n>
//!             + Q0^{-1} (alpha I, A tau)
//!             + (sigma, grad v) + (sigma, q) - <v, sn^>
//!             + Q0^{-1} (A sigma, beta I),
//! with full-matrix trial sigma, symmetric test tau, skew test q of degree
//! p, and global scalars alpha (trial) and beta (test). The beta pairing is
//! returned as a per-element partial row to be reduced globally.

use super::{ElementKit, LocalFormBlocks, LocalGram};
use crate::mesh::Mesh;
use crate::refelem::basis::{components, BasisKind};
use crate::refelem::dim_p;
use crate::spaces::ProblemKind;
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector, Matrix3};

/// Generalized compliance: element-wise constant SPD action on symmetric
/// 2x2 matrices. The trial stress ranges over full matrices; the action is
/// applied to the symmetric part (the skew part is controlled by the
/// (sigma, q) pairing).
#[derive(Debug, Clone)]
pub enum ComplianceTensor {
    /// Isotropic with per-element Lame-type parameters.
    Isotropic { mu: Vec<f64>, lambda: Vec<f64> },
    /// One action matrix on the orthonormal symmetric components,
    /// shared by every element.
    General(Matrix3<f64>),
}

impl ComplianceTensor {
    pub fn isotropic_uniform(n_elems: usize, mu: f64, lambda: f64) -> Self {
        ComplianceTensor::Isotropic {
            mu: vec![mu; n_elems],
            lambda: vec![lambda; n_elems],
        }
    }

    pub fn identity() -> Self {
        ComplianceTensor::General(Matrix3::identity())
    }

    /// Action matrix on the orthonormal symmetric components
    /// (e11, e22, (e12 + e21)/sqrt(2)).
    pub fn action_matrix(&self, elem: usize) -> Matrix3<f64> {
        match self {
            ComplianceTensor::General(m) => *m,
            ComplianceTensor::Isotropic { mu, lambda } => {
                let (mu, la) = (mu[elem], lambda[elem]);
                // A tau = (tau - la/(2mu + 2la) tr(tau) I) / (2 mu).
                let c = la / (2.0 * mu + 2.0 * la);
                let inv2mu = 1.0 / (2.0 * mu);
                Matrix3::new(
                    inv2mu * (1.0 - c),
                    -inv2mu * c,
                    0.0,
                    -inv2mu * c,
                    inv2mu * (1.0 - c),
                    0.0,
                    0.0,
                    0.0,
                    inv2mu,
                )
            }
        }
    }

    /// Apply to a symmetric 2x2 matrix on element `elem`.
    pub fn apply(&self, elem: usize, m: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
        let s = std::f64::consts::SQRT_2;
        let comps = nalgebra::Vector3::new(m[0][0], m[1][1], s * m[0][1]);
        let out = self.action_matrix(elem) * comps;
        [[out[0], out[2] / s], [out[2] / s, out[1]]]
    }

    /// Essential infimum over elements of trace(A_K I).
    pub fn q0(&self, n_elems: usize) -> f64 {
        (0..n_elems)
            .map(|e| {
                let ai = self.apply(e, [[1.0, 0.0], [0.0, 1.0]]);
                ai[0][0] + ai[1][1]
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Reject tensors whose action is not SPD on symmetric matrices.
    pub fn validate(&self, n_elems: usize) -> Result<()> {
        for e in 0..n_elems {
            let m = self.action_matrix(e);
            let sym = 0.5 * (m + m.transpose());
            if (m - sym).abs().max() > 1e-12 * m.abs().max() {
                return Err(Error::Invalid("compliance action is not symmetric".into()));
            }
            let eig = sym.symmetric_eigen();
            if eig.eigenvalues.min() <= 0.0 {
                return Err(Error::Invalid(format!(
                    "compliance action is not positive definite on element {e}"
                )));
            }
        }
        Ok(())
    }
}

/// Contraction helpers between component matrices.
fn mat_dot(a: &[[f64; 2]; 2], b: &[[f64; 2]; 2]) -> f64 {
    let mut s = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            s += a[i][j] * b[i][j];
        }
    }
    s
}

fn sym_part(m: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
    [
        [m[0][0], 0.5 * (m[0][1] + m[1][0])],
        [0.5 * (m[0][1] + m[1][0]), m[1][1]],
    ]
}

/// Per-element compliance contractions used by the form.
struct ComplianceTables {
    /// a43[(ms, m)] = A(sym E_m) : S_ms for full components m, sym test ms.
    a43: [[f64; 4]; 3],
    /// tr(A(sym E_m)) for the beta row.
    tr_full: [f64; 4],
    /// tr(A(S_ms)) for the alpha column.
    tr_sym: [f64; 3],
}

fn compliance_tables(c: &ComplianceTensor, elem: usize) -> ComplianceTables {
    let full = components(BasisKind::FullMatrix);
    let sym = components(BasisKind::SymMatrix);
    let mut a43 = [[0.0; 4]; 3];
    let mut tr_full = [0.0; 4];
    let mut tr_sym = [0.0; 3];
    for (m, em) in full.iter().enumerate() {
        let am = c.apply(elem, sym_part(&em.as_matrix()));
        tr_full[m] = am[0][0] + am[1][1];
        for (ms, es) in sym.iter().enumerate() {
            a43[ms][m] = mat_dot(&am, &es.as_matrix());
        }
    }
    for (ms, es) in sym.iter().enumerate() {
        let am = c.apply(elem, es.as_matrix());
        tr_sym[ms] = am[0][0] + am[1][1];
    }
    ComplianceTables {
        a43,
        tr_full,
        tr_sym,
    }
}

/// B_K, the beta partial row, and the load for one element. `f` is the
/// vector volume load at physical points; `q0` the global compliance
/// infimum.
pub fn local_form_blocks(
    kit: &ElementKit,
    mesh: &Mesh,
    elem: usize,
    c: &ComplianceTensor,
    q0: f64,
    f: &dyn Fn(f64, f64) -> [f64; 2],
) -> LocalFormBlocks {
    assert_eq!(kit.kind, ProblemKind::Elasticity);
    let p_dim = dim_p(kit.p);
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
    let det = aff.det;
    let ait = kit.a_inv_t(mesh, elem);
    let tabs = compliance_tables(c, elem);
    let sym = components(BasisKind::SymMatrix);
    let full = components(BasisKind::FullMatrix);
    let skew = components(BasisKind::SkewMatrix);
    let q0_inv = 1.0 / q0;

    let mut b = DMatrix::<f64>::zeros(n_test, n_cols);
    let mut beta = DVector::<f64>::zeros(n_cols);

    // (A sigma, tau): sigma = phi_s E_m, tau = phi_i S_ms.
    for i in 0..nt_tau {
        for ms in 0..3 {
            let row = 3 * i + ms;
            for s in 0..p_dim {
                let mass = det * kit.mass[(i, s)];
                for m in 0..4 {
                    b[(row, 4 * s + m)] += mass * tabs.a43[ms][m];
                }
            }
        }
    }

    // +(u, div tau): div(phi_i S_ms) = S_ms (A^{-T} grad phi_i).
    for i in 0..nt_tau {
        for ms in 0..3 {
            let row = 3 * i + ms;
            let sm = sym[ms].as_matrix();
            for cc in 0..2 {
                // coefficient of d_k phi_i in component cc of the divergence
                for k in 0..2 {
                    let coef = sm[cc][0] * ait[0][k] + sm[cc][1] * ait[1][k];
                    if coef == 0.0 {
                        continue;
                    }
                    for s in 0..p_dim {
                        b[(row, col_u + 2 * s + cc)] += det * coef * kit.ca[k][(i, s)];
                    }
                }
            }
        }
    }

    // +Q0^{-1} (alpha I, A tau) = alpha Q0^{-1} int phi_i tr(A(S_ms)).
    for i in 0..nt_tau {
        for ms in 0..3 {
            b[(3 * i + ms, col_alpha)] += q0_inv * det * kit.intphi[i] * tabs.tr_sym[ms];
        }
    }

    // +(sigma, grad v): grad(phi_j e_c) = e_c (A^{-T} grad phi_j)^T.
    for j in 0..nt_v {
        for cc in 0..2 {
            let row = row_v0 + 2 * j + cc;
            for m in 0..4 {
                let em = full[m].as_matrix();
                for k in 0..2 {
                    let coef = em[cc][0] * ait[0][k] + em[cc][1] * ait[1][k];
                    if coef == 0.0 {
                        continue;
                    }
                    for s in 0..p_dim {
                        b[(row, 4 * s + m)] += det * coef * kit.ca[k][(j, s)];
                    }
                }
            }
        }
    }

    // +(sigma, q): q = phi_l W.
    for l in 0..p_dim {
        let row = row_q0 + l;
        let w = skew[0].as_matrix();
        for s in 0..p_dim {
            let mass = det * kit.mass[(l, s)];
            for m in 0..4 {
                let d = mat_dot(&full[m].as_matrix(), &w);
                if d != 0.0 {
                    b[(row, 4 * s + m)] += mass * d;
                }
            }
        }
    }

    // +Q0^{-1} (A sigma, beta I): beta row over sigma columns.
    for s in 0..p_dim {
        for m in 0..4 {
            beta[4 * s + m] += q0_inv * det * kit.intphi[s] * tabs.tr_full[m];
        }
    }

    // Skeleton terms.
    let nq = kit.edge.len();
    for le in 0..3 {
        let fu = mesh.tri_facets[elem][le];
        let facet = &mesh.facets[fu.facet];
        let n_out = [fu.sign * facet.normal[0], fu.sign * facet.normal[1]];
        let vals = &kit.edge_vals[le][if fu.forward { 0 } else { 1 }];
        let n_trace_scalar = 3 + 3 * kit.p;

        for qi in 0..nq {
            let wq = kit.edge.weights[qi] * facet.length;

            // -<u^, tau n_out>: u^ = mode * e_c, tau n_out = phi_i S_ms n_out.
            for mode in 0..n_trace_scalar {
                let mv = kit.trace_mode_at(mesh, elem, le, mode, qi);
                if mv == 0.0 {
                    continue;
                }
                for i in 0..nt_tau {
                    let phi = vals[(qi, i)];
                    for ms in 0..3 {
                        let sm = sym[ms].as_matrix();
                        let tn = [
                            sm[0][0] * n_out[0] + sm[0][1] * n_out[1],
                            sm[1][0] * n_out[0] + sm[1][1] * n_out[1],
                        ];
                        for cc in 0..2 {
                            b[(3 * i + ms, col_tr + 2 * mode + cc)] -= wq * mv * phi * tn[cc];
                        }
                    }
                }
            }

            // -<v, sn^>: stored vector flux, flipped per element.
            for k in 0..=kit.p {
                let mu = kit.flux_modes[(qi, k)] * fu.sign;
                for cc in 0..2 {
                    let col = col_fx + le * 2 * (kit.p + 1) + 2 * k + cc;
                    for j in 0..nt_v {
                        b[(row_v0 + 2 * j + cc, col)] -= wq * mu * vals[(qi, j)];
                    }
                }
            }
        }
    }

    // Load: (f, v).
    let mut load = DVector::<f64>::zeros(n_test);
    for (qi, w) in kit.load_vol.weights.iter().enumerate() {
        let xh = kit.load_vol.xy(qi);
        let x = aff.apply(xh);
        let fv = f(x[0], x[1]);
        let phis = kit.scalar.eval(nt_v, xh[0], xh[1]);
        for j in 0..nt_v {
            for cc in 0..2 {
                load[row_v0 + 2 * j + cc] += w * det * fv[cc] * phis[j];
            }
        }
    }

    LocalFormBlocks {
        elem,
        b,
        beta_row: Some(beta),
        load,
    }
}

/// G_K for the elasticity test norm: H(div;S) for tau, H1 vector for v,
/// L2 for skew q; the global |beta|^2 block lives outside the element.
pub fn local_gram(kit: &ElementKit, mesh: &Mesh, elem: usize) -> Result<LocalGram> {
    assert_eq!(kit.kind, ProblemKind::Elasticity);
    let nt_tau = dim_p(kit.layout.r_tau);
    let nt_v = dim_p(kit.layout.r_v);
    let p_dim = dim_p(kit.p);
    let n_test = kit.layout.n_test();
    let det = mesh.affine[elem].det;
    let ait = kit.a_inv_t(mesh, elem);
    let sym = components(BasisKind::SymMatrix);
    let row_v0 = 3 * nt_tau;
    let row_q0 = row_v0 + 2 * nt_v;

    let mut g = DMatrix::<f64>::zeros(n_test, n_test);

    // tau block: L2 (Frobenius, orthonormal components) + div.div.
    // div(phi_i S_ms) component c carries coefficient vms[c][k] of d_k phi_i.
    let vms: Vec<[[f64; 2]; 2]> = (0..3)
        .map(|ms| {
            let sm = sym[ms].as_matrix();
            let mut v = [[0.0; 2]; 2];
            for c in 0..2 {
                for k in 0..2 {
                    v[c][k] = sm[c][0] * ait[0][k] + sm[c][1] * ait[1][k];
                }
            }
            v
        })
        .collect();
    for i in 0..nt_tau {
        for j in 0..nt_tau {
            let m = kit.mass[(i, j)];
            for ms in 0..3 {
                for ns in 0..3 {
                    let mut dd = 0.0;
                    for cc in 0..2 {
                        for k in 0..2 {
                            for l in 0..2 {
                                dd += vms[ms][cc][k] * vms[ns][cc][l] * kit.kab[k][l][(i, j)];
                            }
                        }
                    }
                    let mut val = det * dd;
                    if ms == ns {
                        val += det * m;
                    }
                    g[(3 * i + ms, 3 * j + ns)] += val;
                }
            }
        }
    }

    // v block: vector H1 with the pulled-back metric, diagonal in comps.
    let mut met = [[0.0; 2]; 2];
    for k in 0..2 {
        for l in 0..2 {
            for a in 0..2 {
                met[k][l] += ait[a][k] * ait[a][l];
            }
        }
    }
    for i in 0..nt_v {
        for j in 0..nt_v {
            let mut val = kit.mass[(i, j)];
            for k in 0..2 {
                for l in 0..2 {
                    val += met[k][l] * kit.kab[k][l][(i, j)];
                }
            }
            for cc in 0..2 {
                g[(row_v0 + 2 * i + cc, row_v0 + 2 * j + cc)] += det * val;
            }
        }
    }

    // q block: plain L2.
    for i in 0..p_dim {
        for j in 0..p_dim {
            g[(row_q0 + i, row_q0 + j)] += det * kit.mass[(i, j)];
        }
    }

    let chol = g.clone().cholesky().ok_or(Error::NotSpd {
        pivot: usize::MAX,
        value: f64::NAN,
    })?;
    Ok(LocalGram { elem, g, chol })
}
