//! Local blocks of the ultraweak Laplace form
//!   b(U, V) = (sigma, tau) - (u, div tau) + <u^, tau.n>
//!             - (sigma, grad v) + <v, sn^>,
//! and of the test Gram
//!   (V, V')_V = (tau, tau') + (div tau, div tau') + (v, v') + (grad v, grad v').
//!
//! Test rows: tau components first (scalar-major, component-minor), then v.
//! Trial columns follow `TrialDofMap::local_to_global`.

use super::{ElementKit, LocalFormBlocks, LocalGram};
use crate::mesh::Mesh;
use crate::refelem::dim_p;
use crate::spaces::ProblemKind;
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// B_K and the load for one element. `f` is the volume load evaluated at
/// physical points.
pub fn local_form_blocks(
    kit: &ElementKit,
    mesh: &Mesh,
    elem: usize,
    f: &dyn Fn(f64, f64) -> f64,
) -> LocalFormBlocks {
    assert_eq!(kit.kind, ProblemKind::Poisson);
    let p_dim = dim_p(kit.p);
    let nt_tau = dim_p(kit.layout.r_tau);
    let nt_v = dim_p(kit.layout.r_v);
    let n_test = 2 * nt_tau + nt_v;
    let (n_sig, n_u, n_tr, _n_fx, _) = kit.col_counts();
    let n_cols = kit.n_cols();
    let col_u = n_sig;
    let col_tr = col_u + n_u;
    let col_fx = col_tr + n_tr;

    let aff = &mesh.affine[elem];
    let det = aff.det;
    let ait = kit.a_inv_t(mesh, elem);

    let mut b = DMatrix::<f64>::zeros(n_test, n_cols);

    // (sigma, tau): sigma = phi_s e_c, tau = phi_i e_a.
    for i in 0..nt_tau {
        for s in 0..p_dim {
            let m = det * kit.mass[(i, s)];
            for a in 0..2 {
                b[(2 * i + a, 2 * s + a)] += m;
            }
        }
    }

    // -(u, div tau): div tau_(i,a) = sum_k ait[a][k] d_k phi_i.
    for i in 0..nt_tau {
        for a in 0..2 {
            let row = 2 * i + a;
            for s in 0..p_dim {
                let mut v = 0.0;
                for k in 0..2 {
                    v += ait[a][k] * kit.ca[k][(i, s)];
                }
                b[(row, col_u + s)] -= det * v;
            }
        }
    }

    // -(sigma, grad v): grad v_j = A^{-T} grad^ phi_j.
    for j in 0..nt_v {
        let row = 2 * nt_tau + j;
        for s in 0..p_dim {
            for c in 0..2 {
                let mut v = 0.0;
                for k in 0..2 {
                    v += ait[c][k] * kit.ca[k][(j, s)];
                }
                b[(row, 2 * s + c)] -= det * v;
            }
        }
    }

    // Skeleton terms, facet by facet in the global facet parameter.
    let nq = kit.edge.len();
    for le in 0..3 {
        let fu = mesh.tri_facets[elem][le];
        let facet = &mesh.facets[fu.facet];
        let n_out = [fu.sign * facet.normal[0], fu.sign * facet.normal[1]];
        let vals = &kit.edge_vals[le][if fu.forward { 0 } else { 1 }];
        let n_trace_local = 3 + 3 * kit.p;

        for qi in 0..nq {
            let wq = kit.edge.weights[qi] * facet.length;

            // <u^, tau.n_out>
            for mode in 0..n_trace_local {
                let mv = kit.trace_mode_at(mesh, elem, le, mode, qi);
                if mv == 0.0 {
                    continue;
                }
                let col = col_tr + mode;
                for i in 0..nt_tau {
                    let phi = vals[(qi, i)];
                    for a in 0..2 {
                        b[(2 * i + a, col)] += wq * mv * phi * n_out[a];
                    }
                }
            }

            // <v, sn^>: stored flux flipped to the element-outward side.
            for k in 0..=kit.p {
                let col = col_fx + le * (kit.p + 1) + k;
                let mu = kit.flux_modes[(qi, k)] * fu.sign;
                for j in 0..nt_v {
                    b[(2 * nt_tau + j, col)] += wq * mu * vals[(qi, j)];
                }
            }
        }
    }

    // Load: (f, v).
    let mut load = DVector::<f64>::zeros(n_test);
    for (qi, w) in kit.load_vol.weights.iter().enumerate() {
        let xh = kit.load_vol.xy(qi);
        let x = aff.apply(xh);
        let fv = f(x[0], x[1]) * w * det;
        if fv == 0.0 {
            continue;
        }
        let phis = kit.scalar.eval(nt_v, xh[0], xh[1]);
        for j in 0..nt_v {
            load[2 * nt_tau + j] += fv * phis[j];
        }
    }

    LocalFormBlocks {
        elem,
        b,
        beta_row: None,
        load,
    }
}

/// G_K: SPD Gram of the broken H(div) x H1 inner product on the local test
/// basis, with the Cholesky factor cached.
pub fn local_gram(kit: &ElementKit, mesh: &Mesh, elem: usize) -> Result<LocalGram> {
    assert_eq!(kit.kind, ProblemKind::Poisson);
    let nt_tau = dim_p(kit.layout.r_tau);
    let nt_v = dim_p(kit.layout.r_v);
    let n_test = 2 * nt_tau + nt_v;
    let det = mesh.affine[elem].det;
    let ait = kit.a_inv_t(mesh, elem);

    let mut g = DMatrix::<f64>::zeros(n_test, n_test);

    // tau block: (tau, tau') + (div tau, div tau').
    for i in 0..nt_tau {
        for j in 0..nt_tau {
            let m = kit.mass[(i, j)];
            for a in 0..2 {
                for bc in 0..2 {
                    let mut dd = 0.0;
                    for k in 0..2 {
                        for l in 0..2 {
                            dd += ait[a][k] * ait[bc][l] * kit.kab[k][l][(i, j)];
                        }
                    }
                    let mut val = det * dd;
                    if a == bc {
                        val += det * m;
                    }
                    g[(2 * i + a, 2 * j + bc)] += val;
                }
            }
        }
    }

    // v block: (v, v') + (grad v, grad v') with the pulled-back metric.
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
            g[(2 * nt_tau + i, 2 * nt_tau + j)] += det * val;
        }
    }

    let chol = g.clone().cholesky().ok_or(Error::NotSpd {
        pivot: usize::MAX,
        value: f64::NAN,
    })?;
    Ok(LocalGram { elem, g, chol })
}
