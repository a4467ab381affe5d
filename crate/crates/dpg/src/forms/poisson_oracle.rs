//! Brute-force quadrature oracle for the Poisson element blocks: every
//! entry is integrated pointwise at double exactness, with no use of the
//! precomputed reference tensors. Test-only.

use super::ElementKit;
use crate::mesh::Mesh;
use crate::refelem::quadrature::{edge_rule, quadrature_rule};
use crate::refelem::trace::edge_point;
use crate::refelem::{dim_p, legendre_mode};
use nalgebra::DMatrix;

/// Dense (B_K, G_K) for one element by direct quadrature.
pub fn dense_blocks(kit: &ElementKit, mesh: &Mesh, elem: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let p = kit.p;
    let p_dim = dim_p(p);
    let nt_tau = dim_p(kit.layout.r_tau);
    let nt_v = dim_p(kit.layout.r_v);
    let n_test = 2 * nt_tau + nt_v;
    let n_cols = kit.n_cols();
    let (n_sig, n_u, n_tr, _, _) = kit.col_counts();
    let col_u = n_sig;
    let col_tr = col_u + n_u;
    let col_fx = col_tr + n_tr;

    let aff = &mesh.affine[elem];
    let vol = quadrature_rule(2 * kit.vol.exactness).unwrap();
    let edg = edge_rule(2 * kit.edge.exactness).unwrap();

    let mut b = DMatrix::<f64>::zeros(n_test, n_cols);
    let mut g = DMatrix::<f64>::zeros(n_test, n_test);

    // Volume terms, pointwise.
    for qi in 0..vol.len() {
        let [xh, yh] = vol.xy(qi);
        let w = vol.weights[qi] * aff.det;
        let (tv, tg) = kit.scalar.eval_grad(nt_tau.max(nt_v).max(p_dim), xh, yh);

        // Physical gradients and divergences.
        let grad_phys: Vec<[f64; 2]> = tg.iter().map(|&gh| aff.push_gradient(gh)).collect();

        for i in 0..nt_tau {
            for a in 0..2 {
                let row = 2 * i + a;
                // (sigma, tau)
                for s in 0..p_dim {
                    b[(row, 2 * s + a)] += w * tv[i] * tv[s];
                }
                // -(u, div tau); div tau_(i,a) = (A^{-T} grad phi_i)_a
                let div_tau = grad_phys[i][a];
                for s in 0..p_dim {
                    b[(row, col_u + s)] -= w * tv[s] * div_tau;
                }
            }
        }
        for j in 0..nt_v {
            let row = 2 * nt_tau + j;
            // -(sigma, grad v)
            for s in 0..p_dim {
                for c in 0..2 {
                    b[(row, 2 * s + c)] -= w * tv[s] * grad_phys[j][c];
                }
            }
        }

        // Gram.
        for i in 0..nt_tau {
            for j in 0..nt_tau {
                for a in 0..2 {
                    for c in 0..2 {
                        let mut val = grad_phys[i][a] * grad_phys[j][c];
                        if a == c {
                            val += tv[i] * tv[j];
                        }
                        g[(2 * i + a, 2 * j + c)] += w * val;
                    }
                }
            }
        }
        for i in 0..nt_v {
            for j in 0..nt_v {
                let dot = grad_phys[i][0] * grad_phys[j][0] + grad_phys[i][1] * grad_phys[j][1];
                g[(2 * nt_tau + i, 2 * nt_tau + j)] += w * (tv[i] * tv[j] + dot);
            }
        }
    }

    // Skeleton terms, pointwise in the global facet parameter.
    for le in 0..3 {
        let fu = mesh.tri_facets[elem][le];
        let facet = &mesh.facets[fu.facet];
        let n_out = [fu.sign * facet.normal[0], fu.sign * facet.normal[1]];
        for (qi, &t) in edg.points.iter().enumerate() {
            let w = edg.weights[qi] * facet.length;
            let tl = if fu.forward { t } else { 1.0 - t };
            let xh = edge_point(le, tl);
            let tv = kit.scalar.eval(nt_tau.max(nt_v), xh[0], xh[1]);

            // Trace modes at global parameter t.
            for mode in 0..(3 + 3 * p) {
                let mv = trace_mode(kit, mesh, elem, le, mode, t);
                if mv == 0.0 {
                    continue;
                }
                for i in 0..nt_tau {
                    for a in 0..2 {
                        b[(2 * i + a, col_tr + mode)] += w * mv * tv[i] * n_out[a];
                    }
                }
            }
            for k in 0..=p {
                let mu = legendre_mode(k, t) * fu.sign;
                let col = col_fx + le * (p + 1) + k;
                for j in 0..nt_v {
                    b[(2 * nt_tau + j, col)] += w * mu * tv[j];
                }
            }
        }
    }

    (b, g)
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
