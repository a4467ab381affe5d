//! Symmetric-matrix H(div) interpolation for the elasticity verification.
//!
//! The three-dimensional construction constrains edge moments of
//! n-^T tau n+ between faces sharing an edge; in two dimensions the shared
//! subsimplices degenerate to vertices, so the candidate constraint set is
//! the three pointwise conditions n-^T tau(v) n+ = 0 at the vertices, where
//! n-, n+ are the outward normals of the two edges meeting at v. Together
//! with the six normal-trace orthogonality constraints this makes the
//! defining moment system square; its solvability is measured, not assumed,
//! and a minimal-norm candidate with honest residuals is produced if it
//! ever degenerates.

use super::SquareSystem;
use crate::refelem::basis::{components, BasisKind};
use crate::refelem::quadrature::{edge_rule, quadrature_rule, EdgeRule, QuadratureRule};
use crate::refelem::scalar::ScalarBasis;
use crate::refelem::trace::{
    edge_lengths, edge_outward_normal, edge_point, TraceBasis, EDGES, VERTS,
};
use crate::refelem::{dim_p, legendre_mode};
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};
use std::sync::Arc;

/// Symmetric-matrix polynomial probe.
pub struct MatProbe<'a> {
    pub val: &'a dyn Fn(f64, f64) -> [[f64; 2]; 2],
    pub div: &'a dyn Fn(f64, f64) -> [f64; 2],
}

pub struct SymImage<'a> {
    op: &'a PiDivSym,
    pub coeffs: DVector<f64>,
}

impl SymImage<'_> {
    pub fn eval(&self, x: f64, y: f64) -> [[f64; 2]; 2] {
        let full = &self.op.to_full * &self.coeffs;
        let sym = components(BasisKind::SymMatrix);
        let n1 = dim_p(self.op.p + 2);
        let sv = self.op.scalar.eval(n1, x, y);
        let mut out = [[0.0; 2]; 2];
        for s in 0..n1 {
            for (ms, es) in sym.iter().enumerate() {
                let c = full[3 * s + ms];
                if c != 0.0 {
                    let em = es.as_matrix();
                    for i in 0..2 {
                        for j in 0..2 {
                            out[i][j] += c * sv[s] * em[i][j];
                        }
                    }
                }
            }
        }
        out
    }

    pub fn div(&self, x: f64, y: f64) -> [f64; 2] {
        let full = &self.op.to_full * &self.coeffs;
        let sym = components(BasisKind::SymMatrix);
        let n1 = dim_p(self.op.p + 2);
        let (_, grads) = self.op.scalar.eval_grad(n1, x, y);
        let mut out = [0.0; 2];
        for s in 0..n1 {
            for (ms, es) in sym.iter().enumerate() {
                let c = full[3 * s + ms];
                if c != 0.0 {
                    let em = es.as_matrix();
                    for i in 0..2 {
                        out[i] += c * (em[i][0] * grads[s][0] + em[i][1] * grads[s][1]);
                    }
                }
            }
        }
        out
    }
}

enum SymSolver {
    Lu(nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>),
    /// Minimal-norm least squares when the candidate system degenerates.
    Pinv(DMatrix<f64>),
}

pub struct PiDivSym {
    pub p: usize,
    pub scalar: Arc<ScalarBasis>,
    pub trace: TraceBasis,
    pub diagnostics: SquareSystem,
    /// False when the square system degenerated and the operator fell back
    /// to the minimal-norm candidate.
    pub verified: bool,
    /// Coefficients of the constrained basis over the full sym space.
    to_full: DMatrix<f64>,
    solver: SymSolver,
    vol: QuadratureRule,
    edge: EdgeRule,
    p_dim: usize,
}

impl PiDivSym {
    pub fn build(p: usize, probe_degree: usize) -> Result<PiDivSym> {
        let d_all = probe_degree.max(p + 2);
        let scalar = Arc::new(ScalarBasis::orthonormal(d_all)?);
        let trace = TraceBasis::build(p)?;
        let vol = quadrature_rule(2 * d_all + 2)?;
        let edge = edge_rule(2 * d_all + 2)?;
        let p_dim = dim_p(p);
        let n1 = dim_p(p + 2);
        let n_s = 3 * n1;
        let sym = components(BasisKind::SymMatrix);
        let lens = edge_lengths();

        // Scalar complement of the continuous trace space in P_{p+1}(dK),
        // as in the vector-valued construction.
        let n_disc = 3 * (p + 2);
        let n_tilde = trace.tilde_dim();
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
        let (perp, _) = super::pidiv_nullspace(&t_mat, 3)?;

        // Constraint rows: 3 vertex conditions + 6 trace-orthogonality.
        let mut cons = DMatrix::<f64>::zeros(9, n_s);
        for v in 0..3 {
            let adj: Vec<usize> = (0..3).filter(|&e| EDGES[e].contains(&v)).collect();
            let nm = edge_outward_normal(adj[0]);
            let np = edge_outward_normal(adj[1]);
            let pos = VERTS[v];
            let sv = scalar.eval(n1, pos[0], pos[1]);
            for s in 0..n1 {
                for (ms, es) in sym.iter().enumerate() {
                    let em = es.as_matrix();
                    let mut val = 0.0;
                    for i in 0..2 {
                        for j in 0..2 {
                            val += nm[i] * em[i][j] * np[j];
                        }
                    }
                    cons[(v, 3 * s + ms)] = sv[s] * val;
                }
            }
        }
        for k in 0..3 {
            for cc in 0..2 {
                let row = 3 + 2 * k + cc;
                for e in 0..3 {
                    let nh = edge_outward_normal(e);
                    for (qi, &t) in edge.points.iter().enumerate() {
                        let w = edge.weights[qi] * lens[e];
                        // perp scalar function value on this edge point.
                        let mut pv = 0.0;
                        for m in 0..=(p + 1) {
                            pv += perp[(e * (p + 2) + m, k)] * legendre_mode(m, t) / lens[e].sqrt();
                        }
                        if pv == 0.0 {
                            continue;
                        }
                        let xh = edge_point(e, t);
                        let sv = scalar.eval(n1, xh[0], xh[1]);
                        for s in 0..n1 {
                            for (ms, es) in sym.iter().enumerate() {
                                let em = es.as_matrix();
                                let tn = em[cc][0] * nh[0] + em[cc][1] * nh[1];
                                cons[(row, 3 * s + ms)] += w * pv * sv[s] * tn;
                            }
                        }
                    }
                }
            }
        }
        let (to_full, _) = super::pidiv_nullspace(&cons, n_s - 9)?;
        let n_b = n_s - 9;
        let expect = 3 * p_dim + 2 * n_tilde;
        if n_b != expect {
            return Err(Error::Singular {
                context: format!("constrained sym space is not square ({n_b} vs {expect})"),
                sigma_min: 0.0,
            });
        }

        // Square system: volume moments vs P_p(K;S), boundary moments vs
        // tilde-P_{p+1}(dK;V).
        let mut m = DMatrix::<f64>::zeros(n_b, n_b);
        for qi in 0..vol.len() {
            let [x, y] = vol.xy(qi);
            let w = vol.weights[qi];
            let sv1 = scalar.eval(n1, x, y);
            let svp = scalar.eval(p_dim, x, y);
            for j in 0..n_b {
                // Components of basis function j at this point.
                let mut comp = [0.0; 3];
                for s in 0..n1 {
                    for ms in 0..3 {
                        comp[ms] += to_full[(3 * s + ms, j)] * sv1[s];
                    }
                }
                for s in 0..p_dim {
                    for ms in 0..3 {
                        m[(3 * s + ms, j)] += w * svp[s] * comp[ms];
                    }
                }
            }
        }
        for e in 0..3 {
            let nh = edge_outward_normal(e);
            for (qi, &t) in edge.points.iter().enumerate() {
                let w = edge.weights[qi] * lens[e];
                let xh = edge_point(e, t);
                let sv1 = scalar.eval(n1, xh[0], xh[1]);
                for j in 0..n_b {
                    let mut tn = [0.0; 2];
                    for s in 0..n1 {
                        for (ms, es) in sym.iter().enumerate() {
                            let c = to_full[(3 * s + ms, j)];
                            if c != 0.0 {
                                let em = es.as_matrix();
                                for cc in 0..2 {
                                    tn[cc] += c * sv1[s] * (em[cc][0] * nh[0] + em[cc][1] * nh[1]);
                                }
                            }
                        }
                    }
                    for ti in 0..n_tilde {
                        let tv = trace.eval_tilde(ti, e, t);
                        if tv != 0.0 {
                            for cc in 0..2 {
                                let row = 3 * p_dim + 2 * ti + cc;
                                m[(row, j)] += w * tv * tn[cc];
                            }
                        }
                    }
                }
            }
        }

        let diagnostics = super::square_diagnostics(&m);
        let verified = diagnostics.sigma_min > 1e-10 * diagnostics.sigma_max;
        let solver = if verified {
            SymSolver::Lu(m.lu())
        } else {
            // Moore-Penrose pseudo-inverse for the minimal-norm candidate.
            let svd = m.svd(true, true);
            let pinv = svd.pseudo_inverse(1e-12).map_err(|_| Error::Singular {
                context: "sym square system pseudo-inverse".into(),
                sigma_min: diagnostics.sigma_min,
            })?;
            SymSolver::Pinv(pinv)
        };
        Ok(PiDivSym {
            p,
            scalar,
            trace,
            diagnostics,
            verified,
            to_full,
            solver,
            vol,
            edge,
            p_dim,
        })
    }

    pub fn apply(&self, probe: &MatProbe) -> SymImage<'_> {
        let n_b = self.to_full.ncols();
        let n_tilde = self.trace.tilde_dim();
        let mut rhs = DVector::<f64>::zeros(n_b);
        let sym = components(BasisKind::SymMatrix);
        for qi in 0..self.vol.len() {
            let [x, y] = self.vol.xy(qi);
            let w = self.vol.weights[qi];
            let tv = (probe.val)(x, y);
            let svp = self.scalar.eval(self.p_dim, x, y);
            for s in 0..self.p_dim {
                for (ms, es) in sym.iter().enumerate() {
                    let em = es.as_matrix();
                    let mut dot = 0.0;
                    for i in 0..2 {
                        for j in 0..2 {
                            dot += tv[i][j] * em[i][j];
                        }
                    }
                    rhs[3 * s + ms] += w * svp[s] * dot;
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
                let tn = [
                    tv[0][0] * nh[0] + tv[0][1] * nh[1],
                    tv[1][0] * nh[0] + tv[1][1] * nh[1],
                ];
                for ti in 0..n_tilde {
                    let tvv = self.trace.eval_tilde(ti, e, t);
                    if tvv != 0.0 {
                        for cc in 0..2 {
                            rhs[3 * self.p_dim + 2 * ti + cc] += w * tvv * tn[cc];
                        }
                    }
                }
            }
        }
        let coeffs = match &self.solver {
            SymSolver::Lu(lu) => lu.solve(&rhs).expect("verified nonsingular"),
            SymSolver::Pinv(pinv) => pinv * rhs,
        };
        SymImage { op: self, coeffs }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_system_is_nonsingular_for_p_up_to_2() {
        for p in 0..=2 {
            let pi = PiDivSym::build(p, 6).unwrap();
            assert!(pi.verified, "p={p} candidate system degenerated");
            assert!(
                pi.diagnostics.sigma_min > 1e-8,
                "p={p}: sigma_min {:.3e}",
                pi.diagnostics.sigma_min
            );
        }
    }

    #[test]
    fn zero_maps_to_zero() {
        let pi = PiDivSym::build(0, 6).unwrap();
        let val = |_: f64, _: f64| [[0.0; 2]; 2];
        let div = |_: f64, _: f64| [0.0; 2];
        let img = pi.apply(&MatProbe {
            val: &val,
            div: &div,
        });
        assert!(img.coeffs.amax() < 1e-13);
    }

    #[test]
    fn volume_moments_hold_for_constant_probe() {
        let pi = PiDivSym::build(1, 6).unwrap();
        let val = |_: f64, _: f64| [[1.0, 0.5], [0.5, -2.0]];
        let div = |_: f64, _: f64| [0.0; 2];
        let img = pi.apply(&MatProbe {
            val: &val,
            div: &div,
        });
        let rule = quadrature_rule(16).unwrap();
        for (a, b) in [(0usize, 0usize), (1, 0), (0, 1)] {
            for comp in 0..3usize {
                let m = rule.integrate(|x, y| {
                    let d = img.eval(x, y);
                    let t = val(x, y);
                    let q = x.powi(a as i32) * y.powi(b as i32);
                    let entry = match comp {
                        0 => d[0][0] - t[0][0],
                        1 => d[1][1] - t[1][1],
                        _ => d[0][1] - t[0][1],
                    };
                    entry * q
                });
                assert!(m.abs() < 1e-11, "moment ({a},{b}) comp {comp}: {m:.2e}");
            }
        }
    }

    #[test]
    fn divergence_commutes_on_random_cubic_fields() {
        // div Pi tau = vector L2 projection of div tau onto P_{p+1}.
        let p = 0;
        let pi = PiDivSym::build(p, 8).unwrap();
        let val = |x: f64, y: f64| {
            let s11 = x.powi(3) - y;
            let s22 = y.powi(3) + x * y;
            let s12 = x * x * y - 0.5;
            [[s11, s12], [s12, s22]]
        };
        let div = |x: f64, y: f64| {
            [
                3.0 * x * x + x * x, // d/dx s11 + d/dy s12
                2.0 * x * y + 3.0 * y * y + x,
            ]
        };
        let img = pi.apply(&MatProbe {
            val: &val,
            div: &div,
        });
        let rule = quadrature_rule(20).unwrap();
        let n1 = dim_p(p + 1);
        let mut proj = vec![[0.0; 2]; n1];
        for qi in 0..rule.len() {
            let [x, y] = rule.xy(qi);
            let w = rule.weights[qi];
            let dv = div(x, y);
            let sv = pi.scalar.eval(n1, x, y);
            for j in 0..n1 {
                proj[j][0] += w * dv[0] * sv[j];
                proj[j][1] += w * dv[1] * sv[j];
            }
        }
        let mut max_err: f64 = 0.0;
        for qi in 0..rule.len() {
            let [x, y] = rule.xy(qi);
            let sv = pi.scalar.eval(n1, x, y);
            let mut pd = [0.0; 2];
            for j in 0..n1 {
                pd[0] += sv[j] * proj[j][0];
                pd[1] += sv[j] * proj[j][1];
            }
            let d = img.div(x, y);
            max_err = max_err.max((d[0] - pd[0]).abs().max((d[1] - pd[1]).abs()));
        }
        assert!(max_err < 1e-10, "commutativity residual {max_err:.2e}");
    }
}
