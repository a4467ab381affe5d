//! Closed-form manufactured solutions and the residual certification of
//! the sign conventions.
//!
//! Integrating the Poisson form by parts forces sigma = -grad u and
//! f = div sigma = -lap u; the elasticity form forces A sigma = eps(u),
//! f = -div sigma, alpha = 0. `residual_check_*` certifies both
//! numerically: b(U_exact, V) - l(V) vanishes over all local test
//! functions.

use crate::forms::{ComplianceTensor, ElementKit};
use crate::mesh::Mesh;
use crate::refelem::basis::{components, BasisKind};
use crate::refelem::dim_p;
use crate::refelem::quadrature::{edge_rule, quadrature_rule};
use crate::refelem::trace::edge_point;
use crate::Result;
use nalgebra::DVector;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoissonSolution {
    /// u = sin(pi x) sin(pi y) on the unit square.
    SinSin,
    /// u = x y (1 - x - y): vanishes on the reference-triangle boundary;
    /// all components lie in U_h once p >= 3.
    RefBubble,
    /// u identically zero (zero-data runs).
    Zero,
}

impl PoissonSolution {
    pub fn u(&self, x: f64, y: f64) -> f64 {
        match self {
            PoissonSolution::SinSin => (PI * x).sin() * (PI * y).sin(),
            PoissonSolution::RefBubble => x * y * (1.0 - x - y),
            PoissonSolution::Zero => 0.0,
        }
    }

    pub fn grad_u(&self, x: f64, y: f64) -> [f64; 2] {
        match self {
            PoissonSolution::SinSin => [
                PI * (PI * x).cos() * (PI * y).sin(),
                PI * (PI * x).sin() * (PI * y).cos(),
            ],
            PoissonSolution::RefBubble => [y * (1.0 - 2.0 * x - y), x * (1.0 - x - 2.0 * y)],
            PoissonSolution::Zero => [0.0, 0.0],
        }
    }

    /// sigma = -grad u (fixed by integrating the form by parts).
    pub fn sigma(&self, x: f64, y: f64) -> [f64; 2] {
        let g = self.grad_u(x, y);
        [-g[0], -g[1]]
    }

    /// f = div sigma = -lap u.
    pub fn f(&self, x: f64, y: f64) -> f64 {
        match self {
            PoissonSolution::SinSin => 2.0 * PI * PI * (PI * x).sin() * (PI * y).sin(),
            PoissonSolution::RefBubble => 2.0 * (x + y),
            PoissonSolution::Zero => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ElasticitySolution {
    pub mu: f64,
    pub lambda: f64,
}

impl ElasticitySolution {
    /// u = (sin(pi x) sin(pi y), x(1-x) y(1-y)); u = 0 on the unit-square
    /// boundary and int div u = 0, so the exact alpha vanishes.
    pub fn new(mu: f64, lambda: f64) -> Self {
        ElasticitySolution { mu, lambda }
    }

    pub fn u(&self, x: f64, y: f64) -> [f64; 2] {
        [
            (PI * x).sin() * (PI * y).sin(),
            x * (1.0 - x) * y * (1.0 - y),
        ]
    }

    #[allow(clippy::type_complexity)]
    fn derivs(&self, x: f64, y: f64) -> ([f64; 2], [f64; 2], [f64; 3], [f64; 3]) {
        let (sx, cx) = ((PI * x).sin(), (PI * x).cos());
        let (sy, cy) = ((PI * y).sin(), (PI * y).cos());
        let g1 = [PI * cx * sy, PI * sx * cy];
        let h1 = [-PI * PI * sx * sy, -PI * PI * sx * sy, PI * PI * cx * cy];
        let (bx, by) = (x - x * x, y - y * y);
        let (dbx, dby) = (1.0 - 2.0 * x, 1.0 - 2.0 * y);
        let g2 = [dbx * by, bx * dby];
        let h2 = [-2.0 * by, -2.0 * bx, dbx * dby];
        (g1, g2, h1, h2)
    }

    pub fn grad_u(&self, x: f64, y: f64) -> [[f64; 2]; 2] {
        let (g1, g2, _, _) = self.derivs(x, y);
        [g1, g2]
    }

    /// sigma = 2 mu eps(u) + lambda tr(eps(u)) I; symmetric.
    pub fn sigma(&self, x: f64, y: f64) -> [[f64; 2]; 2] {
        let (g1, g2, _, _) = self.derivs(x, y);
        let e11 = g1[0];
        let e22 = g2[1];
        let e12 = 0.5 * (g1[1] + g2[0]);
        let tr = e11 + e22;
        [
            [2.0 * self.mu * e11 + self.lambda * tr, 2.0 * self.mu * e12],
            [2.0 * self.mu * e12, 2.0 * self.mu * e22 + self.lambda * tr],
        ]
    }

    /// f = -div sigma (fixed by integrating the form by parts).
    pub fn f(&self, x: f64, y: f64) -> [f64; 2] {
        let (_, _, h1, h2) = self.derivs(x, y);
        let (u1xx, u1yy, u1xy) = (h1[0], h1[1], h1[2]);
        let (u2xx, u2yy, u2xy) = (h2[0], h2[1], h2[2]);
        let (mu, la) = (self.mu, self.lambda);
        let d1 = (2.0 * mu + la) * u1xx + la * u2xy + mu * (u1yy + u2xy);
        let d2 = mu * (u1xy + u2xx) + (2.0 * mu + la) * u2yy + la * u1xy;
        [-d1, -d2]
    }

    pub fn compliance(&self, n_elems: usize) -> ComplianceTensor {
        ComplianceTensor::isotropic_uniform(n_elems, self.mu, self.lambda)
    }
}

/// Per-element vectors of b(U_exact, test basis function) for the Poisson
/// form, by quadrature at boosted exactness.
pub(crate) fn residual_helper_poisson(
    kit: &ElementKit,
    mesh: &Mesh,
    exact: &PoissonSolution,
) -> Result<Vec<DVector<f64>>> {
    let nt_tau = dim_p(kit.layout.r_tau);
    let nt_v = dim_p(kit.layout.r_v);
    let vol = quadrature_rule(kit.vol.exactness.max(20))?;
    let edg = edge_rule(kit.edge.exactness.max(20))?;

    let mut out = Vec::with_capacity(mesh.n_elems());
    for elem in 0..mesh.n_elems() {
        let aff = &mesh.affine[elem];
        let mut r = DVector::<f64>::zeros(2 * nt_tau + nt_v);

        for qi in 0..vol.len() {
            let [xh, yh] = vol.xy(qi);
            let w = vol.weights[qi] * aff.det;
            let xp = aff.apply([xh, yh]);
            let sig = exact.sigma(xp[0], xp[1]);
            let uu = exact.u(xp[0], xp[1]);
            let (tv, tg) = kit.scalar.eval_grad(nt_tau.max(nt_v), xh, yh);
            for i in 0..nt_tau {
                let gp = aff.push_gradient(tg[i]);
                for a in 0..2 {
                    // (sigma, tau) - (u, div tau)
                    r[2 * i + a] += w * (sig[a] * tv[i] - uu * gp[a]);
                }
            }
            for j in 0..nt_v {
                let gp = aff.push_gradient(tg[j]);
                // -(sigma, grad v)
                r[2 * nt_tau + j] -= w * (sig[0] * gp[0] + sig[1] * gp[1]);
            }
        }

        for le in 0..3 {
            let fu = mesh.tri_facets[elem][le];
            let facet = &mesh.facets[fu.facet];
            let n_out = [fu.sign * facet.normal[0], fu.sign * facet.normal[1]];
            for (qi, &t) in edg.points.iter().enumerate() {
                let w = edg.weights[qi] * facet.length;
                let tl = if fu.forward { t } else { 1.0 - t };
                let xh = edge_point(le, tl);
                let xp = aff.apply(xh);
                let uu = exact.u(xp[0], xp[1]);
                let sig = exact.sigma(xp[0], xp[1]);
                let sn = sig[0] * n_out[0] + sig[1] * n_out[1];
                let tv = kit.scalar.eval(nt_tau.max(nt_v), xh[0], xh[1]);
                for i in 0..nt_tau {
                    for a in 0..2 {
                        // <u^, tau.n>
                        r[2 * i + a] += w * uu * tv[i] * n_out[a];
                    }
                }
                for j in 0..nt_v {
                    // <v, sigma^_n>
                    r[2 * nt_tau + j] += w * sn * tv[j];
                }
            }
        }
        out.push(r);
    }
    Ok(out)
}

/// Same for the elasticity form; the second return value is the exact
/// global beta pairing Q0^{-1} (A sigma, I)_Omega.
pub(crate) fn residual_helper_elasticity(
    kit: &ElementKit,
    mesh: &Mesh,
    exact: &ElasticitySolution,
) -> Result<(Vec<DVector<f64>>, f64)> {
    let nt_tau = dim_p(kit.layout.r_tau);
    let nt_v = dim_p(kit.layout.r_v);
    let p_dim = dim_p(kit.p);
    let row_v0 = 3 * nt_tau;
    let row_q0 = row_v0 + 2 * nt_v;
    let vol = quadrature_rule(kit.vol.exactness.max(20))?;
    let edg = edge_rule(kit.edge.exactness.max(20))?;
    let sym = components(BasisKind::SymMatrix);
    let skew = components(BasisKind::SkewMatrix);
    let c = exact.compliance(mesh.n_elems());
    let q0 = c.q0(mesh.n_elems());
    let q0_inv = 1.0 / q0;

    let mut beta_acc = 0.0;
    let mut out = Vec::with_capacity(mesh.n_elems());
    for elem in 0..mesh.n_elems() {
        let aff = &mesh.affine[elem];
        let mut r = DVector::<f64>::zeros(kit.layout.n_test());

        for qi in 0..vol.len() {
            let [xh, yh] = vol.xy(qi);
            let w = vol.weights[qi] * aff.det;
            let xp = aff.apply([xh, yh]);
            let sig = exact.sigma(xp[0], xp[1]);
            let uu = exact.u(xp[0], xp[1]);
            let asig = c.apply(elem, sig);
            let (tv, tg) = kit.scalar.eval_grad(nt_tau.max(nt_v).max(p_dim), xh, yh);
            for i in 0..nt_tau {
                let gp = aff.push_gradient(tg[i]);
                for (ms, es) in sym.iter().enumerate() {
                    let sm = es.as_matrix();
                    let mut asig_tau = 0.0;
                    let mut u_div = 0.0;
                    for cc in 0..2 {
                        for dd in 0..2 {
                            asig_tau += asig[cc][dd] * sm[cc][dd] * tv[i];
                        }
                        u_div += uu[cc] * (sm[cc][0] * gp[0] + sm[cc][1] * gp[1]);
                    }
                    // (A sigma, tau) + (u, div tau); exact alpha = 0.
                    r[3 * i + ms] += w * (asig_tau + u_div);
                }
            }
            for j in 0..nt_v {
                let gp = aff.push_gradient(tg[j]);
                for cc in 0..2 {
                    // (sigma, grad v)
                    let sg = sig[cc][0] * gp[0] + sig[cc][1] * gp[1];
                    r[row_v0 + 2 * j + cc] += w * sg;
                }
            }
            let wm = skew[0].as_matrix();
            for l in 0..p_dim {
                // (sigma, q): exact sigma is symmetric, so this vanishes.
                let mut sq = 0.0;
                for cc in 0..2 {
                    for dd in 0..2 {
                        sq += sig[cc][dd] * wm[cc][dd];
                    }
                }
                r[row_q0 + l] += w * sq * tv[l];
            }
            beta_acc += w * q0_inv * (asig[0][0] + asig[1][1]);
        }

        for le in 0..3 {
            let fu = mesh.tri_facets[elem][le];
            let facet = &mesh.facets[fu.facet];
            let n_out = [fu.sign * facet.normal[0], fu.sign * facet.normal[1]];
            for (qi, &t) in edg.points.iter().enumerate() {
                let w = edg.weights[qi] * facet.length;
                let tl = if fu.forward { t } else { 1.0 - t };
                let xh = edge_point(le, tl);
                let xp = aff.apply(xh);
                let uu = exact.u(xp[0], xp[1]);
                let sig = exact.sigma(xp[0], xp[1]);
                let sn = [
                    sig[0][0] * n_out[0] + sig[0][1] * n_out[1],
                    sig[1][0] * n_out[0] + sig[1][1] * n_out[1],
                ];
                let tv = kit.scalar.eval(nt_tau.max(nt_v), xh[0], xh[1]);
                for i in 0..nt_tau {
                    for (ms, es) in sym.iter().enumerate() {
                        let sm = es.as_matrix();
                        let tn = [
                            sm[0][0] * n_out[0] + sm[0][1] * n_out[1],
                            sm[1][0] * n_out[0] + sm[1][1] * n_out[1],
                        ];
                        // -<u^, tau n>
                        r[3 * i + ms] -= w * tv[i] * (uu[0] * tn[0] + uu[1] * tn[1]);
                    }
                }
                for j in 0..nt_v {
                    for cc in 0..2 {
                        // -<v, sn^>
                        r[row_v0 + 2 * j + cc] -= w * tv[j] * sn[cc];
                    }
                }
            }
        }
        out.push(r);
    }
    Ok((out, beta_acc))
}

/// Max relative residual of b(U_exact, V) - l(V) over all local test basis
/// functions of every element (plus the global beta row for elasticity).
pub struct ResidualCheck {
    pub max_relative: f64,
    pub beta_residual: f64,
}

pub fn residual_check_poisson(
    kit: &ElementKit,
    mesh: &Mesh,
    exact: &PoissonSolution,
) -> Result<ResidualCheck> {
    let pairings = residual_helper_poisson(kit, mesh, exact)?;
    let nt_tau = dim_p(kit.layout.r_tau);
    let nt_v = dim_p(kit.layout.r_v);
    let vol = quadrature_rule(kit.vol.exactness.max(20))?;

    let mut max_abs: f64 = 0.0;
    let mut scale: f64 = 1.0;
    for (elem, r) in pairings.iter().enumerate() {
        let aff = &mesh.affine[elem];
        let mut load = DVector::<f64>::zeros(r.len());
        for qi in 0..vol.len() {
            let [xh, yh] = vol.xy(qi);
            let w = vol.weights[qi] * aff.det;
            let xp = aff.apply([xh, yh]);
            let fv = exact.f(xp[0], xp[1]);
            let tv = kit.scalar.eval(nt_v, xh, yh);
            for j in 0..nt_v {
                load[2 * nt_tau + j] += w * fv * tv[j];
            }
            scale = scale.max((fv * tv[0]).abs());
        }
        max_abs = max_abs.max((r - load).abs().max());
    }
    Ok(ResidualCheck {
        max_relative: max_abs / scale,
        beta_residual: 0.0,
    })
}

pub fn residual_check_elasticity(
    kit: &ElementKit,
    mesh: &Mesh,
    exact: &ElasticitySolution,
) -> Result<ResidualCheck> {
    let (pairings, beta) = residual_helper_elasticity(kit, mesh, exact)?;
    let nt_tau = dim_p(kit.layout.r_tau);
    let nt_v = dim_p(kit.layout.r_v);
    let row_v0 = 3 * nt_tau;
    let vol = quadrature_rule(kit.vol.exactness.max(20))?;

    let mut max_abs: f64 = 0.0;
    let mut scale: f64 = 1.0;
    for (elem, r) in pairings.iter().enumerate() {
        let aff = &mesh.affine[elem];
        let mut load = DVector::<f64>::zeros(r.len());
        for qi in 0..vol.len() {
            let [xh, yh] = vol.xy(qi);
            let w = vol.weights[qi] * aff.det;
            let xp = aff.apply([xh, yh]);
            let fv = exact.f(xp[0], xp[1]);
            let tv = kit.scalar.eval(nt_v, xh, yh);
            for j in 0..nt_v {
                for cc in 0..2 {
                    load[row_v0 + 2 * j + cc] += w * fv[cc] * tv[j];
                }
            }
            scale = scale.max((fv[0].abs() + fv[1].abs()) * tv[0].abs());
        }
        max_abs = max_abs.max((r - load).abs().max());
    }
    Ok(ResidualCheck {
        max_relative: max_abs / scale,
        beta_residual: beta.abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::{ProblemKind, TestLayout, TestMode};

    #[test]
    fn poisson_sign_convention_certified() {
        let layout = TestLayout::build(1, TestMode::Uniform(3), ProblemKind::Poisson).unwrap();
        let kit = ElementKit::new(layout).unwrap();
        let mesh = Mesh::unit_square(2).unwrap();
        let chk = residual_check_poisson(&kit, &mesh, &PoissonSolution::SinSin).unwrap();
        assert!(chk.max_relative < 1e-9, "residual {:.3e}", chk.max_relative);
    }

    #[test]
    fn poisson_bubble_is_consistent_on_reference_mesh() {
        let layout = TestLayout::build(3, TestMode::Uniform(5), ProblemKind::Poisson).unwrap();
        let kit = ElementKit::new(layout).unwrap();
        let mesh = Mesh::reference_triangle().unwrap();
        let chk = residual_check_poisson(&kit, &mesh, &PoissonSolution::RefBubble).unwrap();
        assert!(
            chk.max_relative < 1e-12,
            "residual {:.3e}",
            chk.max_relative
        );
    }

    #[test]
    fn elasticity_sign_convention_certified() {
        let layout = TestLayout::build(1, TestMode::Uniform(3), ProblemKind::Elasticity).unwrap();
        let kit = ElementKit::new(layout).unwrap();
        let mesh = Mesh::unit_square(2).unwrap();
        let exact = ElasticitySolution::new(1.0, 1.0);
        let chk = residual_check_elasticity(&kit, &mesh, &exact).unwrap();
        assert!(chk.max_relative < 1e-9, "residual {:.3e}", chk.max_relative);
        // The exact beta pairing vanishes: int div u = 0 for u in H^1_0.
        assert!(chk.beta_residual < 1e-10, "beta {:.3e}", chk.beta_residual);
    }

    #[test]
    fn flipped_sigma_sign_breaks_the_identity() {
        // With sigma = +grad u the volume rows pick up 2(grad u, grad v):
        // far above quadrature noise. This pins the convention.
        let layout = TestLayout::build(0, TestMode::Uniform(2), ProblemKind::Poisson).unwrap();
        let kit = ElementKit::new(layout).unwrap();
        let mesh = Mesh::unit_square(2).unwrap();
        let exact = PoissonSolution::SinSin;
        let nt_v = dim_p(kit.layout.r_v);
        let nt_tau = dim_p(kit.layout.r_tau);
        let vol = quadrature_rule(20).unwrap();
        let mut worst: f64 = 0.0;
        for elem in 0..mesh.n_elems() {
            let aff = &mesh.affine[elem];
            let mut r = vec![0.0; nt_v];
            for qi in 0..vol.len() {
                let [xh, yh] = vol.xy(qi);
                let w = vol.weights[qi] * aff.det;
                let xp = aff.apply([xh, yh]);
                let g = exact.grad_u(xp[0], xp[1]);
                let fv = exact.f(xp[0], xp[1]);
                let (tv, tg) = kit.scalar.eval_grad(nt_v, xh, yh);
                for j in 0..nt_v {
                    let gp = aff.push_gradient(tg[j]);
                    r[j] -= w * (g[0] * gp[0] + g[1] * gp[1] + fv * tv[j]);
                }
            }
            for v in &r {
                worst = worst.max(v.abs());
            }
        }
        let _ = nt_tau;
        assert!(worst > 1e-2, "flipped-sign residual unexpectedly small");
    }
}
