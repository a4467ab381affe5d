//! One full DPG solve plus the error, indicator, and verification
//! computations that the studies share.

use super::extension::{LiftKit, TraceNorms};
use super::manufactured::{ElasticitySolution, PoissonSolution};
use crate::forms::{elasticity, poisson, ElementKit, LocalFormBlocks, LocalGram};
use crate::mesh::Mesh;
use crate::refelem::quadrature::{edge_rule, quadrature_rule};
use crate::refelem::{dim_p, legendre_mode};
use crate::spaces::{ProblemKind, TestLayout, TestMode, TrialDofMap};
use crate::system::{assemble, solve_cg, solve_spd, LinearSystem, Solution, SolverChoice};
use crate::trial_to_test::{trial_to_test_local, ElementOperators};
use crate::Result;
use nalgebra::DVector;

#[derive(Debug, Clone, Copy)]
pub enum Problem {
    Poisson(PoissonSolution),
    Elasticity(ElasticitySolution),
}

impl Problem {
    pub fn kind(&self) -> ProblemKind {
        match self {
            Problem::Poisson(_) => ProblemKind::Poisson,
            Problem::Elasticity(_) => ProblemKind::Elasticity,
        }
    }
}

pub struct DpgSolve {
    pub mesh: Mesh,
    pub problem: Problem,
    pub dofmap: TrialDofMap,
    pub kit: ElementKit,
    pub grams: Vec<LocalGram>,
    pub blocks: Vec<LocalFormBlocks>,
    pub ops: Vec<ElementOperators>,
    pub sys: LinearSystem,
    /// Solution over free DOFs and expanded over all DOFs.
    pub x: Vec<f64>,
    pub full: Vec<f64>,
    pub stats: Solution,
}

pub fn solve_problem(
    mesh: Mesh,
    problem: Problem,
    p: usize,
    mode: TestMode,
    solver: SolverChoice,
    cg_tol: f64,
) -> Result<DpgSolve> {
    let layout = TestLayout::build(p, mode, problem.kind())?;
    let kit = ElementKit::new(layout)?;
    let dofmap = TrialDofMap::build(&mesh, p, problem.kind());

    let mut grams = Vec::with_capacity(mesh.n_elems());
    let mut blocks = Vec::with_capacity(mesh.n_elems());
    let mut ops = Vec::with_capacity(mesh.n_elems());
    match &problem {
        Problem::Poisson(exact) => {
            for e in 0..mesh.n_elems() {
                let lb = poisson::local_form_blocks(&kit, &mesh, e, &|x, y| exact.f(x, y));
                let lg = poisson::local_gram(&kit, &mesh, e)?;
                ops.push(trial_to_test_local(&lg, &lb)?);
                grams.push(lg);
                blocks.push(lb);
            }
        }
        Problem::Elasticity(exact) => {
            let c = exact.compliance(mesh.n_elems());
            c.validate(mesh.n_elems())?;
            let q0 = c.q0(mesh.n_elems());
            for e in 0..mesh.n_elems() {
                let lb =
                    elasticity::local_form_blocks(&kit, &mesh, e, &c, q0, &|x, y| exact.f(x, y));
                let lg = elasticity::local_gram(&kit, &mesh, e)?;
                ops.push(trial_to_test_local(&lg, &lb)?);
                grams.push(lg);
                blocks.push(lb);
            }
        }
    }

    let sys = assemble(&mesh, &dofmap, &ops)?;
    let (x, stats) = match solver {
        SolverChoice::Cholesky => solve_spd(&sys)?,
        SolverChoice::Cg => solve_cg(&sys, cg_tol, 200_000)?,
    };
    let mut full = vec![0.0; dofmap.n_all];
    for g in 0..dofmap.n_all {
        if let Some(f) = dofmap.free_of(g) {
            full[g] = x[f];
        }
    }
    Ok(DpgSolve {
        mesh,
        problem,
        dofmap,
        kit,
        grams,
        blocks,
        ops,
        sys,
        x,
        full,
        stats,
    })
}

/// Interpolate/project the exact solution onto the trial DOFs: element-wise
/// L2 projections for the fields, vertex values plus orthonormal edge-mode
/// fits for traces, facet-wise L2 projections for fluxes, alpha = 0.
pub fn exact_dof_vector(solve: &DpgSolve) -> Result<Vec<f64>> {
    let mesh = &solve.mesh;
    let dofmap = &solve.dofmap;
    let p = dofmap.p;
    let p_dim = dim_p(p);
    let vol = quadrature_rule(2 * p + 12)?;
    let edg = edge_rule(2 * p + 12)?;
    let mut out = vec![0.0; dofmap.n_all];

    // Field projections.
    for elem in 0..mesh.n_elems() {
        let aff = &mesh.affine[elem];
        for qi in 0..vol.len() {
            let [xh, yh] = vol.xy(qi);
            let w = vol.weights[qi]; // mapped Gram is det * I, so det cancels
            let xp = aff.apply([xh, yh]);
            let phis = solve.kit.scalar.eval(p_dim, xh, yh);
            match &solve.problem {
                Problem::Poisson(exact) => {
                    let sig = exact.sigma(xp[0], xp[1]);
                    let uu = exact.u(xp[0], xp[1]);
                    for s in 0..p_dim {
                        for c in 0..2 {
                            out[dofmap.sigma_dof(elem, s, c)] += w * sig[c] * phis[s];
                        }
                        out[dofmap.u_dof(elem, s, 0)] += w * uu * phis[s];
                    }
                }
                Problem::Elasticity(exact) => {
                    let sig = exact.sigma(xp[0], xp[1]);
                    let uu = exact.u(xp[0], xp[1]);
                    // Full-matrix component order: e00, e01, e10, e11.
                    let flat = [sig[0][0], sig[0][1], sig[1][0], sig[1][1]];
                    for s in 0..p_dim {
                        for m in 0..4 {
                            out[dofmap.sigma_dof(elem, s, m)] += w * flat[m] * phis[s];
                        }
                        for c in 0..2 {
                            out[dofmap.u_dof(elem, s, c)] += w * uu[c] * phis[s];
                        }
                    }
                }
            }
        }
    }

    // Traces and fluxes per facet (skip constrained: exact data is zero
    // there anyway for the homogeneous problems).
    let trace_val = |x: f64, y: f64, c: usize| -> f64 {
        match &solve.problem {
            Problem::Poisson(exact) => exact.u(x, y),
            Problem::Elasticity(exact) => exact.u(x, y)[c],
        }
    };
    let flux_val = |x: f64, y: f64, n: [f64; 2], c: usize| -> f64 {
        match &solve.problem {
            Problem::Poisson(exact) => {
                let s = exact.sigma(x, y);
                s[0] * n[0] + s[1] * n[1]
            }
            Problem::Elasticity(exact) => {
                let s = exact.sigma(x, y);
                s[c][0] * n[0] + s[c][1] * n[1]
            }
        }
    };
    let kc = dofmap.kind.skel_comps();
    for (v, pos) in mesh.vertices.iter().enumerate() {
        for c in 0..kc {
            let g = dofmap.trace_vertex_dof(v, c);
            if !dofmap.constrained[g] {
                out[g] = trace_val(pos[0], pos[1], c);
            }
        }
    }
    let trace_kit = &solve.kit.trace;
    for (fid, facet) in mesh.facets.iter().enumerate() {
        for c in 0..kc {
            // Edge modes: orthonormal-bubble fit of the hat-free remainder.
            for k in 0..p {
                let g = dofmap.trace_edge_dof(fid, k, c);
                if dofmap.constrained[g] {
                    continue;
                }
                let va = trace_val(mesh.vertices[facet.a][0], mesh.vertices[facet.a][1], c);
                let vb = trace_val(mesh.vertices[facet.b][0], mesh.vertices[facet.b][1], c);
                out[g] = edg.integrate(|t| {
                    let xp = mesh.facet_point(fid, t);
                    let hat = va * (1.0 - t) + vb * t;
                    (trace_val(xp[0], xp[1], c) - hat) * trace_kit.bubble(k, t)
                });
            }
            for k in 0..=p {
                let g = dofmap.flux_dof(fid, k, c);
                out[g] = edg.integrate(|t| {
                    let xp = mesh.facet_point(fid, t);
                    flux_val(xp[0], xp[1], facet.normal, c) * legendre_mode(k, t)
                });
            }
        }
    }
    // alpha = 0 for the manufactured elasticity solutions.
    Ok(out)
}

/// L2 field errors of an all-DOF coefficient vector against the exact
/// solution: (sigma, u).
pub fn field_l2_errors(solve: &DpgSolve, full: &[f64]) -> Result<(f64, f64)> {
    let mesh = &solve.mesh;
    let dofmap = &solve.dofmap;
    let p_dim = dim_p(dofmap.p);
    let vol = quadrature_rule(2 * dofmap.p + 12)?;
    let mut sig2 = 0.0;
    let mut u2 = 0.0;
    for elem in 0..mesh.n_elems() {
        let aff = &mesh.affine[elem];
        for qi in 0..vol.len() {
            let [xh, yh] = vol.xy(qi);
            let w = vol.weights[qi] * aff.det;
            let xp = aff.apply([xh, yh]);
            let phis = solve.kit.scalar.eval(p_dim, xh, yh);
            match &solve.problem {
                Problem::Poisson(exact) => {
                    let sig = exact.sigma(xp[0], xp[1]);
                    let uu = exact.u(xp[0], xp[1]);
                    let mut sh = [0.0; 2];
                    let mut uh = 0.0;
                    for s in 0..p_dim {
                        for c in 0..2 {
                            sh[c] += full[dofmap.sigma_dof(elem, s, c)] * phis[s];
                        }
                        uh += full[dofmap.u_dof(elem, s, 0)] * phis[s];
                    }
                    sig2 += w * ((sig[0] - sh[0]).powi(2) + (sig[1] - sh[1]).powi(2));
                    u2 += w * (uu - uh).powi(2);
                }
                Problem::Elasticity(exact) => {
                    let sig = exact.sigma(xp[0], xp[1]);
                    let uu = exact.u(xp[0], xp[1]);
                    let flat = [sig[0][0], sig[0][1], sig[1][0], sig[1][1]];
                    let mut sh = [0.0; 4];
                    let mut uh = [0.0; 2];
                    for s in 0..p_dim {
                        for m in 0..4 {
                            sh[m] += full[dofmap.sigma_dof(elem, s, m)] * phis[s];
                        }
                        for c in 0..2 {
                            uh[c] += full[dofmap.u_dof(elem, s, c)] * phis[s];
                        }
                    }
                    sig2 += w * flat
                        .iter()
                        .zip(&sh)
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>();
                    u2 += w * ((uu[0] - uh[0]).powi(2) + (uu[1] - uh[1]).powi(2));
                }
            }
        }
    }
    Ok((sig2.sqrt(), u2.sqrt()))
}

/// Residual error indicator: eta^2 = sum_K || lift of (l - b(u_h, .)) ||_V^2
/// plus the squared global beta residual for elasticity.
pub fn residual_indicator(solve: &DpgSolve) -> (f64, Vec<f64>) {
    let mut per_elem = Vec::with_capacity(solve.mesh.n_elems());
    let mut total = 0.0;
    for (lg, lb) in solve.grams.iter().zip(&solve.blocks) {
        let l2g = solve.dofmap.local_to_global(&solve.mesh, lb.elem);
        let xl = DVector::from_iterator(l2g.len(), l2g.iter().map(|&g| solve.full[g]));
        let rho = &lb.load - &lb.b * &xl;
        let eps = lg.chol.solve(&rho);
        let eta2 = rho.dot(&eps).max(0.0);
        per_elem.push(eta2.sqrt());
        total += eta2;
    }
    if let Some(b) = &solve.sys.rank_one {
        let dot: f64 = b.iter().zip(&solve.x).map(|(bi, xi)| bi * xi).sum();
        total += dot * dot;
    }
    (total.sqrt(), per_elem)
}

/// Galerkin orthogonality: max_i |b(U_exact - u_h, T^r B_i)| relative to
/// the load scale, evaluating b(U_exact, .) by quadrature.
pub fn galerkin_orthogonality(solve: &DpgSolve) -> Result<f64> {
    use super::manufactured::{residual_helper_elasticity, residual_helper_poisson};
    let (exact_rows, beta_exact) = match &solve.problem {
        Problem::Poisson(exact) => (
            residual_helper_poisson(&solve.kit, &solve.mesh, exact)?,
            0.0,
        ),
        Problem::Elasticity(exact) => residual_helper_elasticity(&solve.kit, &solve.mesh, exact)?,
    };
    let n = solve.dofmap.n_free;
    let mut r = vec![0.0; n];
    // b(U_exact, T^r B_i) scattered over free DOFs.
    for (op, rex) in solve.ops.iter().zip(&exact_rows) {
        let l2g = solve.dofmap.local_to_global(&solve.mesh, op.elem);
        let contrib = op.t.transpose() * rex;
        for (i, &g) in l2g.iter().enumerate() {
            if let Some(fi) = solve.dofmap.free_of(g) {
                r[fi] += contrib[i];
            }
        }
    }
    // beta component of T^r B_i is the assembled beta vector.
    if let Some(b) = &solve.sys.rank_one {
        for i in 0..n {
            r[i] += b[i] * beta_exact;
        }
    }
    // minus b(u_h, T^r B_i) = (S x)_i.
    let sx = solve.sys.apply(&solve.x);
    let scale = solve
        .sys
        .rhs
        .iter()
        .fold(0.0_f64, |m, v| m.max(v.abs()))
        .max(1e-300);
    let mut worst: f64 = 0.0;
    for i in 0..n {
        worst = worst.max((r[i] - sx[i]).abs());
    }
    Ok(worst / scale)
}

/// Errors and diagnostics of one solve.
#[derive(Debug, Clone, Copy)]
pub struct ErrorReport {
    pub err_sigma: f64,
    pub err_u: f64,
    pub err_trace: f64,
    pub err_flux: f64,
    pub eta: f64,
    /// Best-approximation surrogate (fields by L2 projection).
    pub best_sigma: f64,
    pub best_u: f64,
    pub quasiopt_ratio: f64,
    pub alpha_h: f64,
}

pub fn error_report(solve: &DpgSolve, norms: &TraceNorms) -> Result<ErrorReport> {
    let exact = exact_dof_vector(solve)?;
    let (err_sigma, err_u) = field_l2_errors(solve, &solve.full)?;
    let (best_sigma, best_u) = field_l2_errors(solve, &exact)?;
    let delta: Vec<f64> = solve.full.iter().zip(&exact).map(|(a, b)| a - b).collect();
    let (tr2, fx2) = norms.energies(&solve.mesh, &solve.dofmap, &delta);
    let (eta, _) = residual_indicator(solve);
    let num = (err_sigma * err_sigma + err_u * err_u + tr2 + fx2).sqrt();
    let den = (best_sigma * best_sigma + best_u * best_u)
        .sqrt()
        .max(1e-300);
    let alpha_h = match solve.dofmap.alpha {
        Some(a) => solve.full[a],
        None => 0.0,
    };
    Ok(ErrorReport {
        err_sigma,
        err_u,
        err_trace: tr2.sqrt(),
        err_flux: fx2.sqrt(),
        eta,
        best_sigma,
        best_u,
        quasiopt_ratio: num / den,
        alpha_h,
    })
}

/// Build the discrete U-norm machinery for a solve.
pub fn trace_norms_for(solve: &DpgSolve) -> Result<TraceNorms> {
    let kit = LiftKit::new(solve.dofmap.p)?;
    TraceNorms::build(&kit, &solve.mesh)
}
