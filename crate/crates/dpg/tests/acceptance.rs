//! Acceptance suite: every release-gating property at its stated tolerance,
//! one pass/fail line per criterion (visible with --nocapture).

use dpg::forms::{elasticity, poisson, ElementKit};
use dpg::fortin;
use dpg::mesh::Mesh;
use dpg::spaces::{ProblemKind, TestLayout, TestMode, TrialDofMap};
use dpg::study::{
    self, convergence_study, error_report, solve_problem, trace_norms_for, ElasticitySolution,
    PoissonSolution, Problem, RateTable, StudyConfig,
};
use dpg::system::{assemble, dense_oracle_matrix, SolverChoice, SpdFactor};
use dpg::trial_to_test::{local_injectivity_report, trial_to_test_local};
use std::sync::OnceLock;

fn verdict(criterion: &str, pass: bool, detail: &str) {
    println!(
        "ACCEPTANCE {criterion}: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "{criterion} failed: {detail}");
}

fn poisson_study(p: usize) -> &'static RateTable {
    static CACHE: OnceLock<Vec<RateTable>> = OnceLock::new();
    &CACHE.get_or_init(|| {
        (0..=2)
            .map(|p| {
                let cfg = StudyConfig {
                    problem: Problem::Poisson(PoissonSolution::SinSin),
                    p,
                    mode: TestMode::Uniform(p + 2),
                    n0: 2,
                    levels: 4,
                    solver: SolverChoice::Cholesky,
                    cg_tol: 1e-12,
                    seed: 20240801,
                    with_kappa: true,
                };
                let (table, solves) = convergence_study(&cfg).expect("poisson study");
                // Criterion 6 rides along: every accepted configuration's
                // sparse factorization must certify SPD.
                for s in &solves {
                    SpdFactor::new(&s.sys).expect("SPD certification");
                }
                table
            })
            .collect()
    })[p]
}

fn elasticity_study(p: usize) -> &'static (RateTable, f64) {
    static CACHE: OnceLock<Vec<(RateTable, f64)>> = OnceLock::new();
    &CACHE.get_or_init(|| {
        (0..=1)
            .map(|p| {
                let cfg = StudyConfig {
                    problem: Problem::Elasticity(ElasticitySolution::new(1.0, 1.0)),
                    p,
                    mode: TestMode::Uniform(p + 2),
                    n0: 2,
                    levels: 4,
                    solver: SolverChoice::Cholesky,
                    cg_tol: 1e-12,
                    seed: 20240801,
                    with_kappa: false,
                };
                let (table, solves) = convergence_study(&cfg).expect("elasticity study");
                for s in &solves {
                    SpdFactor::new(&s.sys).expect("SPD certification");
                }
                let alpha = table.rows.last().unwrap().alpha_h.abs();
                (table, alpha)
            })
            .collect()
    })[p]
}

#[test]
fn criterion_01_poisson_convergence_rates() {
    for p in 0..=2usize {
        let table = poisson_study(p);
        let rs = table.rate_sigma_last.unwrap();
        let ru = table.rate_u_last.unwrap();
        let lo = p as f64 + 0.85;
        let hi = p as f64 + 1.3;
        verdict(
            &format!("1 (poisson rates, p = {p})"),
            rs >= lo && rs <= hi && ru >= lo && ru <= hi,
            &format!("rate_sigma = {rs:.3}, rate_u = {ru:.3}, window [{lo:.2}, {hi:.2}]"),
        );
    }
}

#[test]
fn criterion_02_elasticity_rates_and_alpha() {
    for p in 0..=1usize {
        let (table, alpha) = elasticity_study(p);
        let rs = table.rate_sigma_last.unwrap();
        let ru = table.rate_u_last.unwrap();
        let lo = p as f64 + 0.8;
        let hi = p as f64 + 1.35;
        verdict(
            &format!("2 (elasticity rates, p = {p})"),
            rs >= lo && rs <= hi && ru >= lo && ru <= hi && *alpha <= 1e-8,
            &format!(
                "rate_sigma = {rs:.3}, rate_u = {ru:.3}, window [{lo:.2}, {hi:.2}], |alpha_h| = {alpha:.2e}"
            ),
        );
    }
}

#[test]
fn criterion_03_fortin_identities() {
    for p in 0..=3usize {
        let report = fortin::verify_fortin_poisson(p, 8, 8, 20240801).expect("fortin build");
        let worst_identity = report
            .identities
            .iter()
            .map(|(_, v)| *v)
            .fold(0.0_f64, f64::max);
        verdict(
            &format!("3 (fortin identities, p = {p})"),
            worst_identity <= 1e-9 && report.combined <= 1e-9 && report.div_commutativity <= 1e-10,
            &format!(
                "max identity residual = {worst_identity:.2e}, combined = {:.2e}, div-comm = {:.2e}",
                report.combined, report.div_commutativity
            ),
        );
    }
}

#[test]
fn criterion_04_square_system_solvability() {
    for p in 0..=3usize {
        let pi0 = fortin::Pi0::build(p, 8).expect("bubble interpolant");
        let pidiv = fortin::PiDiv::build(p, 8).expect("hdiv interpolant");
        let s_min = pi0.diagnostics.sigma_min.min(pidiv.diagnostics.sigma_min);
        verdict(
            &format!("4 (square-system solvability, p = {p})"),
            s_min > 1e-8,
            &format!(
                "bubble sigma_min = {:.2e}, hdiv sigma_min = {:.2e}",
                pi0.diagnostics.sigma_min, pidiv.diagnostics.sigma_min
            ),
        );
    }
}

#[test]
fn criterion_05_conditioning_slope() {
    for p in 0..=1usize {
        let slope = poisson_study(p).kappa_slope.unwrap();
        verdict(
            &format!("5 (kappa slope, p = {p})"),
            (-2.4..=-1.2).contains(&slope),
            &format!("log-log slope = {slope:.3}, window [-2.4, -1.2]"),
        );
    }
}

#[test]
fn criterion_06_spd_certification() {
    // The shared studies already factor every accepted configuration; here
    // certify representative fresh configurations explicitly, including the
    // rank-one elasticity operator.
    let mut ok = true;
    for (kind, p) in [
        (ProblemKind::Poisson, 0usize),
        (ProblemKind::Poisson, 2),
        (ProblemKind::Elasticity, 1),
    ] {
        let problem = match kind {
            ProblemKind::Poisson => Problem::Poisson(PoissonSolution::SinSin),
            ProblemKind::Elasticity => Problem::Elasticity(ElasticitySolution::new(1.0, 1.0)),
        };
        let mesh = Mesh::unit_square(3).unwrap();
        let solve = solve_problem(
            mesh,
            problem,
            p,
            TestMode::Uniform(p + 2),
            SolverChoice::Cholesky,
            1e-12,
        )
        .unwrap();
        ok &= SpdFactor::new(&solve.sys).is_ok();
        let est = dpg::system::condition_estimate(&solve.sys).unwrap();
        ok &= est.lambda_min > 0.0;
    }
    verdict(
        "6 (SPD certification = dim V_h^r equals dim U_h)",
        ok,
        "sparse factorization succeeded and lambda_min > 0 on all configurations",
    );
}

#[test]
fn criterion_07_stiffness_identity_vs_dense_oracle() {
    // Sparse assembly against the dense oracle sum_K B^T G^{-1} B with an
    // explicit inverse, on meshes up to 32 elements.
    let mut worst: f64 = 0.0;
    for (kind, p, n) in [
        (ProblemKind::Poisson, 0usize, 4usize),
        (ProblemKind::Poisson, 1, 2),
        (ProblemKind::Elasticity, 0, 2),
    ] {
        let mesh = Mesh::unit_square(n).unwrap();
        let layout = TestLayout::build(p, TestMode::Uniform(p + 2), kind).unwrap();
        let kit = ElementKit::new(layout).unwrap();
        let dofmap = TrialDofMap::build(&mesh, p, kind);
        let mut grams = Vec::new();
        let mut blocks = Vec::new();
        let mut ops = Vec::new();
        for e in 0..mesh.n_elems() {
            let (lb, lg) = match kind {
                ProblemKind::Poisson => (
                    poisson::local_form_blocks(&kit, &mesh, e, &|_, _| 1.0),
                    poisson::local_gram(&kit, &mesh, e).unwrap(),
                ),
                ProblemKind::Elasticity => {
                    let c =
                        dpg::forms::ComplianceTensor::isotropic_uniform(mesh.n_elems(), 1.0, 1.0);
                    let q0 = c.q0(mesh.n_elems());
                    (
                        elasticity::local_form_blocks(&kit, &mesh, e, &c, q0, &|_, _| [1.0, 0.0]),
                        elasticity::local_gram(&kit, &mesh, e).unwrap(),
                    )
                }
            };
            ops.push(trial_to_test_local(&lg, &lb).unwrap());
            grams.push(lg);
            blocks.push(lb);
        }
        let sys = assemble(&mesh, &dofmap, &ops).unwrap();
        let dense = dense_oracle_matrix(&mesh, &dofmap, &grams, &blocks);
        let scale = dense.abs().max();
        let sparse = sys.mat.to_dense();
        let mut diff: f64 = 0.0;
        for i in 0..sys.n {
            for j in 0..sys.n {
                let mut v = sparse[[i, j]];
                if let Some(b) = &sys.rank_one {
                    v += b[i] * b[j];
                }
                diff = diff.max((v - dense[(i, j)]).abs());
            }
        }
        worst = worst.max(diff / scale);
    }
    verdict(
        "7 (stiffness identity vs dense oracle)",
        worst <= 1e-12,
        &format!("max relative deviation = {worst:.2e}"),
    );
}

#[test]
fn criterion_08_patch_consistency() {
    // Exact solution components in U_h: all reported errors and eta at
    // rounding level.
    let mesh = Mesh::reference_triangle().unwrap();
    let solve = solve_problem(
        mesh,
        Problem::Poisson(PoissonSolution::RefBubble),
        3,
        TestMode::Uniform(5),
        SolverChoice::Cholesky,
        1e-12,
    )
    .unwrap();
    let norms = trace_norms_for(&solve).unwrap();
    let report = error_report(&solve, &norms).unwrap();
    let worst = report
        .err_sigma
        .max(report.err_u)
        .max(report.err_trace)
        .max(report.err_flux)
        .max(report.eta);
    verdict(
        "8 (patch consistency)",
        worst <= 1e-9,
        &format!("max reported error = {worst:.2e}"),
    );
}

#[test]
fn criterion_09_quasioptimality() {
    let table = poisson_study(1);
    let rows = &table.rows;
    let q_last = rows[rows.len() - 1].quasiopt;
    let q_prev = rows[rows.len() - 2].quasiopt;
    let stable = (q_last - q_prev).abs() <= 0.5 * q_prev;
    verdict(
        "9 (quasioptimality)",
        q_last <= 10.0 && stable,
        &format!("ratio = {q_last:.3} (prev {q_prev:.3}), bound 10, stability 50%"),
    );
}

#[test]
fn criterion_10_determinism() {
    let cfg = StudyConfig {
        problem: Problem::Poisson(PoissonSolution::SinSin),
        p: 0,
        mode: TestMode::Uniform(2),
        n0: 2,
        levels: 3,
        solver: SolverChoice::Cholesky,
        cg_tol: 1e-12,
        seed: 7,
        with_kappa: true,
    };
    let (a, _) = convergence_study(&cfg).unwrap();
    let (b, _) = convergence_study(&cfg).unwrap();
    let csv_a = a.to_csv();
    let csv_b = b.to_csv();
    verdict(
        "10 (determinism)",
        csv_a == csv_b,
        &format!("{} bytes, identical across runs", csv_a.len()),
    );
}

// Supporting invariants beyond the numbered criteria.

#[test]
fn injectivity_positive_on_accepted_configuration() {
    // p = 0, r = 2, n = 2: the dense pencil estimate is strictly positive.
    let mesh = Mesh::unit_square(2).unwrap();
    let solve = solve_problem(
        mesh,
        Problem::Poisson(PoissonSolution::SinSin),
        0,
        TestMode::Uniform(2),
        SolverChoice::Cholesky,
        1e-12,
    )
    .unwrap();
    let lift_kit = study::LiftKit::new(0).unwrap();
    let norms = study::TraceNorms::build(&lift_kit, &solve.mesh).unwrap();
    let m = norms.ugram(&solve.mesh, &solve.dofmap);
    let mut md = nalgebra::DMatrix::<f64>::zeros(m.rows(), m.rows());
    for (row, vec) in m.outer_iterator().enumerate() {
        for (col, &v) in vec.iter() {
            md[(row, col)] = v;
        }
    }
    let sd = solve.sys.mat.to_dense();
    let s = nalgebra::DMatrix::from_fn(solve.sys.n, solve.sys.n, |i, j| sd[[i, j]]);
    let rep = local_injectivity_report(&s, &md);
    assert!(!rep.degenerate, "sigma_min = {:.3e}", rep.sigma_min);
    assert!(rep.sigma_min > 0.0);
}

#[test]
fn degenerate_enrichment_is_flagged() {
    // Test hook: r = p bypassing validation. Either the factorization
    // reports non-SPD or the injectivity estimate flags degeneracy.
    let mesh = Mesh::unit_square(2).unwrap();
    let p = 0;
    let layout = TestLayout::unvalidated(p, p, ProblemKind::Poisson);
    let kit = ElementKit::new(layout).unwrap();
    let dofmap = TrialDofMap::build(&mesh, p, ProblemKind::Poisson);
    let mut ops = Vec::new();
    for e in 0..mesh.n_elems() {
        let lb = poisson::local_form_blocks(&kit, &mesh, e, &|_, _| 0.0);
        let lg = poisson::local_gram(&kit, &mesh, e).unwrap();
        ops.push(trial_to_test_local(&lg, &lb).unwrap());
    }
    let sys = assemble(&mesh, &dofmap, &ops).unwrap();
    match SpdFactor::new(&sys) {
        Err(_) => {} // non-SPD reported: degeneracy flagged
        Ok(_) => {
            let sd = sys.mat.to_dense();
            let s = nalgebra::DMatrix::from_fn(sys.n, sys.n, |i, j| sd[[i, j]]);
            let m = nalgebra::DMatrix::identity(sys.n, sys.n);
            let rep = local_injectivity_report(&s, &m);
            assert!(
                rep.degenerate,
                "under-enriched test space not flagged (sigma_min = {:.3e})",
                rep.sigma_min
            );
        }
    }
}

#[test]
fn solution_invariant_under_element_reordering() {
    let mesh_a = Mesh::unit_square(2).unwrap();
    let mut tris = mesh_a.tris.clone();
    tris.reverse();
    let mesh_b = Mesh::from_parts(mesh_a.vertices.clone(), tris, false).unwrap();

    let solve = |mesh: Mesh| {
        solve_problem(
            mesh,
            Problem::Poisson(PoissonSolution::SinSin),
            1,
            TestMode::Uniform(3),
            SolverChoice::Cholesky,
            1e-12,
        )
        .unwrap()
    };
    let a = solve(mesh_a);
    let b = solve(mesh_b);
    // Match elements by their vertex triple and compare u coefficients.
    let find = |tri: &[usize; 3]| b.mesh.tris.iter().position(|t| t == tri).unwrap();
    let mut scale: f64 = 0.0;
    for g in 0..a.dofmap.n_all {
        scale = scale.max(a.full[g].abs());
    }
    for (ea, tri) in a.mesh.tris.iter().enumerate() {
        let eb = find(tri);
        for s in 0..a.dofmap.p_dim {
            let va = a.full[a.dofmap.u_dof(ea, s, 0)];
            let vb = b.full[b.dofmap.u_dof(eb, s, 0)];
            assert!(
                (va - vb).abs() <= 1e-9 * scale,
                "element {ea}: {va} vs {vb}"
            );
        }
    }
}

#[test]
fn split_mode_matches_uniform_at_n2() {
    // The split enrichment coincides with uniform r = p + 2 in 2D; rates
    // must match exactly up to solver noise.
    let run = |mode: TestMode| {
        let cfg = StudyConfig {
            problem: Problem::Poisson(PoissonSolution::SinSin),
            p: 1,
            mode,
            n0: 2,
            levels: 3,
            solver: SolverChoice::Cholesky,
            cg_tol: 1e-12,
            seed: 3,
            with_kappa: false,
        };
        convergence_study(&cfg).unwrap().0
    };
    let uniform = run(TestMode::Uniform(3));
    let split = run(TestMode::Split);
    let du = (uniform.rate_sigma_last.unwrap() - split.rate_sigma_last.unwrap()).abs();
    let dv = (uniform.rate_u_last.unwrap() - split.rate_u_last.unwrap()).abs();
    assert!(du < 0.1 && dv < 0.1, "split vs uniform drift: {du}, {dv}");
}

#[test]
fn elasticity_fortin_identities_pass() {
    for p in 0..=1usize {
        let report = fortin::verify_fortin_elasticity(p, 6, 4, 20240801).unwrap();
        assert!(report.pass(), "p={p}:\n{}", report.to_text());
    }
}

#[test]
fn norm_equivalence_interval_is_stable() {
    // Measured ||T^r W||_V / ||W||_U ratios stay within a fixed interval
    // across refinements (recorded, not asserted against paper constants).
    let table = poisson_study(1);
    for row in &table.rows {
        assert!(row.ratio_min > 0.0);
        assert!(row.ratio_max.is_finite());
        assert!(row.ratio_min <= row.ratio_max);
        // Within the global interval by construction; sanity margins:
        assert!(row.ratio_max / row.ratio_min < 1e3);
    }
}
