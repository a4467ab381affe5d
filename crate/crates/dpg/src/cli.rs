//! Command-line entry point: flat key = value config files, flag overrides,
//! and run orchestration with deterministic outputs.
//!
//! Exit codes: 0 success, 1 numeric/runtime failure, 2 enrichment-degree
//! validation (r < p + N), 3 unknown config key or flag, 4 missing or
//! unreadable mesh source, 5 malformed config value. Every failure prints a
//! single line "ERROR <code>: <reason>" on stderr.

use crate::fortin;
use crate::mesh::Mesh;
use crate::spaces::{ProblemKind, TestMode};
use crate::study::{self, ConstantsReport, Problem, StudyConfig};
use crate::system::SolverChoice;
use crate::trial_to_test::local_injectivity_report;
use crate::{Error, Result};
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Solve,
    Converge,
    Cond,
    Fortin,
}

#[derive(Debug, Clone)]
pub enum MeshSource {
    Generated(usize),
    File(PathBuf),
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub problem: ProblemKind,
    pub p: usize,
    pub mode: TestMode,
    pub mesh: MeshSource,
    pub levels: usize,
    pub solver: SolverChoice,
    pub tol: f64,
    pub out: PathBuf,
    pub seed: u64,
    pub mu: f64,
    pub lambda: f64,
    pub reorient: bool,
    pub export_matrix: bool,
    pub robust: bool,
}

#[derive(Debug, Default, Clone)]
struct RawConfig {
    command: Option<String>,
    problem: Option<String>,
    p: Option<String>,
    r: Option<String>,
    split: Option<String>,
    n: Option<String>,
    mesh: Option<String>,
    levels: Option<String>,
    solver: Option<String>,
    tol: Option<String>,
    out: Option<String>,
    seed: Option<String>,
    mu: Option<String>,
    lambda: Option<String>,
    reorient: Option<String>,
    export_matrix: Option<String>,
    robust: Option<String>,
}

impl RawConfig {
    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = Some(value.to_string());
        match key {
            "command" => self.command = v,
            "problem" => self.problem = v,
            "p" => self.p = v,
            "r" => self.r = v,
            "split" => self.split = v,
            "n" => self.n = v,
            "mesh" => self.mesh = v,
            "levels" => self.levels = v,
            "solver" => self.solver = v,
            "tol" => self.tol = v,
            "out" => self.out = v,
            "seed" => self.seed = v,
            "mu" => self.mu = v,
            "lambda" => self.lambda = v,
            "reorient" => self.reorient = v,
            "export_matrix" => self.export_matrix = v,
            "robust" => self.robust = v,
            _ => return Err(Error::config(3, format!("unknown key '{key}'"))),
        }
        Ok(())
    }
}

/// Parse the flat key = value config text. Blank lines and lines starting
/// with '#' are ignored; keys must be known.
fn parse_config_text(text: &str, raw: &mut RawConfig) -> Result<()> {
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::config(
                5,
                format!("line {}: expected 'key = value'", lineno + 1),
            ));
        };
        raw.set(key.trim(), value.trim())?;
    }
    Ok(())
}

/// Parse CLI flags into the same raw form; flags override file values.
fn parse_flags(args: &[String], raw: &mut RawConfig) -> Result<Option<PathBuf>> {
    let mut config_path = None;
    let mut i = 0;
    while i < args.len() {
        let flag = args[i].clone();
        let mut take = || -> Result<String> {
            i += 1;
            args.get(i)
                .cloned()
                .ok_or_else(|| Error::config(5, format!("flag {flag} needs a value")))
        };
        match flag.as_str() {
            "--config" => config_path = Some(PathBuf::from(take()?)),
            "--command" => raw.command = Some(take()?),
            "--problem" => raw.problem = Some(take()?),
            "--p" => raw.p = Some(take()?),
            "--r" => raw.r = Some(take()?),
            "--split" => raw.split = Some("on".into()),
            "--n" => raw.n = Some(take()?),
            "--mesh" => raw.mesh = Some(take()?),
            "--levels" => raw.levels = Some(take()?),
            "--solver" => raw.solver = Some(take()?),
            "--tol" => raw.tol = Some(take()?),
            "--out" => raw.out = Some(take()?),
            "--seed" => raw.seed = Some(take()?),
            "--reorient" => raw.reorient = Some("on".into()),
            "--export-matrix" => raw.export_matrix = Some("on".into()),
            "--robust" => raw.robust = Some("on".into()),
            other => return Err(Error::config(3, format!("unknown flag '{other}'"))),
        }
        i += 1;
    }
    Ok(config_path)
}

fn parse_num<T: std::str::FromStr>(v: &Option<String>, key: &str, default: T) -> Result<T> {
    match v {
        None => Ok(default),
        Some(s) => s
            .parse()
            .map_err(|_| Error::config(5, format!("cannot parse {key} = '{s}'"))),
    }
}

fn parse_switch(v: &Option<String>, key: &str) -> Result<bool> {
    match v.as_deref() {
        None => Ok(false),
        Some("on") | Some("true") | Some("1") => Ok(true),
        Some("off") | Some("false") | Some("0") => Ok(false),
        Some(s) => Err(Error::config(5, format!("cannot parse {key} = '{s}'"))),
    }
}

/// Parse and validate a config given only as file text (no flags).
pub fn parse_config_str(text: &str) -> Result<RunConfig> {
    let mut raw = RawConfig::default();
    parse_config_text(text, &mut raw)?;
    validate(raw)
}

/// Parse and validate a full run configuration from CLI arguments,
/// reading --config first so flags override file values.
pub fn parse_config(args: &[String]) -> Result<RunConfig> {
    let mut flag_raw = RawConfig::default();
    let config_path = parse_flags(args, &mut flag_raw)?;
    let mut raw = RawConfig::default();
    if let Some(path) = &config_path {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(5, format!("cannot read config {path:?}: {e}")))?;
        parse_config_text(&text, &mut raw)?;
    }
    merge(&mut raw, flag_raw);
    validate(raw)
}

fn merge(base: &mut RawConfig, over: RawConfig) {
    macro_rules! take {
        ($f:ident) => {
            if over.$f.is_some() {
                base.$f = over.$f;
            }
        };
    }
    take!(command);
    take!(problem);
    take!(p);
    take!(r);
    take!(split);
    take!(n);
    take!(mesh);
    take!(levels);
    take!(solver);
    take!(tol);
    take!(out);
    take!(seed);
    take!(mu);
    take!(lambda);
    take!(reorient);
    take!(export_matrix);
    take!(robust);
}

fn validate(raw: RawConfig) -> Result<RunConfig> {
    let command = match raw.command.as_deref() {
        Some("solve") => Command::Solve,
        Some("converge") => Command::Converge,
        Some("cond") => Command::Cond,
        Some("fortin") => Command::Fortin,
        Some(other) => return Err(Error::config(5, format!("unknown command '{other}'"))),
        None => return Err(Error::config(5, "missing command".to_string())),
    };
    let problem = match raw.problem.as_deref() {
        None | Some("poisson") => ProblemKind::Poisson,
        Some("elasticity") => ProblemKind::Elasticity,
        Some(other) => return Err(Error::config(5, format!("unknown problem '{other}'"))),
    };
    let p: usize = parse_num(&raw.p, "p", 1)?;
    if p > 8 {
        return Err(Error::config(5, format!("p = {p} exceeds the supported 8")));
    }
    let split = parse_switch(&raw.split, "split")?;
    let mode = if split {
        TestMode::Split
    } else {
        let r: usize = parse_num(&raw.r, "r", p + 2)?;
        if r < p + 2 {
            return Err(Error::config(
                2,
                format!("r = {r} violates r >= p + N = {} (p = {p}, N = 2)", p + 2),
            ));
        }
        TestMode::Uniform(r)
    };
    let mesh = match (&raw.mesh, &raw.n) {
        (Some(path), _) if !path.is_empty() => MeshSource::File(PathBuf::from(path)),
        (Some(_), _) => return Err(Error::config(4, "empty mesh path".to_string())),
        (None, n) => {
            let n: usize = parse_num(n, "n", 2)?;
            if n == 0 {
                return Err(Error::config(4, "mesh generator needs n >= 1".to_string()));
            }
            MeshSource::Generated(n)
        }
    };
    let solver = match raw.solver.as_deref() {
        None | Some("chol") => SolverChoice::Cholesky,
        Some("cg") => SolverChoice::Cg,
        Some(other) => return Err(Error::config(5, format!("unknown solver '{other}'"))),
    };
    Ok(RunConfig {
        command,
        problem,
        p,
        mode,
        mesh,
        levels: parse_num(&raw.levels, "levels", 4)?,
        solver,
        tol: parse_num(&raw.tol, "tol", 1e-10)?,
        out: PathBuf::from(raw.out.unwrap_or_else(|| "out".to_string())),
        seed: parse_num(&raw.seed, "seed", 0)?,
        mu: parse_num(&raw.mu, "mu", 1.0)?,
        lambda: parse_num(&raw.lambda, "lambda", 1.0)?,
        reorient: parse_switch(&raw.reorient, "reorient")?,
        export_matrix: parse_switch(&raw.export_matrix, "export_matrix")?,
        robust: parse_switch(&raw.robust, "robust")?,
    })
}

fn load_base_mesh(cfg: &RunConfig) -> Result<Mesh> {
    match &cfg.mesh {
        MeshSource::Generated(n) => Mesh::unit_square(*n),
        MeshSource::File(path) => Mesh::read_file(path, cfg.reorient)
            .map_err(|e| Error::config(4, format!("mesh source {path:?}: {e}"))),
    }
}

fn problem_of(cfg: &RunConfig) -> Problem {
    match cfg.problem {
        ProblemKind::Poisson => Problem::Poisson(study::PoissonSolution::SinSin),
        ProblemKind::Elasticity => {
            Problem::Elasticity(study::ElasticitySolution::new(cfg.mu, cfg.lambda))
        }
    }
}

/// Execute a validated configuration; writes artifacts under `out`.
pub fn run(cfg: &RunConfig) -> Result<()> {
    std::fs::create_dir_all(&cfg.out)?;
    match cfg.command {
        Command::Solve => run_solve(cfg),
        Command::Converge | Command::Cond => run_study(cfg),
        Command::Fortin => run_fortin(cfg),
    }
}

fn run_solve(cfg: &RunConfig) -> Result<()> {
    let mesh = load_base_mesh(cfg)?;
    let shape_warn = mesh.shape_ratio_max;
    let solve = study::solve_problem(mesh, problem_of(cfg), cfg.p, cfg.mode, cfg.solver, cfg.tol)?;
    let norms = study::trace_norms_for(&solve)?;
    let report = study::error_report(&solve, &norms)?;
    let (eta, _) = study::residual_indicator(&solve);

    let mut constants = ConstantsReport::default();
    constants.push("command", "solve");
    constants.push("problem", format_problem(cfg.problem));
    constants.push("p", cfg.p);
    constants.push("dofs", solve.dofmap.n_free);
    constants.push_f64("h_max", solve.mesh.h_max);
    constants.push_f64("shape_ratio_max", shape_warn);
    if shape_warn > crate::mesh::SHAPE_RATIO_WARN {
        constants.push("shape_warning", "ratio exceeds 20");
    }
    constants.push_f64("solve_residual", solve.stats.residual);
    constants.push_f64("err_sigma_L2", report.err_sigma);
    constants.push_f64("err_u_L2", report.err_u);
    constants.push_f64("err_trace_h12_discrete", report.err_trace);
    constants.push_f64("err_flux_hm12_discrete", report.err_flux);
    constants.push_f64("eta", eta);
    constants.push_f64("quasiopt_ratio", report.quasiopt_ratio);
    if solve.dofmap.alpha.is_some() {
        constants.push_f64("alpha_h", report.alpha_h);
    }
    let est = crate::system::condition_estimate(&solve.sys)?;
    constants.push_f64("kappa", est.kappa);
    constants.push_f64("lambda_max_S", est.lambda_max);
    constants.push_f64("lambda_min_S", est.lambda_min);
    std::fs::write(cfg.out.join("constants.txt"), constants.to_text())?;

    if cfg.export_matrix {
        std::fs::write(cfg.out.join("matrix.txt"), solve.sys.export_ascii())?;
    }
    println!(
        "solve: dofs = {}, residual = {:.3e}, eta = {:.3e}",
        solve.dofmap.n_free, solve.stats.residual, eta
    );
    Ok(())
}

fn run_study(cfg: &RunConfig) -> Result<()> {
    if cfg.command == Command::Cond && cfg.levels < 2 {
        return Err(Error::Invalid(
            "conditioning slope is undefined with fewer than 2 levels".into(),
        ));
    }
    let base = load_base_mesh(cfg)?;
    let study_cfg = StudyConfig {
        problem: problem_of(cfg),
        p: cfg.p,
        mode: cfg.mode,
        n0: 0, // unused when a base mesh is supplied
        levels: cfg.levels,
        solver: cfg.solver,
        cg_tol: cfg.tol,
        seed: cfg.seed,
        with_kappa: true,
    };
    let (table, solves) = study::convergence::convergence_study_on(&study_cfg, base)?;

    std::fs::write(cfg.out.join("rates.csv"), table.to_csv())?;
    if let Some(reason) = &table.aborted {
        return Err(Error::Invalid(format!(
            "study aborted, partial table written: {reason}"
        )));
    }
    std::fs::write(
        cfg.out.join("plot_err_sigma.txt"),
        table.plot_data(|r| r.err_sigma),
    )?;
    std::fs::write(cfg.out.join("plot_err_u.txt"), table.plot_data(|r| r.err_u))?;
    std::fs::write(cfg.out.join("plot_eta.txt"), table.plot_data(|r| r.eta))?;
    std::fs::write(
        cfg.out.join("plot_kappa.txt"),
        table.plot_data(|r| r.kappa.unwrap_or(f64::NAN)),
    )?;

    let mut constants = ConstantsReport::default();
    constants.push(
        "command",
        if cfg.command == Command::Cond {
            "cond"
        } else {
            "converge"
        },
    );
    constants.push("problem", format_problem(cfg.problem));
    constants.push("p", cfg.p);
    constants.push("levels", cfg.levels);
    constants.push("seed", cfg.seed);
    if let Some(v) = table.rate_sigma_last {
        constants.push_f64("rate_sigma_last_pair", v);
    }
    if let Some(v) = table.rate_u_last {
        constants.push_f64("rate_u_last_pair", v);
    }
    if let Some(v) = table.fit_sigma {
        constants.push_f64("rate_sigma_fit3", v);
    }
    if let Some(v) = table.fit_u {
        constants.push_f64("rate_u_fit3", v);
    }
    if let Some(v) = table.kappa_slope {
        constants.push_f64("kappa_slope", v);
    }
    constants.push_f64("ratio_interval_min", table.ratio_min);
    constants.push_f64("ratio_interval_max", table.ratio_max);
    constants.push_f64("lambda0", table.lambda0);
    constants.push_f64("lambda1", table.lambda1);
    let qlast = table.rows[table.rows.len() - 1].quasiopt;
    let qprev = table.rows[table.rows.len() - 2].quasiopt;
    constants.push_f64("quasiopt_last", qlast);
    constants.push_f64("quasiopt_prev", qprev);
    if cfg.problem == ProblemKind::Elasticity {
        constants.push_f64("alpha_h_finest", table.rows[table.rows.len() - 1].alpha_h);
    }

    // Certify the manufactured-solution convention on the coarse level.
    let coarse = &solves[0];
    let residual = match &coarse.problem {
        Problem::Poisson(exact) => {
            study::residual_check_poisson(&coarse.kit, &coarse.mesh, exact)?.max_relative
        }
        Problem::Elasticity(exact) => {
            study::residual_check_elasticity(&coarse.kit, &coarse.mesh, exact)?.max_relative
        }
    };
    constants.push_f64("manufactured_residual", residual);
    constants.push_f64(
        "galerkin_orthogonality",
        study::galerkin_orthogonality(coarse)?,
    );

    // Dense injectivity certificate where affordable.
    if coarse.dofmap.n_free <= 1500 {
        let s_dense = dense_system(coarse);
        let lift_kit = study::LiftKit::new(cfg.p)?;
        let norms = study::TraceNorms::build(&lift_kit, &coarse.mesh)?;
        let m = norms.ugram(&coarse.mesh, &coarse.dofmap);
        let md = sparse_to_dense(&m);
        let rep = local_injectivity_report(&s_dense, &md);
        constants.push_f64("injectivity_sigma_min", rep.sigma_min);
        constants.push("injectivity_degenerate", rep.degenerate);
    }

    // Measured Fortin continuity lower bounds.
    if cfg.p <= 4 {
        let pg = fortin::PiGrad::build(cfg.p, 8)?;
        let cg = fortin::measure_cpi_grad(&pg, 8, None)?;
        constants.push_f64("c_pi_grad_lower_bound", cg.c_pi);
        let pd = fortin::PiDiv::build(cfg.p, 8)?;
        let cd = fortin::measure_cpi_div(&pd, 8, None)?;
        constants.push_f64("c_pi_div_lower_bound", cd.c_pi);
    }

    // Poisson-robustness variant: reported, not asserted.
    if cfg.robust && cfg.problem == ProblemKind::Elasticity {
        let robust_cfg = StudyConfig {
            problem: Problem::Elasticity(study::ElasticitySolution::new(cfg.mu, 1e4)),
            levels: cfg.levels.min(3),
            ..study_cfg
        };
        let base = load_base_mesh(cfg)?;
        let (rt, _) = study::convergence::convergence_study_on(&robust_cfg, base)?;
        if let Some(v) = rt.rate_sigma_last {
            constants.push_f64("robust_lambda1e4_rate_sigma", v);
        }
        if let Some(v) = rt.rate_u_last {
            constants.push_f64("robust_lambda1e4_rate_u", v);
        }
    }

    std::fs::write(cfg.out.join("constants.txt"), constants.to_text())?;

    if cfg.export_matrix {
        let finest = &solves[solves.len() - 1];
        std::fs::write(cfg.out.join("matrix.txt"), finest.sys.export_ascii())?;
    }
    println!(
        "{}: {} levels, rate_sigma = {:?}, kappa_slope = {:?}",
        if cfg.command == Command::Cond {
            "cond"
        } else {
            "converge"
        },
        cfg.levels,
        table.rate_sigma_last,
        table.kappa_slope
    );
    Ok(())
}

fn run_fortin(cfg: &RunConfig) -> Result<()> {
    let report = match cfg.problem {
        ProblemKind::Poisson => fortin::verify_fortin_poisson(cfg.p, 8, 8, cfg.seed)?,
        ProblemKind::Elasticity => fortin::verify_fortin_elasticity(cfg.p, 8, 8, cfg.seed)?,
    };
    let mut text = report.to_text();
    if cfg.problem == ProblemKind::Poisson {
        let pg = fortin::PiGrad::build(cfg.p, 8)?;
        let cg = fortin::measure_cpi_grad(&pg, 8, None)?;
        let pd = fortin::PiDiv::build(cfg.p, 8)?;
        let cd = fortin::measure_cpi_div(&pd, 8, None)?;
        text.push_str(&format!("c_pi_grad_lower_bound: {:.6e}\n", cg.c_pi));
        text.push_str(&format!("c_pi_div_lower_bound: {:.6e}\n", cd.c_pi));
    }
    std::fs::write(cfg.out.join("fortin_report.txt"), &text)?;
    std::fs::write(cfg.out.join("fortin_residuals.csv"), report.residual_csv())?;
    println!(
        "fortin: p = {}, verdict = {}",
        cfg.p,
        if report.pass() { "PASS" } else { "FAIL" }
    );
    if !report.pass() {
        return Err(Error::Invalid("fortin verification failed".into()));
    }
    Ok(())
}

fn format_problem(p: ProblemKind) -> &'static str {
    match p {
        ProblemKind::Poisson => "poisson",
        ProblemKind::Elasticity => "elasticity",
    }
}

fn dense_system(solve: &study::DpgSolve) -> nalgebra::DMatrix<f64> {
    let n = solve.sys.n;
    let mut s = sparse_to_dense(&solve.sys.mat);
    if let Some(b) = &solve.sys.rank_one {
        for i in 0..n {
            for j in 0..n {
                s[(i, j)] += b[i] * b[j];
            }
        }
    }
    s
}

fn sparse_to_dense(m: &sprs::CsMat<f64>) -> nalgebra::DMatrix<f64> {
    let mut d = nalgebra::DMatrix::<f64>::zeros(m.rows(), m.cols());
    for (row, vec) in m.outer_iterator().enumerate() {
        for (col, &v) in vec.iter() {
            d[(row, col)] = v;
        }
    }
    d
}

/// CLI driver: parse, run, map errors to exit codes.
pub fn main_with_args(args: Vec<String>) -> i32 {
    let cfg = match parse_config(&args) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("ERROR {}: {e}", e.exit_code());
            return e.exit_code();
        }
    };
    match run(&cfg) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("ERROR {}: {e}", e.exit_code());
            e.exit_code()
        }
    }
}
