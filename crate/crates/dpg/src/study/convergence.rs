//! Refinement studies: error rates, conditioning, quasioptimality, and the
//! norm-equivalence ratios, with deterministic CSV output.

use super::driver::{error_report, solve_problem, DpgSolve, Problem};
use super::extension::{LiftKit, TraceNorms};
use crate::mesh::Mesh;
use crate::spaces::TestMode;
use crate::system::{condition_estimate, LinearSystem, SolverChoice};
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sprs::CsMat;

#[derive(Debug, Clone, Copy)]
pub struct StudyConfig {
    pub problem: Problem,
    pub p: usize,
    pub mode: TestMode,
    pub n0: usize,
    pub levels: usize,
    pub solver: SolverChoice,
    pub cg_tol: f64,
    pub seed: u64,
    pub with_kappa: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct RateRow {
    pub level: usize,
    pub h: f64,
    pub dofs: usize,
    pub err_sigma: f64,
    pub err_u: f64,
    pub err_trace: f64,
    pub err_flux: f64,
    pub eta: f64,
    pub kappa: Option<f64>,
    pub rate_sigma: Option<f64>,
    pub rate_u: Option<f64>,
    pub quasiopt: f64,
    pub alpha_h: f64,
    pub ratio_min: f64,
    pub ratio_max: f64,
}

#[derive(Debug, Clone)]
pub struct RateTable {
    pub rows: Vec<RateRow>,
    /// Pairwise rates from the last refinement pair.
    pub rate_sigma_last: Option<f64>,
    pub rate_u_last: Option<f64>,
    /// Least-squares fits over the last three levels.
    pub fit_sigma: Option<f64>,
    pub fit_u: Option<f64>,
    /// Least-squares slope of log kappa vs log h over all levels.
    pub kappa_slope: Option<f64>,
    /// Norm-equivalence interval merged over levels.
    pub ratio_min: f64,
    pub ratio_max: f64,
    /// U-Gram basis equivalence extremes at the finest level.
    pub lambda0: f64,
    pub lambda1: f64,
    /// Set when a level failed; the table holds the completed rows.
    pub aborted: Option<String>,
}

impl RateTable {
    /// CSV with the fixed column schema.
    pub fn to_csv(&self) -> String {
        let mut s = String::from(
            "level,h,dofs,err_sigma_L2,err_u_L2,err_trace_h12,err_flux_hm12,eta,kappa,rate_sigma,rate_u\n",
        );
        for r in &self.rows {
            let kappa = r.kappa.map(|k| format!("{k:.12e}")).unwrap_or_default();
            let rs = r.rate_sigma.map(|v| format!("{v:.6}")).unwrap_or_default();
            let ru = r.rate_u.map(|v| format!("{v:.6}")).unwrap_or_default();
            s.push_str(&format!(
                "{},{:.12e},{},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{},{},{}\n",
                r.level,
                r.h,
                r.dofs,
                r.err_sigma,
                r.err_u,
                r.err_trace,
                r.err_flux,
                r.eta,
                kappa,
                rs,
                ru
            ));
        }
        s
    }

    /// Two-column (log10 h, log10 err) plot file for one quantity.
    pub fn plot_data(&self, select: impl Fn(&RateRow) -> f64) -> String {
        let mut s = String::new();
        for r in &self.rows {
            let v = select(r);
            if v > 0.0 {
                s.push_str(&format!("{:.12e} {:.12e}\n", r.h.log10(), v.log10()));
            }
        }
        s
    }
}

/// Least-squares slope of y vs x.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        num += (x - mx) * (y - my);
        den += (x - mx) * (x - mx);
    }
    num / den
}

/// Uniform h-refinement study with errors, indicator, optional kappa, and
/// the measured norm-equivalence ratios.
pub fn convergence_study(cfg: &StudyConfig) -> Result<(RateTable, Vec<DpgSolve>)> {
    let base = Mesh::unit_square(cfg.n0)?;
    convergence_study_on(cfg, base)
}

/// Same, refining from a caller-provided coarse mesh.
pub fn convergence_study_on(cfg: &StudyConfig, base: Mesh) -> Result<(RateTable, Vec<DpgSolve>)> {
    if cfg.levels < 2 {
        return Err(Error::Invalid(
            "convergence study needs at least 2 levels".into(),
        ));
    }
    let mut rows: Vec<RateRow> = Vec::with_capacity(cfg.levels);
    let mut solves = Vec::with_capacity(cfg.levels);
    let mut mesh = base;
    let mut ratio_min = f64::INFINITY;
    let mut ratio_max = 0.0_f64;
    let mut lambda0 = f64::NAN;
    let mut lambda1 = f64::NAN;
    let mut aborted = None;

    for level in 0..cfg.levels {
        let next = if level + 1 < cfg.levels {
            Some(mesh.refine_uniform()?)
        } else {
            None
        };
        let solve = match solve_problem(mesh, cfg.problem, cfg.p, cfg.mode, cfg.solver, cfg.cg_tol)
        {
            Ok(s) => s,
            Err(e) => {
                // Solver failure aborts with the partial table.
                aborted = Some(format!("level {level}: {e}"));
                break;
            }
        };
        let lift_kit = LiftKit::new(cfg.p)?;
        let norms = TraceNorms::build(&lift_kit, &solve.mesh)?;
        let report = error_report(&solve, &norms)?;

        let kappa = if cfg.with_kappa {
            Some(condition_estimate(&solve.sys)?.kappa)
        } else {
            None
        };

        // Norm-equivalence ratios over seeded random trial vectors.
        let m = norms.ugram(&solve.mesh, &solve.dofmap);
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ (level as u64));
        let (rmin, rmax) = ratio_interval(&solve.sys, &m, &mut rng, 16);
        ratio_min = ratio_min.min(rmin);
        ratio_max = ratio_max.max(rmax);

        if level + 1 == cfg.levels {
            let msys = LinearSystem {
                n: m.rows(),
                mat: m.clone(),
                rank_one: None,
                alpha_index: None,
                rhs: vec![0.0; m.rows()],
            };
            if let Ok(est) = condition_estimate(&msys) {
                lambda0 = est.lambda_min;
                lambda1 = est.lambda_max;
            }
        }

        let prev = rows.last().copied();
        let rate =
            |e_prev: Option<f64>, e: f64| -> Option<f64> { e_prev.map(|ep| (ep / e).log2()) };
        rows.push(RateRow {
            level,
            h: solve.mesh.h_max,
            dofs: solve.dofmap.n_free,
            err_sigma: report.err_sigma,
            err_u: report.err_u,
            err_trace: report.err_trace,
            err_flux: report.err_flux,
            eta: report.eta,
            kappa,
            rate_sigma: rate(prev.map(|r| r.err_sigma), report.err_sigma),
            rate_u: rate(prev.map(|r| r.err_u), report.err_u),
            quasiopt: report.quasiopt_ratio,
            alpha_h: report.alpha_h,
            ratio_min: rmin,
            ratio_max: rmax,
        });
        solves.push(solve);
        mesh = match next {
            Some(m) => m,
            None => break,
        };
    }

    if rows.is_empty() {
        return Err(Error::Invalid(
            aborted.unwrap_or_else(|| "no level completed".into()),
        ));
    }
    let last = rows.len() - 1;
    let fit_over = |f: &dyn Fn(&RateRow) -> f64| -> Option<f64> {
        let take = rows.len().min(3);
        let xs: Vec<f64> = rows[rows.len() - take..].iter().map(|r| r.h.ln()).collect();
        let ys: Vec<f64> = rows[rows.len() - take..]
            .iter()
            .map(|r| f(r).ln())
            .collect();
        if ys.iter().all(|v| v.is_finite()) {
            Some(fit_slope(&xs, &ys))
        } else {
            None
        }
    };
    let kappa_slope = if cfg.with_kappa && rows.len() >= 2 {
        let xs: Vec<f64> = rows.iter().map(|r| r.h.ln()).collect();
        let ys: Vec<f64> = rows.iter().map(|r| r.kappa.unwrap().ln()).collect();
        Some(fit_slope(&xs, &ys))
    } else {
        None
    };
    let table = RateTable {
        rate_sigma_last: rows[last].rate_sigma,
        rate_u_last: rows[last].rate_u,
        fit_sigma: fit_over(&|r| r.err_sigma),
        fit_u: fit_over(&|r| r.err_u),
        kappa_slope,
        ratio_min,
        ratio_max,
        lambda0,
        lambda1,
        aborted,
        rows,
    };
    Ok((table, solves))
}

/// Conditioning study: kappa vs h with the fitted log-log slope.
pub fn condition_study(cfg: &StudyConfig) -> Result<(RateTable, Vec<DpgSolve>)> {
    if cfg.levels < 2 {
        return Err(Error::Invalid(
            "conditioning slope is undefined with fewer than 2 levels".into(),
        ));
    }
    let cfg = StudyConfig {
        with_kappa: true,
        ..*cfg
    };
    convergence_study(&cfg)
}

/// min/max of ||T^r W||_V / ||W||_U over random coefficient vectors.
fn ratio_interval(
    sys: &LinearSystem,
    ugram: &CsMat<f64>,
    rng: &mut ChaCha8Rng,
    trials: usize,
) -> (f64, f64) {
    let n = sys.n;
    let mut lo = f64::INFINITY;
    let mut hi = 0.0_f64;
    for _ in 0..trials {
        let w: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let sw = sys.apply(&w);
        let num: f64 = w.iter().zip(&sw).map(|(a, b)| a * b).sum();
        let mut mw = vec![0.0; n];
        for (row, vec) in ugram.outer_iterator().enumerate() {
            for (col, &v) in vec.iter() {
                mw[row] += v * w[col];
            }
        }
        let den: f64 = w.iter().zip(&mw).map(|(a, b)| a * b).sum();
        let ratio = (num / den).sqrt();
        lo = lo.min(ratio);
        hi = hi.max(ratio);
    }
    (lo, hi)
}
