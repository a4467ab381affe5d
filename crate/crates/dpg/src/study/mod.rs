//! Manufactured solutions, trace-norm surrogates, convergence and
//! conditioning studies, and the run-level constants report.

pub mod convergence;
pub mod driver;
pub mod extension;
pub mod manufactured;

pub use convergence::{
    condition_study, convergence_study, convergence_study_on, fit_slope, RateRow, RateTable,
    StudyConfig,
};
pub use driver::{
    error_report, exact_dof_vector, field_l2_errors, galerkin_orthogonality, residual_indicator,
    solve_problem, trace_norms_for, DpgSolve, ErrorReport, Problem,
};
pub use extension::{build_lifts, LiftKit, LiftSolver, TraceNorms};
pub use manufactured::{
    residual_check_elasticity, residual_check_poisson, ElasticitySolution, PoissonSolution,
    ResidualCheck,
};

/// Measured constants of one configuration, serialized as key: value lines.
#[derive(Debug, Clone, Default)]
pub struct ConstantsReport {
    pub entries: Vec<(String, String)>,
}

impl ConstantsReport {
    pub fn push(&mut self, key: &str, value: impl std::fmt::Display) {
        self.entries.push((key.to_string(), value.to_string()));
    }

    pub fn push_f64(&mut self, key: &str, value: f64) {
        self.entries
            .push((key.to_string(), format!("{value:.12e}")));
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.entries {
            s.push_str(k);
            s.push_str(": ");
            s.push_str(v);
            s.push('\n');
        }
        s
    }
}
