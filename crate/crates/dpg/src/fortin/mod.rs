//! Numerical realization of the Fortin operators on the reference element.
//!
//! These certify the method's hypotheses; the solver never calls them. Each
//! operator is defined by a square system of moment conditions on a
//! constrained polynomial target space. Probes are polynomials given by
//! coefficients in orthonormal reference bases; applying an operator means
//! computing the probe's moments and solving the cached square system.

pub mod cpi;
pub mod pidiv;
pub mod pidiv_sym;
pub mod pigrad;
pub mod verify;

pub use cpi::{measure_cpi_div, measure_cpi_grad, CpiEstimate};
pub use pidiv::{PiDiv, VecProbe};
pub use pidiv_sym::{MatProbe, PiDivSym};
pub use pigrad::{Pi0, PiGrad, ScalarProbe};
pub use verify::{verify_fortin_elasticity, verify_fortin_poisson, FortinReport};

pub(crate) use pidiv::nullspace as pidiv_nullspace;

use nalgebra::DMatrix;

/// Solvability diagnostics of one defining square system.
#[derive(Debug, Clone, Copy)]
pub struct SquareSystem {
    pub size: usize,
    pub sigma_min: f64,
    pub sigma_max: f64,
}

pub(crate) fn square_diagnostics(m: &DMatrix<f64>) -> SquareSystem {
    let svd = m.clone().svd(false, false);
    SquareSystem {
        size: m.nrows(),
        sigma_min: svd.singular_values.min(),
        sigma_max: svd.singular_values.max(),
    }
}
