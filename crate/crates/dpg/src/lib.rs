//! Practical DPG solver kernel on 2D simplicial meshes.
//!
//! The trial space carries element-wise polynomial fields plus skeleton
//! traces and fluxes; test functions are computed per element by solving
//! small Gram systems in an enriched broken test space, which condenses
//! the method to a global sparse SPD system. Alongside the solver the
//! crate ships the verification machinery: Fortin operators on the
//! reference element, discrete minimum-energy trace norms, convergence
//! and conditioning studies, and a residual error indicator.

// Index loops over small fixed-size geometric arrays read better than
// iterator chains in the dense numeric kernels below; `!(x > 0.0)` is the
// NaN-catching positivity test in the pivot and convergence checks.
#![allow(clippy::needless_range_loop)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::manual_is_multiple_of)]

pub mod cli;
pub mod error;
pub mod forms;
pub mod fortin;
pub mod mesh;
pub mod refelem;
pub mod spaces;
pub mod study;
pub mod system;

pub use error::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
