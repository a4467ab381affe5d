//! Scalar, vector, and matrix-valued polynomial bases on the reference
//! triangle, expanded from the orthonormal scalar table by tensoring with
//! Frobenius-orthonormal component matrices.

use super::scalar::ScalarBasis;
use crate::{Error, Result};
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisKind {
    Scalar,
    Vector,
    SymMatrix,
    SkewMatrix,
    FullMatrix,
}

/// One structural component of a basis function.
#[derive(Debug, Clone, Copy)]
pub enum Component {
    Scalar,
    Vector([f64; 2]),
    Matrix([[f64; 2]; 2]),
}

impl Component {
    /// Frobenius product with another component of the same shape.
    pub fn dot(&self, other: &Component) -> f64 {
        match (self, other) {
            (Component::Scalar, Component::Scalar) => 1.0,
            (Component::Vector(a), Component::Vector(b)) => a[0] * b[0] + a[1] * b[1],
            (Component::Matrix(a), Component::Matrix(b)) => {
                let mut s = 0.0;
                for i in 0..2 {
                    for j in 0..2 {
                        s += a[i][j] * b[i][j];
                    }
                }
                s
            }
            _ => panic!("component shape mismatch"),
        }
    }

    pub fn as_matrix(&self) -> [[f64; 2]; 2] {
        match self {
            Component::Matrix(m) => *m,
            _ => panic!("not a matrix component"),
        }
    }

    pub fn as_vector(&self) -> [f64; 2] {
        match self {
            Component::Vector(v) => *v,
            _ => panic!("not a vector component"),
        }
    }
}

/// Components for each kind, Frobenius-orthonormal.
pub fn components(kind: BasisKind) -> Vec<Component> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    match kind {
        BasisKind::Scalar => vec![Component::Scalar],
        BasisKind::Vector => vec![Component::Vector([1.0, 0.0]), Component::Vector([0.0, 1.0])],
        BasisKind::SymMatrix => vec![
            Component::Matrix([[1.0, 0.0], [0.0, 0.0]]),
            Component::Matrix([[0.0, 0.0], [0.0, 1.0]]),
            Component::Matrix([[0.0, s], [s, 0.0]]),
        ],
        BasisKind::SkewMatrix => vec![Component::Matrix([[0.0, s], [-s, 0.0]])],
        BasisKind::FullMatrix => vec![
            Component::Matrix([[1.0, 0.0], [0.0, 0.0]]),
            Component::Matrix([[0.0, 1.0], [0.0, 0.0]]),
            Component::Matrix([[0.0, 0.0], [1.0, 0.0]]),
            Component::Matrix([[0.0, 0.0], [0.0, 1.0]]),
        ],
    }
}

/// Polynomial basis of one kind on the reference triangle. Function
/// `f = s * ncomp + c` is scalar function `s` times component `c`.
#[derive(Debug, Clone)]
pub struct ReferenceBasis {
    pub dimension: usize,
    pub degree: usize,
    pub kind: BasisKind,
    pub scalar: Arc<ScalarBasis>,
    pub components: Vec<Component>,
    pub n_scalar: usize,
}

impl ReferenceBasis {
    pub fn cardinality(&self) -> usize {
        self.n_scalar * self.components.len()
    }

    #[inline]
    pub fn split(&self, func: usize) -> (usize, usize) {
        let nc = self.components.len();
        (func / nc, func % nc)
    }
}

/// L2-orthonormal basis of the requested polynomial space; only N = 2.
pub fn simplex_basis(dimension: usize, degree: usize, kind: BasisKind) -> Result<ReferenceBasis> {
    simplex_basis_shared(dimension, degree, kind, None)
}

/// Same, reusing an existing scalar table of at least the needed degree.
pub fn simplex_basis_shared(
    dimension: usize,
    degree: usize,
    kind: BasisKind,
    table: Option<Arc<ScalarBasis>>,
) -> Result<ReferenceBasis> {
    if dimension != 2 {
        return Err(Error::UnsupportedDimension(dimension));
    }
    let scalar = match table {
        Some(t) if t.degree >= degree => t,
        _ => Arc::new(ScalarBasis::orthonormal(degree)?),
    };
    Ok(ReferenceBasis {
        dimension,
        degree,
        kind,
        scalar,
        components: components(kind),
        n_scalar: super::monomial::dim_p(degree),
    })
}
