//! The vertex-vanishing bubble space B_r^grad on the reference triangle:
//! polynomials of degree r = p + 2 vanishing at all three vertices.

use super::monomial::dim_p;
use super::scalar::ScalarBasis;
use crate::{Error, Result};
use nalgebra::DMatrix;
use std::sync::Arc;

/// Orthonormal basis of B_{p+2}^grad, stored as coefficient columns over
/// the orthonormal scalar basis of P_{p+2}.
#[derive(Debug, Clone)]
pub struct BubbleBasis {
    pub p: usize,
    pub r: usize,
    pub scalar: Arc<ScalarBasis>,
    /// (dim P_r) x cardinality coefficient matrix.
    pub coeffs: DMatrix<f64>,
    /// Smallest nonzero singular value of the vertex-evaluation map,
    /// recorded as the constraint-independence margin.
    pub constraint_margin: f64,
}

impl BubbleBasis {
    pub fn cardinality(&self) -> usize {
        self.coeffs.ncols()
    }

    /// Values of all bubble functions at (x, y).
    pub fn eval(&self, x: f64, y: f64) -> Vec<f64> {
        let base = self.scalar.eval(dim_p(self.r), x, y);
        (0..self.cardinality())
            .map(|j| {
                self.coeffs
                    .column(j)
                    .iter()
                    .zip(&base)
                    .map(|(c, b)| c * b)
                    .sum()
            })
            .collect()
    }
}

/// Basis of {q in P_{p+2} : q vanishes at the three vertices}, computed as
/// the nullspace of the vertex-evaluation map on the orthonormal P_{p+2}
/// basis.
pub fn bubble_space_grad(p: usize, dimension: usize) -> Result<BubbleBasis> {
    bubble_space_grad_shared(p, dimension, None)
}

pub fn bubble_space_grad_shared(
    p: usize,
    dimension: usize,
    table: Option<Arc<ScalarBasis>>,
) -> Result<BubbleBasis> {
    if dimension != 2 {
        return Err(Error::UnsupportedDimension(dimension));
    }
    let r = p + 2;
    let n = dim_p(r);
    let scalar = match table {
        Some(t) if t.degree >= r => t,
        _ => Arc::new(ScalarBasis::orthonormal(r)?),
    };

    // Vertex evaluation matrix E (3 x n).
    let verts = super::trace::VERTS;
    let mut e = DMatrix::<f64>::zeros(3, n);
    for (vi, v) in verts.iter().enumerate() {
        let vals = scalar.eval(n, v[0], v[1]);
        for k in 0..n {
            e[(vi, k)] = vals[k];
        }
    }

    // Constraint independence and rank from the singular values of E.
    let svd = e.clone().svd(false, false);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if smin <= 1e-10 * smax {
        return Err(Error::Singular {
            context: "vertex-vanishing constraints".into(),
            sigma_min: smin,
        });
    }
    let rank = svd
        .singular_values
        .iter()
        .filter(|&&s| s > 1e-10 * smax)
        .count();
    let null_dim = n - rank;

    // Nullspace of E: the null_dim smallest eigenpairs of E^T E.
    let ete = e.transpose() * &e;
    let eig = ete.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap());
    let mut coeffs = DMatrix::<f64>::zeros(n, null_dim);
    for (c, &i) in order[..null_dim].iter().enumerate() {
        coeffs.set_column(c, &eig.eigenvectors.column(i));
    }
    Ok(BubbleBasis {
        p,
        r,
        scalar,
        coeffs,
        constraint_margin: smin,
    })
}
