//! L2-orthonormal scalar polynomial basis on the reference triangle.
//!
//! Built once at the highest degree a run needs; since the Gram-Schmidt
//! sweep processes monomials in graded order, the first dim P_d functions
//! form an orthonormal basis of P_d for every d below the table degree.
//! All lower-degree bases are therefore nested slices of one table.

use super::monomial::{self, dim_p};
use super::quadrature::{quadrature_rule, QuadratureRule};
use crate::Result;
use nalgebra::DMatrix;

/// Orthonormal basis table; column j of `coeffs` holds the monomial
/// coefficients of basis function j.
#[derive(Debug, Clone)]
pub struct ScalarBasis {
    pub degree: usize,
    pub coeffs: DMatrix<f64>,
}

impl ScalarBasis {
    /// Orthonormalize the monomials under quadrature of exactness 2d + 2
    /// with a modified Gram-Schmidt sweep plus one reorthogonalization pass.
    pub fn orthonormal(degree: usize) -> Result<Self> {
        let rule = quadrature_rule(2 * degree + 2)?;
        let n = dim_p(degree);
        let nq = rule.len();

        // Weighted sample matrix: column k holds sqrt(w_q) m_k(x_q).
        let mut v = DMatrix::<f64>::zeros(nq, n);
        for q in 0..nq {
            let [x, y] = rule.xy(q);
            let sw = rule.weights[q].sqrt();
            let vals = monomial::eval_all(degree, x, y);
            for k in 0..n {
                v[(q, k)] = sw * vals[k];
            }
        }

        // MGS with reorthogonalization; R is upper triangular.
        let samples = v.clone();
        let mut r = DMatrix::<f64>::zeros(n, n);
        for j in 0..n {
            let mut col = v.column(j).clone_owned();
            for _pass in 0..2 {
                for i in 0..j {
                    let qi = v.column(i);
                    let proj = qi.dot(&col);
                    r[(i, j)] += proj;
                    col.axpy(-proj, &qi, 1.0);
                }
            }
            let norm = col.norm();
            r[(j, j)] = norm;
            col /= norm;
            v.set_column(j, &col);
        }

        // coeffs = R^{-1}: basis_j = sum_k coeffs[k,j] m_k.
        let mut coeffs = DMatrix::<f64>::identity(n, n);
        for j in 0..n {
            for i in (0..n).rev() {
                let mut s = coeffs[(i, j)];
                for k in i + 1..n {
                    s -= r[(i, k)] * coeffs[(k, j)];
                }
                coeffs[(i, j)] = s / r[(i, i)];
            }
        }

        // Roundoff in R^{-1} is amplified by the monomial Gram's conditioning
        // at high degree; one Cholesky polish on the near-identity Gram
        // restores orthonormality to machine precision.
        let w = &samples * &coeffs;
        let gram = w.transpose() * &w;
        let chol = gram
            .cholesky()
            .expect("near-identity Gram must be positive definite");
        let l_inv_t = chol
            .l()
            .transpose()
            .try_inverse()
            .expect("triangular factor is invertible");
        let coeffs = coeffs * l_inv_t;
        Ok(ScalarBasis { degree, coeffs })
    }

    /// Number of functions in the full table.
    pub fn len(&self) -> usize {
        self.coeffs.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Values of the first `n` basis functions at (x, y).
    pub fn eval(&self, n: usize, x: f64, y: f64) -> Vec<f64> {
        let mono = monomial::eval_all(self.degree, x, y);
        (0..n)
            .map(|j| {
                self.coeffs
                    .column(j)
                    .iter()
                    .zip(&mono)
                    .map(|(c, m)| c * m)
                    .sum()
            })
            .collect()
    }

    /// Values and gradients of the first `n` basis functions at (x, y).
    pub fn eval_grad(&self, n: usize, x: f64, y: f64) -> (Vec<f64>, Vec<[f64; 2]>) {
        let (mono, grad) = monomial::eval_all_grad(self.degree, x, y);
        let mut vals = Vec::with_capacity(n);
        let mut grads = Vec::with_capacity(n);
        for j in 0..n {
            let col = self.coeffs.column(j);
            let mut v = 0.0;
            let mut g = [0.0; 2];
            for (k, c) in col.iter().enumerate() {
                if *c != 0.0 {
                    v += c * mono[k];
                    g[0] += c * grad[k][0];
                    g[1] += c * grad[k][1];
                }
            }
            vals.push(v);
            grads.push(g);
        }
        (vals, grads)
    }

    /// Tabulate values at the nodes of a rule: (n_points x n) matrix.
    pub fn tabulate(&self, n: usize, rule: &QuadratureRule) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(rule.len(), n);
        for q in 0..rule.len() {
            let [x, y] = rule.xy(q);
            let vals = self.eval(n, x, y);
            for j in 0..n {
                out[(q, j)] = vals[j];
            }
        }
        out
    }

    /// Tabulate values and both gradient components at the rule nodes.
    pub fn tabulate_grad(&self, n: usize, rule: &QuadratureRule) -> [DMatrix<f64>; 3] {
        let mut vals = DMatrix::zeros(rule.len(), n);
        let mut gx = DMatrix::zeros(rule.len(), n);
        let mut gy = DMatrix::zeros(rule.len(), n);
        for q in 0..rule.len() {
            let [x, y] = rule.xy(q);
            let (v, g) = self.eval_grad(n, x, y);
            for j in 0..n {
                vals[(q, j)] = v[j];
                gx[(q, j)] = g[j][0];
                gy[(q, j)] = g[j][1];
            }
        }
        [vals, gx, gy]
    }
}
