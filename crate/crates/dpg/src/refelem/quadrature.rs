//! Quadrature on the reference triangle and the reference edge.
//!
//! Triangle rules are conical products of a Gauss-Jacobi rule (weight 1-x,
//! absorbing the Duffy collapse Jacobian) and a Gauss-Legendre rule, so a
//! rule of any requested exactness degree is generated on demand. Nodes and
//! weights come from the Golub-Welsch eigenvalue formulation.

use crate::{Error, Result};
use nalgebra::DMatrix;

/// Hard cap on the exactness degree; conical rules need (q/2+1)^2 points.
pub const MAX_EXACTNESS: usize = 60;

/// Quadrature rule on the reference triangle (0,0)-(1,0)-(0,1).
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    /// Barycentric coordinates (l0, l1, l2) of each node, l0 = 1 - x - y.
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    /// All monomials of total degree <= exactness integrate exactly.
    pub exactness: usize,
}

impl QuadratureRule {
    /// Cartesian coordinates (x, y) of node `i`.
    #[inline]
    pub fn xy(&self, i: usize) -> [f64; 2] {
        [self.points[i][1], self.points[i][2]]
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Integrate a function given in cartesian coordinates over the
    /// reference triangle.
    pub fn integrate(&self, f: impl Fn(f64, f64) -> f64) -> f64 {
        self.weights
            .iter()
            .enumerate()
            .map(|(i, w)| {
                let [x, y] = self.xy(i);
                w * f(x, y)
            })
            .sum()
    }
}

/// Gauss-Legendre rule mapped to [0, 1], used for edge integrals.
#[derive(Debug, Clone)]
pub struct EdgeRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
    pub exactness: usize,
}

impl EdgeRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| w * f(t))
            .sum()
    }
}

/// Rule exact for all monomials x^a y^b with a + b <= q on the triangle.
pub fn quadrature_rule(q: usize) -> Result<QuadratureRule> {
    if q > MAX_EXACTNESS {
        return Err(Error::QuadratureDegree(q, MAX_EXACTNESS));
    }
    let m = q / 2 + 1;
    // Radial direction: Gauss-Jacobi with weight (1-t) on [-1,1].
    let (tj, wj) = golub_welsch(m, jacobi_10_recurrence(m), 2.0);
    // Collapsed direction: Gauss-Legendre on [-1,1].
    let (tl, wl) = golub_welsch(m, legendre_recurrence(m), 2.0);

    let mut points = Vec::with_capacity(m * m);
    let mut weights = Vec::with_capacity(m * m);
    for i in 0..m {
        // int_0^1 (1-xi) g(xi) dxi = 1/4 sum wj g((1+tj)/2)
        let xi = 0.5 * (1.0 + tj[i]);
        for j in 0..m {
            let eta = 0.5 * (1.0 + tl[j]);
            let x = xi;
            let y = eta * (1.0 - xi);
            points.push([1.0 - x - y, x, y]);
            weights.push(0.125 * wj[i] * wl[j]);
        }
    }
    Ok(QuadratureRule {
        points,
        weights,
        exactness: q,
    })
}

/// Rule exact for polynomials of degree <= q on [0, 1].
pub fn edge_rule(q: usize) -> Result<EdgeRule> {
    if q > 2 * MAX_EXACTNESS {
        return Err(Error::QuadratureDegree(q, 2 * MAX_EXACTNESS));
    }
    let m = q / 2 + 1;
    let (t, w) = golub_welsch(m, legendre_recurrence(m), 2.0);
    Ok(EdgeRule {
        points: t.iter().map(|&ti| 0.5 * (1.0 + ti)).collect(),
        weights: w.iter().map(|&wi| 0.5 * wi).collect(),
        exactness: q,
    })
}

/// Exact value of the integral of x^a y^b over the reference triangle,
/// namely a! b! / (a + b + 2)!.
pub fn exact_monomial_integral(a: usize, b: usize) -> f64 {
    // a! b! / (a+b+2)! = 1 / (C(a+b, a) * (a+b+1) * (a+b+2))
    let mut binom: u128 = 1;
    for k in 1..=a.min(b) {
        binom = binom * (a + b - k + 1) as u128 / k as u128;
    }
    let denom = binom * (a + b + 1) as u128 * (a + b + 2) as u128;
    1.0 / denom as f64
}

/// Three-term recurrence (diagonal a_k, off-diagonal b_k for k >= 1) of the
/// monic orthogonal polynomials for the Legendre weight on [-1, 1].
fn legendre_recurrence(m: usize) -> (Vec<f64>, Vec<f64>) {
    let a = vec![0.0; m];
    let b = (1..m)
        .map(|k| {
            let k = k as f64;
            k * k / (4.0 * k * k - 1.0)
        })
        .collect();
    (a, b)
}

/// Recurrence for the Jacobi weight (1 - x) on [-1, 1] (alpha = 1, beta = 0).
fn jacobi_10_recurrence(m: usize) -> (Vec<f64>, Vec<f64>) {
    let a = (0..m)
        .map(|k| {
            let k = k as f64;
            -1.0 / ((2.0 * k + 1.0) * (2.0 * k + 3.0))
        })
        .collect();
    let b = (1..m)
        .map(|k| {
            let k = k as f64;
            k * (k + 1.0) / ((2.0 * k + 1.0) * (2.0 * k + 1.0))
        })
        .collect();
    (a, b)
}

/// Nodes and weights from the symmetric tridiagonal Jacobi matrix; `mu0` is
/// the integral of the weight function.
fn golub_welsch(m: usize, (diag, off): (Vec<f64>, Vec<f64>), mu0: f64) -> (Vec<f64>, Vec<f64>) {
    let mut jm = DMatrix::<f64>::zeros(m, m);
    for k in 0..m {
        jm[(k, k)] = diag[k];
    }
    for k in 1..m {
        let s = off[k - 1].sqrt();
        jm[(k, k - 1)] = s;
        jm[(k - 1, k)] = s;
    }
    let eig = jm.symmetric_eigen();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap());
    let nodes: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let weights: Vec<f64> = order
        .iter()
        .map(|&i| {
            let v0 = eig.eigenvectors[(0, i)];
            mu0 * v0 * v0
        })
        .collect();
    (nodes, weights)
}
