//! Bases on the boundary of the reference triangle: the per-facet
//! discontinuous flux space P_p(dK) and the continuous trace space
//! tilde-P_{p+1}(dK).
//!
//! Every edge function lives in an edge parameter t in [0,1]. Flux modes
//! are normalized shifted Legendre polynomials; trace modes are the three
//! linear vertex hats plus per-edge interior bubbles t(1-t)L_k(t),
//! orthonormalized over [0,1]. Both families satisfy f_k(1-t) = (-1)^k f_k(t),
//! so reversing an edge's parameterization is a diagonal sign change.

use super::quadrature::edge_rule;
use crate::Result;
use nalgebra::DMatrix;

/// Reference triangle vertices.
pub const VERTS: [[f64; 2]; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
/// Edge e is opposite vertex e; endpoints listed in parameterization order.
pub const EDGES: [[usize; 2]; 3] = [[1, 2], [2, 0], [0, 1]];

/// Lengths of the reference edges.
pub fn edge_lengths() -> [f64; 3] {
    [std::f64::consts::SQRT_2, 1.0, 1.0]
}

/// Point on reference edge `e` at parameter `t`.
pub fn edge_point(e: usize, t: f64) -> [f64; 2] {
    let a = VERTS[EDGES[e][0]];
    let b = VERTS[EDGES[e][1]];
    [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
}

/// Outward unit normal of the reference triangle along edge `e`.
pub fn edge_outward_normal(e: usize) -> [f64; 2] {
    let a = VERTS[EDGES[e][0]];
    let b = VERTS[EDGES[e][1]];
    let d = [b[0] - a[0], b[1] - a[1]];
    let len = (d[0] * d[0] + d[1] * d[1]).sqrt();
    // Edges as listed run counterclockwise, so (dy, -dx) points outward.
    [d[1] / len, -d[0] / len]
}

/// Normalized shifted Legendre polynomial: sqrt(2k+1) P_k(2t - 1),
/// orthonormal in L2(0,1).
pub fn legendre_mode(k: usize, t: f64) -> f64 {
    let x = 2.0 * t - 1.0;
    let mut p0 = 1.0;
    let mut p1 = x;
    let p = match k {
        0 => 1.0,
        1 => x,
        _ => {
            for n in 1..k {
                let n_f = n as f64;
                let p2 = ((2.0 * n_f + 1.0) * x * p1 - n_f * p0) / (n_f + 1.0);
                p0 = p1;
                p1 = p2;
            }
            p1
        }
    };
    ((2 * k + 1) as f64).sqrt() * p
}

/// Trace and flux bases on the reference boundary for trial degree p.
#[derive(Debug, Clone)]
pub struct TraceBasis {
    pub p: usize,
    /// bubble_coeffs[(j, k)]: bubble k = sum_j c_jk t(1-t)L_j(t).
    bubble_coeffs: DMatrix<f64>,
}

impl TraceBasis {
    pub fn build(p: usize) -> Result<Self> {
        Ok(TraceBasis {
            p,
            bubble_coeffs: orthonormal_bubbles(p)?,
        })
    }

    /// dim P_p(dK) = 3(p+1).
    pub fn flux_dim(&self) -> usize {
        3 * (self.p + 1)
    }

    /// dim tilde-P_{p+1}(dK) = 3 + 3p.
    pub fn tilde_dim(&self) -> usize {
        3 + 3 * self.p
    }

    /// Edge-interior bubble k (k < p), vanishing at t = 0 and t = 1.
    pub fn bubble(&self, k: usize, t: f64) -> f64 {
        let mut v = 0.0;
        for j in 0..=k {
            let c = self.bubble_coeffs[(j, k)];
            if c != 0.0 {
                v += c * t * (1.0 - t) * legendre_mode(j, t);
            }
        }
        v
    }

    /// Continuous trace mode evaluated on edge `e` at parameter `t`.
    /// Modes 0..3 are vertex hats; mode 3 + e*p + k is bubble k on edge e.
    pub fn eval_tilde(&self, mode: usize, e: usize, t: f64) -> f64 {
        if mode < 3 {
            let v = mode;
            if EDGES[e][0] == v {
                1.0 - t
            } else if EDGES[e][1] == v {
                t
            } else {
                0.0
            }
        } else {
            let m = mode - 3;
            let (me, k) = (m / self.p.max(1), m % self.p.max(1));
            if self.p == 0 || me != e {
                0.0
            } else {
                self.bubble(k, t)
            }
        }
    }

    /// Flux mode evaluated in the edge parameter (modes are per-edge).
    pub fn flux_mode(&self, k: usize, t: f64) -> f64 {
        legendre_mode(k, t)
    }
}

/// Orthonormalize {t(1-t) L_j(t)}_{j<p} in L2(0,1); returns the
/// upper-triangular coefficient matrix (p x p).
fn orthonormal_bubbles(p: usize) -> Result<DMatrix<f64>> {
    if p == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let rule = edge_rule(2 * (p + 1) + 2)?;
    let nq = rule.len();
    let mut v = DMatrix::<f64>::zeros(nq, p);
    for (q, (&t, &w)) in rule.points.iter().zip(&rule.weights).enumerate() {
        let sw = w.sqrt();
        for j in 0..p {
            v[(q, j)] = sw * t * (1.0 - t) * legendre_mode(j, t);
        }
    }
    let mut r = DMatrix::<f64>::zeros(p, p);
    for j in 0..p {
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
    let mut coeffs = DMatrix::<f64>::identity(p, p);
    for j in 0..p {
        for i in (0..p).rev() {
            let mut s = coeffs[(i, j)];
            for k in i + 1..p {
                s -= r[(i, k)] * coeffs[(k, j)];
            }
            coeffs[(i, j)] = s / r[(i, i)];
        }
    }
    Ok(coeffs)
}
