//! The vertex-bubble interpolation operator onto B_{p+2}^grad and its
//! mean-shifted variant mapping onto constants + bubbles.
//!
//! The defining square system matches interior moments against P_{p-1} and
//! boundary moments against P_p on each edge; unique solvability makes the
//! operator reproduce its target space exactly.

use super::SquareSystem;
use crate::refelem::bubble::{bubble_space_grad_shared, BubbleBasis};
use crate::refelem::quadrature::{edge_rule, quadrature_rule, EdgeRule, QuadratureRule};
use crate::refelem::scalar::ScalarBasis;
use crate::refelem::trace::{edge_lengths, edge_point};
use crate::refelem::{dim_p, dim_p_signed, legendre_mode};
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector, LU};
use std::sync::Arc;

/// Scalar polynomial probe: coefficients over the orthonormal basis.
#[derive(Debug, Clone)]
pub struct ScalarProbe {
    pub degree: usize,
    pub scalar: Arc<ScalarBasis>,
    pub coeffs: DVector<f64>,
}

impl ScalarProbe {
    /// L2 projection of `f` onto P_degree; exact when f is a polynomial of
    /// that degree.
    pub fn from_fn(
        scalar: Arc<ScalarBasis>,
        degree: usize,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<ScalarProbe> {
        assert!(scalar.degree >= degree);
        let n = dim_p(degree);
        let rule = quadrature_rule(2 * scalar.degree + 2)?;
        let mut coeffs = DVector::zeros(n);
        for qi in 0..rule.len() {
            let [x, y] = rule.xy(qi);
            let w = rule.weights[qi];
            let fv = f(x, y);
            let vals = scalar.eval(n, x, y);
            for j in 0..n {
                coeffs[j] += w * fv * vals[j];
            }
        }
        Ok(ScalarProbe {
            degree,
            scalar,
            coeffs,
        })
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let vals = self.scalar.eval(self.coeffs.len(), x, y);
        vals.iter()
            .zip(self.coeffs.iter())
            .map(|(v, c)| v * c)
            .sum()
    }

    pub fn eval_grad(&self, x: f64, y: f64) -> [f64; 2] {
        let (_, grads) = self.scalar.eval_grad(self.coeffs.len(), x, y);
        let mut g = [0.0; 2];
        for (gr, c) in grads.iter().zip(self.coeffs.iter()) {
            g[0] += gr[0] * c;
            g[1] += gr[1] * c;
        }
        g
    }
}

/// Output of the bubble interpolants: bubble coefficients plus an optional
/// constant part (for the mean-shifted variant).
#[derive(Debug, Clone)]
pub struct GradImage {
    pub bubbles: Arc<BubbleBasis>,
    pub coeffs: DVector<f64>,
    pub constant: f64,
}

impl GradImage {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let vals = self.bubbles.eval(x, y);
        self.constant
            + vals
                .iter()
                .zip(self.coeffs.iter())
                .map(|(v, c)| v * c)
                .sum::<f64>()
    }

    pub fn eval_grad(&self, x: f64, y: f64) -> [f64; 2] {
        // Bubble functions are combinations of the scalar table.
        let n = dim_p(self.bubbles.r);
        let (_, grads) = self.bubbles.scalar.eval_grad(n, x, y);
        let mut g = [0.0; 2];
        for (j, c) in self.coeffs.iter().enumerate() {
            if *c == 0.0 {
                continue;
            }
            for k in 0..n {
                let w = self.bubbles.coeffs[(k, j)];
                if w != 0.0 {
                    g[0] += c * w * grads[k][0];
                    g[1] += c * w * grads[k][1];
                }
            }
        }
        g
    }
}

/// Interpolation onto B_{p+2}^grad via interior and edge moments.
pub struct Pi0 {
    pub p: usize,
    pub r: usize,
    pub bubbles: Arc<BubbleBasis>,
    pub scalar: Arc<ScalarBasis>,
    pub diagnostics: SquareSystem,
    lu: LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    vol: QuadratureRule,
    edge: EdgeRule,
    n_interior: usize,
}

impl Pi0 {
    /// `probe_degree` caps the polynomial degree of admissible probes.
    pub fn build(p: usize, probe_degree: usize) -> Result<Pi0> {
        let r = p + 2;
        let d_all = probe_degree.max(r);
        let scalar = Arc::new(ScalarBasis::orthonormal(d_all)?);
        let bubbles = Arc::new(bubble_space_grad_shared(p, 2, Some(scalar.clone()))?);
        let nb = bubbles.cardinality();
        let n_interior = dim_p_signed(p as isize - 1);
        let n_rows = n_interior + 3 * (p + 1);
        if n_rows != nb {
            return Err(Error::Singular {
                context: format!("bubble moment system is not square ({n_rows} x {nb})"),
                sigma_min: 0.0,
            });
        }
        let vol = quadrature_rule(2 * d_all + 2)?;
        let edge = edge_rule(2 * d_all + 2)?;

        let mut m = DMatrix::<f64>::zeros(nb, nb);
        // Interior moments against the orthonormal P_{p-1} prefix.
        for qi in 0..vol.len() {
            let [x, y] = vol.xy(qi);
            let w = vol.weights[qi];
            let bv = bubbles.eval(x, y);
            let qv = scalar.eval(n_interior, x, y);
            for i in 0..n_interior {
                for j in 0..nb {
                    m[(i, j)] += w * qv[i] * bv[j];
                }
            }
        }
        // Edge moments against Legendre modes of degree <= p.
        let lens = edge_lengths();
        for e in 0..3 {
            for (qi, &t) in edge.points.iter().enumerate() {
                let w = edge.weights[qi] * lens[e];
                let xh = edge_point(e, t);
                let bv = bubbles.eval(xh[0], xh[1]);
                for k in 0..=p {
                    let row = n_interior + e * (p + 1) + k;
                    let mu = legendre_mode(k, t);
                    for j in 0..nb {
                        m[(row, j)] += w * mu * bv[j];
                    }
                }
            }
        }

        let diagnostics = super::square_diagnostics(&m);
        if diagnostics.sigma_min <= 1e-12 * diagnostics.sigma_max {
            return Err(Error::Singular {
                context: "bubble interpolation square system".into(),
                sigma_min: diagnostics.sigma_min,
            });
        }
        let lu = m.lu();
        Ok(Pi0 {
            p,
            r,
            bubbles,
            scalar,
            diagnostics,
            lu,
            vol,
            edge,
            n_interior,
        })
    }

    /// Moments of an arbitrary function in the row order of the system.
    fn moments(&self, f: &dyn Fn(f64, f64) -> f64) -> DVector<f64> {
        let nb = self.bubbles.cardinality();
        let mut rhs = DVector::<f64>::zeros(nb);
        for qi in 0..self.vol.len() {
            let [x, y] = self.vol.xy(qi);
            let w = self.vol.weights[qi];
            let fv = f(x, y);
            let qv = self.scalar.eval(self.n_interior, x, y);
            for i in 0..self.n_interior {
                rhs[i] += w * qv[i] * fv;
            }
        }
        let lens = edge_lengths();
        for e in 0..3 {
            for (qi, &t) in self.edge.points.iter().enumerate() {
                let w = self.edge.weights[qi] * lens[e];
                let xh = edge_point(e, t);
                let fv = f(xh[0], xh[1]);
                for k in 0..=self.p {
                    rhs[self.n_interior + e * (self.p + 1) + k] += w * legendre_mode(k, t) * fv;
                }
            }
        }
        rhs
    }

    pub fn apply(&self, f: &dyn Fn(f64, f64) -> f64) -> GradImage {
        let rhs = self.moments(f);
        let coeffs = self
            .lu
            .solve(&rhs)
            .expect("square system verified nonsingular");
        GradImage {
            bubbles: self.bubbles.clone(),
            coeffs,
            constant: 0.0,
        }
    }
}

/// Mean-shifted variant: v maps to Pi0(v - vbar) + vbar with vbar the
/// element mean; reproduces constants.
pub struct PiGrad {
    pub pi0: Pi0,
}

impl PiGrad {
    pub fn build(p: usize, probe_degree: usize) -> Result<PiGrad> {
        Ok(PiGrad {
            pi0: Pi0::build(p, probe_degree)?,
        })
    }

    pub fn apply(&self, f: &dyn Fn(f64, f64) -> f64) -> GradImage {
        // Reference-triangle mean: |K| = 1/2.
        let mean = 2.0 * self.pi0.vol.integrate(f);
        let mut img = self.pi0.apply(&|x, y| f(x, y) - mean);
        img.constant = mean;
        img
    }
}
