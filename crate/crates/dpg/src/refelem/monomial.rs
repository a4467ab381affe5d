//! Bivariate monomials in the fixed graded-lexicographic ordering.
//!
//! Monomials are taken in coordinates centered at the triangle centroid,
//! (x - 1/3)^i (y - 1/3)^j; centering keeps the orthonormalized coefficient
//! matrices small enough that basis evaluation stays near machine precision
//! through degree 10.

/// Centroid offset applied to evaluation coordinates.
pub const CENTER: f64 = 1.0 / 3.0;

/// Number of monomials of total degree <= d in two variables.
#[inline]
pub fn dim_p(d: usize) -> usize {
    (d + 1) * (d + 2) / 2
}

/// Dimension of P_d when d may be -1 (empty space).
#[inline]
pub fn dim_p_signed(d: isize) -> usize {
    if d < 0 {
        0
    } else {
        dim_p(d as usize)
    }
}

/// Exponent pairs (i, j) for x^i y^j up to total degree d, graded
/// lexicographic: within each total degree g the x-exponent descends.
pub fn exponents(d: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(dim_p(d));
    for g in 0..=d {
        for i in (0..=g).rev() {
            out.push((i, g - i));
        }
    }
    out
}

/// Values of all monomials up to degree d at (x, y), in ordering order.
pub fn eval_all(d: usize, x: f64, y: f64) -> Vec<f64> {
    let (x, y) = (x - CENTER, y - CENTER);
    let mut xp = vec![1.0; d + 1];
    let mut yp = vec![1.0; d + 1];
    for k in 1..=d {
        xp[k] = xp[k - 1] * x;
        yp[k] = yp[k - 1] * y;
    }
    exponents(d).iter().map(|&(i, j)| xp[i] * yp[j]).collect()
}

/// Values and gradients of all monomials up to degree d at (x, y).
pub fn eval_all_grad(d: usize, x: f64, y: f64) -> (Vec<f64>, Vec<[f64; 2]>) {
    let (x, y) = (x - CENTER, y - CENTER);
    let mut xp = vec![1.0; d + 2];
    let mut yp = vec![1.0; d + 2];
    for k in 1..=d + 1 {
        xp[k] = xp[k - 1] * x;
        yp[k] = yp[k - 1] * y;
    }
    let exps = exponents(d);
    let vals = exps.iter().map(|&(i, j)| xp[i] * yp[j]).collect();
    let grads = exps
        .iter()
        .map(|&(i, j)| {
            let gx = if i == 0 {
                0.0
            } else {
                i as f64 * xp[i - 1] * yp[j]
            };
            let gy = if j == 0 {
                0.0
            } else {
                j as f64 * xp[i] * yp[j - 1]
            };
            [gx, gy]
        })
        .collect();
    (vals, grads)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordering_is_graded_lex() {
        let e = exponents(2);
        assert_eq!(e, vec![(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]);
        assert_eq!(e.len(), dim_p(2));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let (x, y) = (0.3, 0.45);
        let h = 1e-6;
        let (_, grads) = eval_all_grad(4, x, y);
        let vx1 = eval_all(4, x + h, y);
        let vx0 = eval_all(4, x - h, y);
        let vy1 = eval_all(4, x, y + h);
        let vy0 = eval_all(4, x, y - h);
        for k in 0..dim_p(4) {
            let fx = (vx1[k] - vx0[k]) / (2.0 * h);
            let fy = (vy1[k] - vy0[k]) / (2.0 * h);
            assert!((grads[k][0] - fx).abs() < 1e-8);
            assert!((grads[k][1] - fy).abs() < 1e-8);
        }
    }
}
