//! Reference-simplex polynomial bases, trace bases, bubble spaces, and
//! quadrature. Everything here is built once per (degree, kind) and shared
//! immutably by all elements.

pub mod basis;
pub mod bubble;
pub mod monomial;
pub mod quadrature;
pub mod scalar;
pub mod trace;

pub use basis::{
    components, simplex_basis, simplex_basis_shared, BasisKind, Component, ReferenceBasis,
};
pub use bubble::{bubble_space_grad, BubbleBasis};
pub use monomial::{dim_p, dim_p_signed};
pub use quadrature::{
    edge_rule, exact_monomial_integral, quadrature_rule, EdgeRule, QuadratureRule,
};
pub use scalar::ScalarBasis;
pub use trace::{legendre_mode, TraceBasis};

#[cfg(test)]
mod proptests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn quadrature_exact_for_random_monomials(a in 0usize..10, b in 0usize..10) {
            let q = a + b;
            let rule = quadrature_rule(q).unwrap();
            let v = rule.integrate(|x, y| x.powi(a as i32) * y.powi(b as i32));
            let exact = exact_monomial_integral(a, b);
            prop_assert!((v - exact).abs() <= 1e-14 * exact.max(1.0));
        }
    }
}
