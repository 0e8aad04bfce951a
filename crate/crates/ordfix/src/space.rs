//! Grid functions on [0, 1], the pointwise cone order, and the norms attached
//! to that order.
//!
//! A [`GridFunction`] samples a function at the uniform nodes `t_i = i/n`.
//! Order, lattice and norm operations are defined on the node values only;
//! behaviour between nodes is not modelled.

use crate::error::Error;

/// Default slack for pointwise comparisons of node values.
pub const DEFAULT_ORDER_TOL: f64 = 1e-12;

/// A function on [0, 1] sampled at the uniform nodes `t_i = i/n`.
///
/// Holds exactly `n + 1` finite node values. Two grid functions interoperate
/// only when their resolutions match; every binary operation checks this.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    values: Vec<f64>,
    n: usize,
}

impl GridFunction {
    /// Wraps `values` as node values; the resolution is `values.len() - 1`.
    pub fn new(values: Vec<f64>) -> Result<Self, Error> {
        if values.len() < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 node values, got {}",
                values.len()
            )));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        let n = values.len() - 1;
        Ok(Self { values, n })
    }

    /// Samples `f` at the nodes of a resolution-`n` grid.
    pub fn from_fn(n: usize, f: impl Fn(f64) -> f64) -> Result<Self, Error> {
        let values = (0..=n).map(|i| f(i as f64 / n as f64)).collect();
        Self::new(values)
    }

    /// The constant function `c` on a resolution-`n` grid.
    pub fn constant(n: usize, c: f64) -> Result<Self, Error> {
        Self::new(vec![c; n + 1])
    }

    /// Grid resolution (number of intervals).
    pub fn n(&self) -> usize {
        self.n
    }

    /// Node values, in node order.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Position of node `i` in [0, 1].
    pub fn node(&self, i: usize) -> f64 {
        i as f64 / self.n as f64
    }

    fn check_same_grid(&self, other: &Self) -> Result<(), Error> {
        if self.n != other.n {
            return Err(Error::GridMismatch {
                left: self.n,
                right: other.n,
            });
        }
        Ok(())
    }

    /// Pointwise cone order: true iff `self(t_i) <= other(t_i) + order_tol`
    /// at every node.
    pub fn leq(&self, other: &Self, spec: &ConeSpec) -> Result<bool, Error> {
        self.check_same_grid(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .all(|(a, b)| *a <= *b + spec.order_tol))
    }

    /// Sup norm: the largest node magnitude.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// Sup-norm distance to `other`.
    pub fn sup_distance(&self, other: &Self) -> Result<f64, Error> {
        self.check_same_grid(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0, |acc, (a, b)| acc.max((a - b).abs())))
    }

    /// The monotone norm used by all rate and bound formulas.
    ///
    /// Realised as `sup_norm / upper_equiv`, which is monotone for the
    /// pointwise cone and satisfies the sandwich
    /// `lower_equiv * monotone_norm <= sup_norm <= upper_equiv * monotone_norm`.
    /// For the default [`ConeSpec`] it coincides with the sup norm.
    pub fn monotone_norm(&self, spec: &ConeSpec) -> f64 {
        self.sup_norm() / spec.upper_equiv
    }

    /// Monotone-norm distance to `other`.
    pub fn monotone_distance(&self, other: &Self, spec: &ConeSpec) -> Result<f64, Error> {
        Ok(self.sup_distance(other)? / spec.upper_equiv)
    }
}

/// Greatest lower bound and least upper bound of two grid functions:
/// the pointwise min and max of the node values.
pub fn inf_sup(u: &GridFunction, v: &GridFunction) -> Result<(GridFunction, GridFunction), Error> {
    u.check_same_grid(v)?;
    let lo: Vec<f64> = u
        .values
        .iter()
        .zip(&v.values)
        .map(|(a, b)| a.min(*b))
        .collect();
    let hi: Vec<f64> = u
        .values
        .iter()
        .zip(&v.values)
        .map(|(a, b)| a.max(*b))
        .collect();
    Ok((GridFunction::new(lo)?, GridFunction::new(hi)?))
}

/// The ordered-space configuration: the cone's normal constant, the
/// norm-equivalence constants, and the pointwise comparison slack.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeSpec {
    /// Normal constant N >= 1 of the cone.
    pub normal_constant: f64,
    /// Upper norm-equivalence constant M.
    pub upper_equiv: f64,
    /// Lower norm-equivalence constant m, with M >= m > 0. Unused by the
    /// rate formula; kept because the sandwich invariant constrains it.
    pub lower_equiv: f64,
    /// Pointwise comparison slack.
    pub order_tol: f64,
}

impl ConeSpec {
    pub fn new(
        normal_constant: f64,
        upper_equiv: f64,
        lower_equiv: f64,
        order_tol: f64,
    ) -> Result<Self, Error> {
        if !normal_constant.is_finite() || normal_constant < 1.0 {
            return Err(Error::InvalidParameter(format!(
                "normal constant must be >= 1, got {normal_constant}"
            )));
        }
        if !upper_equiv.is_finite()
            || !lower_equiv.is_finite()
            || lower_equiv <= 0.0
            || upper_equiv < lower_equiv
        {
            return Err(Error::InvalidParameter(format!(
                "equivalence constants must satisfy M >= m > 0, got M = {upper_equiv}, m = {lower_equiv}"
            )));
        }
        if !order_tol.is_finite() || order_tol < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "order tolerance must be nonnegative, got {order_tol}"
            )));
        }
        Ok(Self {
            normal_constant,
            upper_equiv,
            lower_equiv,
            order_tol,
        })
    }
}

impl Default for ConeSpec {
    /// The sup-norm pointwise cone: N = 1, M = m = 1. The sup norm is itself
    /// monotone for this cone, so the monotone norm equals the sup norm.
    fn default() -> Self {
        Self {
            normal_constant: 1.0,
            upper_equiv: 1.0,
            lower_equiv: 1.0,
            order_tol: DEFAULT_ORDER_TOL,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn spec() -> ConeSpec {
        ConeSpec::default()
    }

    #[test]
    fn constant_order() {
        let u = GridFunction::constant(10, 0.0).unwrap();
        let v = GridFunction::constant(10, 1.0).unwrap();
        assert!(u.leq(&v, &spec()).unwrap());
        assert!(!v.leq(&u, &spec()).unwrap());
    }

    #[test]
    fn square_below_identity_on_unit_interval() {
        let u = GridFunction::from_fn(100, |t| t).unwrap();
        let v = GridFunction::from_fn(100, |t| t * t).unwrap();
        assert!(!u.leq(&v, &spec()).unwrap());
        assert!(v.leq(&u, &spec()).unwrap());
    }

    #[test]
    fn sine_is_incomparable_with_zero() {
        let u = GridFunction::from_fn(100, |t| (2.0 * std::f64::consts::PI * t).sin()).unwrap();
        let v = GridFunction::constant(100, 0.0).unwrap();
        // sin(2*pi*t) changes sign on the grid, so neither direction holds
        let signs_change =
            u.values().iter().any(|x| *x > 1e-6) && u.values().iter().any(|x| *x < -1e-6);
        assert!(signs_change);
        assert!(!u.leq(&v, &spec()).unwrap());
        assert!(!v.leq(&u, &spec()).unwrap());
    }

    #[test]
    fn leq_rejects_mismatched_grids() {
        let u = GridFunction::constant(10, 0.0).unwrap();
        let v = GridFunction::constant(11, 0.0).unwrap();
        assert!(matches!(
            u.leq(&v, &spec()),
            Err(Error::GridMismatch {
                left: 10,
                right: 11
            })
        ));
    }

    #[test]
    fn inf_sup_is_idempotent() {
        let u = GridFunction::from_fn(20, |t| t * (1.0 - t)).unwrap();
        let (lo, hi) = inf_sup(&u, &u).unwrap();
        assert_eq!(lo, u);
        assert_eq!(hi, u);
    }

    #[test]
    fn inf_sup_of_constants() {
        let u = GridFunction::constant(10, 0.0).unwrap();
        let v = GridFunction::constant(10, 1.0).unwrap();
        let (lo, hi) = inf_sup(&u, &v).unwrap();
        assert_eq!(lo, u);
        assert_eq!(hi, v);
    }

    #[test]
    fn inf_sup_of_crossing_lines() {
        let n = 100;
        let u = GridFunction::from_fn(n, |t| t).unwrap();
        let v = GridFunction::from_fn(n, |t| 1.0 - t).unwrap();
        let (lo, hi) = inf_sup(&u, &v).unwrap();
        for i in 0..=n {
            let t = i as f64 / n as f64;
            assert_eq!(lo.values()[i], t.min(1.0 - t));
            assert_eq!(hi.values()[i], t.max(1.0 - t));
        }
        // the infimum attains its maximum 0.5 only at the midpoint node
        let attained: Vec<usize> = (0..=n)
            .filter(|&i| (lo.values()[i] - 0.5).abs() < 1e-15)
            .collect();
        assert_eq!(attained, vec![n / 2]);
    }

    #[test]
    fn sup_norm_examples() {
        let zero = GridFunction::constant(50, 0.0).unwrap();
        assert_eq!(zero.sup_norm(), 0.0);

        let ident = GridFunction::from_fn(50, |t| t).unwrap();
        assert_eq!(ident.sup_norm(), 1.0);

        let wave = GridFunction::from_fn(100, |t| (2.0 * std::f64::consts::PI * t).sin()).unwrap();
        // oracle: scan the node values directly
        let expected = wave.values().iter().fold(0.0f64, |a, v| a.max(v.abs()));
        assert_eq!(wave.sup_norm(), expected);
        assert_abs_diff_eq!(wave.sup_norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn monotone_norm_default_spec() {
        let ident = GridFunction::from_fn(50, |t| t).unwrap();
        assert_eq!(ident.monotone_norm(&spec()), 1.0);
        let zero = GridFunction::constant(50, 0.0).unwrap();
        assert_eq!(zero.monotone_norm(&spec()), 0.0);
    }

    #[test]
    fn monotone_norm_sandwich_nontrivial_spec() {
        let wide = ConeSpec::new(1.0, 2.0, 1.0, 1e-12).unwrap();
        let one = GridFunction::constant(10, 1.0).unwrap();
        let norm1 = one.monotone_norm(&wide);
        assert_abs_diff_eq!(norm1, 0.5, epsilon = 0.0);
        assert!(wide.lower_equiv * norm1 <= one.sup_norm() + 1e-15);
        assert!(one.sup_norm() <= wide.upper_equiv * norm1 + 1e-15);
    }

    #[test]
    fn rejects_non_finite_and_short_inputs() {
        assert!(matches!(
            GridFunction::new(vec![0.0, f64::NAN, 1.0]),
            Err(Error::NonFinite { index: 1 })
        ));
        assert!(GridFunction::new(vec![1.0]).is_err());
    }

    #[test]
    fn cone_spec_validation() {
        assert!(ConeSpec::new(0.5, 1.0, 1.0, 0.0).is_err());
        assert!(ConeSpec::new(1.0, 1.0, 2.0, 0.0).is_err());
        assert!(ConeSpec::new(1.0, 1.0, 1.0, -1.0).is_err());
        assert!(ConeSpec::new(2.0, 3.0, 0.5, 1e-9).is_ok());
    }

    fn grid_values(n: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-100.0f64..100.0, n + 1)
    }

    proptest! {
        #[test]
        fn order_is_reflexive(vals in grid_values(16)) {
            let u = GridFunction::new(vals).unwrap();
            prop_assert!(u.leq(&u, &spec()).unwrap());
        }

        #[test]
        fn antisymmetry_up_to_tol(a in grid_values(8), b in grid_values(8)) {
            let u = GridFunction::new(a).unwrap();
            let v = GridFunction::new(b).unwrap();
            let s = spec();
            if u.leq(&v, &s).unwrap() && v.leq(&u, &s).unwrap() {
                prop_assert!(u.sup_distance(&v).unwrap() <= s.order_tol);
            }
        }

        #[test]
        fn transitivity_on_stacked_functions(
            base in grid_values(8),
            bump1 in proptest::collection::vec(0.0f64..10.0, 9),
            bump2 in proptest::collection::vec(0.0f64..10.0, 9),
        ) {
            let u = GridFunction::new(base.clone()).unwrap();
            let v = GridFunction::new(
                base.iter().zip(&bump1).map(|(x, p)| x + p).collect()
            ).unwrap();
            let w = GridFunction::new(
                v.values().iter().zip(&bump2).map(|(x, p)| x + p).collect()
            ).unwrap();
            let s = spec();
            prop_assert!(u.leq(&v, &s).unwrap());
            prop_assert!(v.leq(&w, &s).unwrap());
            prop_assert!(u.leq(&w, &s).unwrap());
        }

        #[test]
        fn lattice_bounds_and_absorption(a in grid_values(8), b in grid_values(8)) {
            let u = GridFunction::new(a).unwrap();
            let v = GridFunction::new(b).unwrap();
            let s = spec();
            let (lo, hi) = inf_sup(&u, &v).unwrap();
            prop_assert!(lo.leq(&u, &s).unwrap());
            prop_assert!(lo.leq(&v, &s).unwrap());
            prop_assert!(u.leq(&hi, &s).unwrap());
            prop_assert!(v.leq(&hi, &s).unwrap());
            // absorption: inf(u, sup(u, v)) = u nodewise
            let (absorbed, _) = inf_sup(&u, &hi).unwrap();
            prop_assert_eq!(absorbed, u);
        }

        #[test]
        fn norm_is_monotone_on_the_cone(
            base in proptest::collection::vec(0.0f64..50.0, 9),
            bump in proptest::collection::vec(0.0f64..50.0, 9),
        ) {
            // theta <= u <= v nodewise implies monotone_norm(u) <= monotone_norm(v)
            let u = GridFunction::new(base.clone()).unwrap();
            let v = GridFunction::new(
                base.iter().zip(&bump).map(|(x, p)| x + p).collect()
            ).unwrap();
            let s = spec();
            prop_assert!(u.monotone_norm(&s) <= v.monotone_norm(&s));
        }

        #[test]
        fn norm_equivalence_sandwich(
            vals in grid_values(8),
            m_low in 0.1f64..2.0,
            m_extra in 0.0f64..3.0,
        ) {
            let u = GridFunction::new(vals).unwrap();
            let s = ConeSpec::new(1.0, m_low + m_extra, m_low, 1e-12).unwrap();
            let n1 = u.monotone_norm(&s);
            prop_assert!(s.lower_equiv * n1 <= u.sup_norm() * (1.0 + 1e-12) + 1e-300);
            prop_assert!(u.sup_norm() <= s.upper_equiv * n1 * (1.0 + 1e-12) + 1e-300);
        }
    }
}
