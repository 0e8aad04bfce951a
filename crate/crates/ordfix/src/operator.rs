//! The self-map abstraction shared by the condition checkers and the solver.

use crate::error::Error;
use crate::space::GridFunction;

/// A self-map on grid functions of a fixed resolution.
///
/// Implementations must be pure: equal inputs give equal outputs.
pub trait GridOperator {
    /// Apply the operator to `u`, which must live on the operator's grid.
    fn apply(&self, u: &GridFunction) -> Result<GridFunction, Error>;

    /// Grid resolution the operator acts on.
    fn grid_n(&self) -> usize;

    /// Extra slack the operator's own discretization contributes to the
    /// fixed-point residual threshold.
    fn residual_allowance(&self) -> f64 {
        0.0
    }
}

impl<T: GridOperator + ?Sized> GridOperator for &T {
    fn apply(&self, u: &GridFunction) -> Result<GridFunction, Error> {
        (**self).apply(u)
    }

    fn grid_n(&self) -> usize {
        (**self).grid_n()
    }

    fn residual_allowance(&self) -> f64 {
        (**self).residual_allowance()
    }
}
