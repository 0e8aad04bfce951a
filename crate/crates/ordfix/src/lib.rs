//! Monotone fixed-point solver for decreasing operators on ordered
//! function grids.
//!
//! Functions on [0, 1] are discretized on a uniform grid and ordered
//! pointwise by the nonnegative cone. For a decreasing operator `A` that
//! satisfies an ordered contraction condition with a modulus `f` mapping
//! `(0, inf)` into `(0, 1)`, the square `B = A∘A` is increasing and the
//! chain `x_{n+1} = B(x_n)` from a suitable start converges monotonically
//! to the unique fixed point of `A`, with explicit geometric rate and both
//! a-priori and a-posteriori error certificates.
//!
//! The crate ships the solver pipeline ([`solver::solve`]), numerical
//! checkers for the contraction condition ([`contraction::check_condition_h`]),
//! two concrete integral operators ([`operators::SignalFeedbackOperator`],
//! [`operators::PeriodicBVPOperator`]), and a CLI (`solve`) that runs the
//! shipped scenarios and emits JSON reports or CSV iteration traces.

pub mod cli;
pub mod contraction;
pub mod error;
pub mod operator;
pub mod operators;
pub mod solver;
pub mod space;

pub use contraction::{
    a_posteriori_bound, a_priori_bound, check_condition_h, check_squared_condition,
    contraction_rate, ConditionReport, ConditionWitness, Modulus, PairSampler,
};
pub use error::Error;
pub use operator::GridOperator;
pub use operators::{
    check_periodic_hypothesis, greens_function, greens_integral, greens_integral_naive,
    ode_residual, quadrature, ConstantOperator, IntegralMode, KernelRule, PeriodicBVPOperator,
    ScaleOperator, SignalFeedbackOperator, TripleSampler,
};
pub use solver::{
    choose_start, iterate, solve, square, uniqueness_probe, Direction, FixedPointResult,
    IterateTrace, IterationOutcome, ProbeRun, SolveConfig, Squared, StartCase, TraceStep,
    UniquenessReport,
};
pub use space::{inf_sup, ConeSpec, GridFunction, DEFAULT_ORDER_TOL};
