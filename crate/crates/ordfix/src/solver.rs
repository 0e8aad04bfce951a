//! The constructive solver: start-point selection, operator squaring, the
//! monotone Picard iteration with its error certificates, and the
//! uniqueness probe.
//!
//! The target operator `A` is decreasing, so the iteration runs on the
//! increasing square `B = A∘A`. From a start comparable with its image the
//! chain `x_{n+1} = B(x_n)` is monotone, the step norms contract with the
//! explicit rate, and the limit transfers back to a fixed point of `A`.

use crate::contraction::{a_posteriori_bound, contraction_rate, Modulus};
use crate::error::Error;
use crate::operator::GridOperator;
use crate::space::{inf_sup, ConeSpec, GridFunction};

/// Solver knobs. `tol` is the target monotone-norm distance to the limit
/// certified by the a-posteriori bound.
#[derive(Debug, Clone)]
pub struct SolveConfig {
    pub tol: f64,
    pub max_iters: usize,
    pub record_trace: bool,
    pub seed: u64,
    /// Recompute the rate from the current step norm as the chain tightens.
    /// Sound because step norms decrease and the modulus is nondecreasing;
    /// off by default so the certificate matches the one-shot rate.
    pub retighten_rate: bool,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iters: 10_000,
            record_trace: false,
            seed: 0,
            retighten_rate: false,
        }
    }
}

impl SolveConfig {
    fn validate(&self) -> Result<(), Error> {
        if !self.tol.is_finite() || self.tol <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "tolerance must be positive, got {}",
                self.tol
            )));
        }
        if self.max_iters < 1 {
            return Err(Error::InvalidParameter(
                "iteration budget must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Which way the monotone chain runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Increasing,
    Decreasing,
}

/// How the start point was obtained: directly (`I`, the start and its image
/// are comparable) or from the lattice infimum of the two (`II`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StartCase {
    I,
    II,
}

impl std::fmt::Display for StartCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StartCase::I => write!(f, "I"),
            StartCase::II => write!(f, "II"),
        }
    }
}

/// One recorded step of the chain. Row `k` holds the step
/// `||x_{k+1} - x_k||` leaving iterate `k`, the a-priori bound
/// `lambda^k/(1-lambda) * d0` on the distance from iterate `k` to the
/// limit, and the a-posteriori bound on the distance from iterate `k+1`.
/// All norms are monotone norms.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceStep {
    pub iterate: usize,
    pub step_norm: f64,
    pub a_priori: f64,
    pub a_posteriori: f64,
}

/// The recorded chain: step norms are nonincreasing, and each recorded step
/// is bounded by its row's a-priori bound.
#[derive(Debug, Clone, PartialEq)]
pub struct IterateTrace {
    pub steps: Vec<TraceStep>,
    pub direction: Direction,
}

/// Outcome of a successful solve.
#[derive(Debug, Clone)]
pub struct FixedPointResult {
    pub fixed_point: GridFunction,
    /// `||A(x*) - x*||` in the native norm.
    pub residual: f64,
    /// The certified rate; absent only when the start was already fixed
    /// (the modulus is undefined at a zero gap).
    pub lambda: Option<f64>,
    /// First step norm `||x_1 - x_0||` in the monotone norm.
    pub d0: f64,
    /// Number of applications of the squared operator.
    pub iterations: usize,
    pub case_taken: StartCase,
    pub trace: Option<IterateTrace>,
}

/// The square `B = A∘A`; increasing when `A` is decreasing.
#[derive(Debug, Clone)]
pub struct Squared<A> {
    inner: A,
}

/// Wraps an operator as its own composition with itself.
pub fn square<A: GridOperator>(inner: A) -> Squared<A> {
    Squared { inner }
}

impl<A: GridOperator> GridOperator for Squared<A> {
    fn apply(&self, u: &GridFunction) -> Result<GridFunction, Error> {
        self.inner.apply(&self.inner.apply(u)?)
    }

    fn grid_n(&self) -> usize {
        self.inner.grid_n()
    }

    fn residual_allowance(&self) -> f64 {
        2.0 * self.inner.residual_allowance()
    }
}

/// Picks a start for the squared-operator chain.
///
/// If `u0` is comparable with `A(u0)` the chain starts at `u0` (case I),
/// increasing when `u0 <= A(u0)` and decreasing otherwise. If the two are
/// incomparable the chain starts at their pointwise infimum, which sits
/// below its own image (case II, increasing). The start inequality against
/// `B = A∘A` is verified at runtime; failure exposes an operator that is
/// not decreasing or breaks the contraction condition.
pub fn choose_start<A: GridOperator + ?Sized>(
    op: &A,
    u0: &GridFunction,
    spec: &ConeSpec,
) -> Result<(GridFunction, StartCase, Direction), Error> {
    let au0 = op.apply(u0)?;
    let (x0, case, direction) = if u0.leq(&au0, spec)? {
        (u0.clone(), StartCase::I, Direction::Increasing)
    } else if au0.leq(u0, spec)? {
        (u0.clone(), StartCase::I, Direction::Decreasing)
    } else {
        let (lo, _hi) = inf_sup(u0, &au0)?;
        (lo, StartCase::II, Direction::Increasing)
    };
    let bx0 = op.apply(&op.apply(&x0)?)?;
    let consistent = match direction {
        Direction::Increasing => x0.leq(&bx0, spec)?,
        Direction::Decreasing => bx0.leq(&x0, spec)?,
    };
    if !consistent {
        return Err(Error::StartInconsistent(format!(
            "start is not comparable with its image under the squared operator \
             in the {direction:?} direction"
        )));
    }
    Ok((x0, case, direction))
}

/// Everything the iteration produces.
#[derive(Debug, Clone)]
pub struct IterationOutcome {
    pub fixed_point: GridFunction,
    pub trace: IterateTrace,
    pub lambda: Option<f64>,
    pub d0: f64,
    pub iterations: usize,
}

/// Runs the monotone chain `x_{n+1} = B(x_n)` until the a-posteriori bound
/// drops to `cfg.tol`.
///
/// The rate is computed once from the first step (unless retightening is
/// enabled). Each step is checked for chain monotonicity in the declared
/// direction and for nonincreasing step norms; a violation means the
/// operator broke its contract. A zero first step returns immediately with
/// an empty trace.
pub fn iterate<B: GridOperator + ?Sized>(
    op: &B,
    x0: &GridFunction,
    direction: Direction,
    modulus: &Modulus,
    spec: &ConeSpec,
    cfg: &SolveConfig,
) -> Result<IterationOutcome, Error> {
    cfg.validate()?;
    let mut curr = op.apply(x0)?;
    check_chain_order(x0, &curr, direction, spec, 0)?;
    let d0 = x0.monotone_distance(&curr, spec)?;
    if d0 == 0.0 {
        return Ok(IterationOutcome {
            fixed_point: curr,
            trace: IterateTrace {
                steps: Vec::new(),
                direction,
            },
            lambda: None,
            d0: 0.0,
            iterations: 1,
        });
    }
    let mut lambda = contraction_rate(modulus, spec, d0)?;
    let mut a_priori = d0 / (1.0 - lambda);
    let mut last_step = d0;
    let mut steps = Vec::new();
    let mut k = 0usize;
    loop {
        let a_post = a_posteriori_bound(lambda, last_step)?;
        steps.push(TraceStep {
            iterate: k,
            step_norm: last_step,
            a_priori,
            a_posteriori: a_post,
        });
        if a_post <= cfg.tol {
            break;
        }
        if k + 1 >= cfg.max_iters {
            return Err(Error::MaxIterations(cfg.max_iters));
        }
        let next = op.apply(&curr)?;
        check_chain_order(&curr, &next, direction, spec, k + 1)?;
        let step = curr.monotone_distance(&next, spec)?;
        if step > last_step + spec.order_tol {
            return Err(Error::StepNormIncreased { iteration: k + 1 });
        }
        if cfg.retighten_rate && step > 0.0 {
            lambda = contraction_rate(modulus, spec, step)?;
        }
        curr = next;
        last_step = step;
        a_priori *= lambda;
        k += 1;
    }
    Ok(IterationOutcome {
        fixed_point: curr,
        trace: IterateTrace { steps, direction },
        lambda: Some(lambda),
        d0,
        iterations: k + 1,
    })
}

fn check_chain_order(
    prev: &GridFunction,
    next: &GridFunction,
    direction: Direction,
    spec: &ConeSpec,
    iteration: usize,
) -> Result<(), Error> {
    let ok = match direction {
        Direction::Increasing => prev.leq(next, spec)?,
        Direction::Decreasing => next.leq(prev, spec)?,
    };
    if ok {
        Ok(())
    } else {
        Err(Error::ChainViolation { iteration })
    }
}

/// Full pipeline: choose a start, square the operator, iterate, and check
/// the fixed-point residual of the original operator.
///
/// The residual threshold is `2 N tol` plus the operator's own quadrature
/// allowance: the limit of the squared chain transfers to a fixed point of
/// `A`, so the measured residual inherits only iteration and discretization
/// error.
pub fn solve<A: GridOperator + ?Sized>(
    op: &A,
    u0: &GridFunction,
    modulus: &Modulus,
    spec: &ConeSpec,
    cfg: &SolveConfig,
) -> Result<FixedPointResult, Error> {
    cfg.validate()?;
    let (x0, case_taken, direction) = choose_start(op, u0, spec)?;
    let squared = square(op);
    let outcome = iterate(&squared, &x0, direction, modulus, spec, cfg)?;
    let image = op.apply(&outcome.fixed_point)?;
    let residual = image.sup_distance(&outcome.fixed_point)?;
    let threshold = 2.0 * spec.normal_constant * cfg.tol + op.residual_allowance();
    if residual > threshold {
        return Err(Error::ResidualExceeded {
            residual,
            threshold,
        });
    }
    Ok(FixedPointResult {
        fixed_point: outcome.fixed_point,
        residual,
        lambda: outcome.lambda,
        d0: outcome.d0,
        iterations: outcome.iterations,
        case_taken,
        trace: cfg.record_trace.then_some(outcome.trace),
    })
}

/// One run of the uniqueness probe.
#[derive(Debug)]
pub struct ProbeRun {
    pub start: String,
    pub outcome: Result<FixedPointResult, Error>,
}

/// Outcome of solving from several starts. An operator honoring the
/// contraction condition has one fixed point, so the largest pairwise
/// native-norm distance should vanish up to solver tolerance; a large
/// distance is evidence the condition is violated.
#[derive(Debug)]
pub struct UniquenessReport {
    pub runs: Vec<ProbeRun>,
    pub max_pairwise_distance: f64,
}

impl UniquenessReport {
    pub fn successes(&self) -> usize {
        self.runs.iter().filter(|r| r.outcome.is_ok()).count()
    }
}

/// Solves from each labelled start; per-run errors are recorded, not fatal.
pub fn uniqueness_probe<A: GridOperator + ?Sized>(
    op: &A,
    starts: &[(String, GridFunction)],
    modulus: &Modulus,
    spec: &ConeSpec,
    cfg: &SolveConfig,
) -> Result<UniquenessReport, Error> {
    let runs: Vec<ProbeRun> = starts
        .iter()
        .map(|(label, u0)| ProbeRun {
            start: label.clone(),
            outcome: solve(op, u0, modulus, spec, cfg),
        })
        .collect();
    let fixed_points: Vec<&GridFunction> = runs
        .iter()
        .filter_map(|r| r.outcome.as_ref().ok().map(|res| &res.fixed_point))
        .collect();
    let mut max_pairwise_distance = 0.0f64;
    for (i, a) in fixed_points.iter().enumerate() {
        for b in &fixed_points[i + 1..] {
            max_pairwise_distance = max_pairwise_distance.max(a.sup_distance(b)?);
        }
    }
    Ok(UniquenessReport {
        runs,
        max_pairwise_distance,
    })
}
