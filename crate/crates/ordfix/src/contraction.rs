//! Contraction moduli, numerical verification of the ordered contraction
//! condition, and the explicit rate and error-bound formulas.
//!
//! A modulus is an increasing map of `(0, inf)` into `(0, 1)`. The ordered
//! contraction condition asks, for every comparable pair `u <= v`, that
//! `A(u) - A(v) <= f(||v - u||) * (v - u)` hold nodewise in the native
//! (sup) norm. All rate and bound formulas below use the monotone norm.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Error;
use crate::operator::GridOperator;
use crate::space::{ConeSpec, GridFunction};

/// Sample count used to vet user-supplied moduli at construction.
const USER_MODULUS_SAMPLES: usize = 512;
/// Sampling window for vetting, log-spaced.
const USER_MODULUS_RANGE: (f64, f64) = (1e-9, 1e9);

type UserFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

enum Kind {
    Constant(f64),
    Logarithmic,
    User(UserFn),
}

/// An increasing function from `(0, inf)` into `(0, 1)`.
///
/// Shipped variants: a constant level, and `t * ln(1 + 1/t)`, which is
/// increasing and bounded by `t * (1/t) = 1`. User-supplied callables are
/// vetted by sampling at construction.
pub struct Modulus {
    kind: Kind,
}

impl Clone for Modulus {
    fn clone(&self) -> Self {
        let kind = match &self.kind {
            Kind::Constant(c) => Kind::Constant(*c),
            Kind::Logarithmic => Kind::Logarithmic,
            Kind::User(f) => Kind::User(Arc::clone(f)),
        };
        Self { kind }
    }
}

impl fmt::Debug for Modulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            Kind::Constant(c) => write!(f, "Modulus::Constant({c})"),
            Kind::Logarithmic => write!(f, "Modulus::Logarithmic"),
            Kind::User(_) => write!(f, "Modulus::User(..)"),
        }
    }
}

impl Modulus {
    /// The constant modulus `f(t) = c` with `c` in `(0, 1)`.
    pub fn constant(c: f64) -> Result<Self, Error> {
        if !c.is_finite() || c <= 0.0 || c >= 1.0 {
            return Err(Error::InvalidParameter(format!(
                "constant modulus must lie in (0, 1), got {c}"
            )));
        }
        Ok(Self {
            kind: Kind::Constant(c),
        })
    }

    /// The modulus `f(t) = t * ln(1 + 1/t)`.
    pub fn logarithmic() -> Self {
        Self {
            kind: Kind::Logarithmic,
        }
    }

    /// Wraps a user callable, vetting range and monotonicity by sampling
    /// log-spaced points in `(1e-9, 1e9)`.
    pub fn user(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Result<Self, Error> {
        let (lo, hi) = USER_MODULUS_RANGE;
        let ratio = (hi / lo).ln();
        let mut prev: Option<(f64, f64)> = None;
        for i in 0..USER_MODULUS_SAMPLES {
            let t = lo * (ratio * i as f64 / (USER_MODULUS_SAMPLES - 1) as f64).exp();
            let v = f(t);
            if !v.is_finite() || v <= 0.0 || v >= 1.0 {
                return Err(Error::ModulusRange { t, value: v });
            }
            if let Some((t0, v0)) = prev {
                if v + 1e-12 < v0 {
                    return Err(Error::ModulusNotNondecreasing { t0, t1: t });
                }
            }
            prev = Some((t, v));
        }
        Ok(Self {
            kind: Kind::User(Arc::new(f)),
        })
    }

    /// Evaluate at `t > 0`. The modulus is undefined at zero; callers must
    /// short-circuit the converged case where the argument is a zero norm.
    pub fn eval(&self, t: f64) -> Result<f64, Error> {
        if !t.is_finite() || t <= 0.0 {
            return Err(Error::ModulusDomain(t));
        }
        match &self.kind {
            Kind::Constant(c) => Ok(*c),
            Kind::Logarithmic => {
                let r = 1.0 / t;
                let v = if r.is_finite() {
                    t * r.ln_1p()
                } else {
                    // subnormal t: ln(1 + 1/t) ~ -ln t
                    t * -t.ln()
                };
                Ok(v.min(1.0 - f64::EPSILON))
            }
            Kind::User(f) => {
                let v = f(t);
                if !v.is_finite() || v <= 0.0 || v >= 1.0 {
                    return Err(Error::ModulusRange { t, value: v });
                }
                Ok(v)
            }
        }
    }
}

/// The explicit convergence rate
/// `lambda = f(N * f(M*d0) * M*d0) * f(M*d0)`
/// with `d0` the first step in the monotone norm. Lands in `(0, 1)`
/// whenever the modulus honors its range invariant.
pub fn contraction_rate(modulus: &Modulus, spec: &ConeSpec, d0: f64) -> Result<f64, Error> {
    if !d0.is_finite() || d0 <= 0.0 {
        return Err(Error::NonPositiveGap(d0));
    }
    let md0 = spec.upper_equiv * d0;
    let inner = modulus.eval(md0)?;
    let outer = modulus.eval(spec.normal_constant * inner * md0)?;
    Ok(outer * inner)
}

/// A-priori bound `lambda^k / (1 - lambda) * d0` on the monotone-norm
/// distance from the k-th iterate to the limit.
///
/// Computed by repeated multiplication so that the bound at `k + 1` equals
/// exactly `lambda` times the bound at `k`.
pub fn a_priori_bound(lambda: f64, d0: f64, k: usize) -> Result<f64, Error> {
    if !lambda.is_finite() || lambda <= 0.0 || lambda >= 1.0 {
        return Err(Error::RateOutOfRange(lambda));
    }
    if !d0.is_finite() || d0 < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "initial gap must be nonnegative, got {d0}"
        )));
    }
    let mut bound = d0 / (1.0 - lambda);
    for _ in 0..k {
        bound *= lambda;
    }
    Ok(bound)
}

/// A-posteriori bound `lambda / (1 - lambda) * last_step` on the
/// monotone-norm distance from the newest iterate to the limit.
pub fn a_posteriori_bound(lambda: f64, last_step: f64) -> Result<f64, Error> {
    if !lambda.is_finite() || lambda <= 0.0 || lambda >= 1.0 {
        return Err(Error::RateOutOfRange(lambda));
    }
    if !last_step.is_finite() || last_step < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "step norm must be nonnegative, got {last_step}"
        )));
    }
    Ok(lambda / (1.0 - lambda) * last_step)
}

/// The worst offending node of a failed (or worst passing) check.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionWitness {
    /// Index of the pair (or sampled triple) in the input sequence.
    pub pair_index: usize,
    /// Grid node index; 0 for scalar checks.
    pub node_index: usize,
    /// Norm of the pair difference (the gap `x - y` for scalar checks).
    pub gap: f64,
    /// Left side of the checked inequality at the worst node.
    pub lhs: f64,
    /// Right side of the checked inequality at the worst node.
    pub rhs: f64,
}

/// Aggregate outcome of a sampling-based condition check.
///
/// `worst_ratio` is the largest nodewise ratio of the inequality's left side
/// to its slack-adjusted right side, floored at zero; every pair passed
/// exactly when `worst_ratio <= 1`. The witness points at the globally worst
/// node and is present only when some pair failed.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionReport {
    pub pairs_tested: usize,
    pub pairs_passed: usize,
    pub worst_ratio: f64,
    pub witness: Option<ConditionWitness>,
}

impl ConditionReport {
    pub fn all_passed(&self) -> bool {
        self.pairs_passed == self.pairs_tested
    }
}

/// Nodewise violation ratio for `lhs <= rhs + tol` with `rhs >= 0`.
/// The check passes exactly when the ratio is at most 1.
fn violation_ratio(lhs: f64, rhs: f64, tol: f64) -> f64 {
    let denom = rhs + tol;
    if denom > 0.0 {
        lhs / denom
    } else if lhs <= 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

struct ReportBuilder {
    tested: usize,
    passed: usize,
    worst_ratio: f64,
    worst: Option<ConditionWitness>,
}

impl ReportBuilder {
    fn new() -> Self {
        Self {
            tested: 0,
            passed: 0,
            worst_ratio: 0.0,
            worst: None,
        }
    }

    fn record(&mut self, pair_ratio: f64, witness: ConditionWitness) {
        self.tested += 1;
        if pair_ratio <= 1.0 {
            self.passed += 1;
        }
        if pair_ratio > self.worst_ratio {
            self.worst_ratio = pair_ratio;
            self.worst = Some(witness);
        }
    }

    fn record_trivial_pass(&mut self) {
        self.tested += 1;
        self.passed += 1;
    }

    fn finish(self) -> ConditionReport {
        let failed = self.passed < self.tested;
        ConditionReport {
            pairs_tested: self.tested,
            pairs_passed: self.passed,
            worst_ratio: self.worst_ratio,
            witness: if failed { self.worst } else { None },
        }
    }
}

/// Verifies the ordered contraction condition on sampled comparable pairs:
/// nodewise `A(u) - A(v) <= f(||v - u||) * (v - u) + order_tol`, with the
/// native sup norm as the modulus argument.
///
/// Pairs must come ordered `u <= v`; an incomparable pair is an error, not a
/// skip. Identical pairs pass trivially (the modulus is undefined at zero,
/// and both sides vanish).
pub fn check_condition_h<A: GridOperator + ?Sized>(
    op: &A,
    modulus: &Modulus,
    pairs: &[(GridFunction, GridFunction)],
    spec: &ConeSpec,
) -> Result<ConditionReport, Error> {
    let mut builder = ReportBuilder::new();
    for (index, (u, v)) in pairs.iter().enumerate() {
        if !u.leq(v, spec)? {
            return Err(Error::IncomparablePair { index });
        }
        let gap = u.sup_distance(v)?;
        if gap == 0.0 {
            builder.record_trivial_pass();
            continue;
        }
        let au = op.apply(u)?;
        let av = op.apply(v)?;
        let factor = modulus.eval(gap)?;
        record_nodewise(
            &mut builder,
            index,
            gap,
            spec.order_tol,
            |i| {
                let lhs = au.values()[i] - av.values()[i];
                let rhs = factor * (v.values()[i] - u.values()[i]);
                (lhs, rhs)
            },
            u.values().len(),
        );
    }
    Ok(builder.finish())
}

/// Verifies the squared-operator contraction on sampled comparable pairs:
/// with `B = A∘A`, nodewise
/// `B(v) - B(u) <= f(N * f(||u - v||) * ||u - v||) * f(||u - v||) * (v - u) + order_tol`.
pub fn check_squared_condition<A: GridOperator + ?Sized>(
    op: &A,
    modulus: &Modulus,
    pairs: &[(GridFunction, GridFunction)],
    spec: &ConeSpec,
) -> Result<ConditionReport, Error> {
    let mut builder = ReportBuilder::new();
    for (index, (u, v)) in pairs.iter().enumerate() {
        if !u.leq(v, spec)? {
            return Err(Error::IncomparablePair { index });
        }
        let gap = u.sup_distance(v)?;
        if gap == 0.0 {
            builder.record_trivial_pass();
            continue;
        }
        let bu = op.apply(&op.apply(u)?)?;
        let bv = op.apply(&op.apply(v)?)?;
        let inner = modulus.eval(gap)?;
        let outer = modulus.eval(spec.normal_constant * inner * gap)?;
        let factor = outer * inner;
        record_nodewise(
            &mut builder,
            index,
            gap,
            spec.order_tol,
            |i| {
                let lhs = bv.values()[i] - bu.values()[i];
                let rhs = factor * (v.values()[i] - u.values()[i]);
                (lhs, rhs)
            },
            u.values().len(),
        );
    }
    Ok(builder.finish())
}

fn record_nodewise(
    builder: &mut ReportBuilder,
    pair_index: usize,
    gap: f64,
    tol: f64,
    sides: impl Fn(usize) -> (f64, f64),
    len: usize,
) {
    let mut pair_ratio = f64::NEG_INFINITY;
    let mut worst_node = 0;
    let mut worst_sides = (0.0, 0.0);
    for i in 0..len {
        let (lhs, rhs) = sides(i);
        let ratio = violation_ratio(lhs, rhs, tol);
        if ratio > pair_ratio {
            pair_ratio = ratio;
            worst_node = i;
            worst_sides = (lhs, rhs);
        }
    }
    builder.record(
        pair_ratio,
        ConditionWitness {
            pair_index,
            node_index: worst_node,
            gap,
            lhs: worst_sides.0,
            rhs: worst_sides.1,
        },
    );
}

/// Seeded generator of comparable pairs `(u, u + p)` with `p >= 0`, both
/// inside the box `[lower, upper]` nodewise. Comparability holds by
/// construction, so the checkers never reject its output.
#[derive(Debug, Clone)]
pub struct PairSampler {
    pub grid_n: usize,
    pub count: usize,
    pub lower: f64,
    pub upper: f64,
    pub seed: u64,
}

impl PairSampler {
    pub fn new(
        grid_n: usize,
        count: usize,
        lower: f64,
        upper: f64,
        seed: u64,
    ) -> Result<Self, Error> {
        if grid_n < 1 {
            return Err(Error::InvalidGrid("resolution must be at least 1".into()));
        }
        if !upper.is_finite() || !lower.is_finite() || upper <= lower {
            return Err(Error::InvalidParameter(format!(
                "sampling box must have upper > lower, got [{lower}, {upper}]"
            )));
        }
        Ok(Self {
            grid_n,
            count,
            lower,
            upper,
            seed,
        })
    }

    pub fn generate(&self) -> Vec<(GridFunction, GridFunction)> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..self.count)
            .map(|_| {
                let u: Vec<f64> = (0..=self.grid_n)
                    .map(|_| rng.gen_range(self.lower..=self.upper))
                    .collect();
                let v: Vec<f64> = u.iter().map(|&x| rng.gen_range(x..=self.upper)).collect();
                (
                    GridFunction::new(u).expect("sampled values are finite"),
                    GridFunction::new(v).expect("sampled values are finite"),
                )
            })
            .collect()
    }
}
