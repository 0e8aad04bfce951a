//! Concrete operators: the signal-feedback integral operator, the periodic
//! boundary-value integral operator with its Green kernel, and the quadrature
//! they need.

use std::f64::consts::PI;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::contraction::{ConditionReport, ConditionWitness, Modulus};
use crate::error::Error;
use crate::operator::GridOperator;
use crate::space::{ConeSpec, GridFunction, DEFAULT_ORDER_TOL};

/// Composite quadrature of node values over [0, 1]: Simpson for an even
/// number of intervals (O(h^4) for smooth integrands), trapezoid fallback
/// for an odd count (O(h^2)).
pub fn quadrature(values: &[f64]) -> Result<f64, Error> {
    if values.len() < 2 {
        return Err(Error::Quadrature(format!(
            "need at least 2 node values, got {}",
            values.len()
        )));
    }
    let n = values.len() - 1;
    let h = 1.0 / n as f64;
    if n.is_multiple_of(2) {
        let mut odd = 0.0;
        let mut even = 0.0;
        for (i, v) in values.iter().enumerate().take(n).skip(1) {
            if i % 2 == 1 {
                odd += v;
            } else {
                even += v;
            }
        }
        Ok(h / 3.0 * (values[0] + values[n] + 4.0 * odd + 2.0 * even))
    } else {
        let interior: f64 = values[1..n].iter().sum();
        Ok(h * (0.5 * (values[0] + values[n]) + interior))
    }
}

/// Cumulative integral of uniformly spaced samples by cubic interpolation:
/// `p[k]` approximates the integral of the sampled function over `[0, t_k]`
/// with O(h^4) accuracy. Needs at least 3 intervals.
fn cumulative_integral(g: &[f64], h: f64) -> Vec<f64> {
    let n = g.len() - 1;
    debug_assert!(n >= 3);
    let mut p = vec![0.0; n + 1];
    for k in 0..n {
        let inc = if k == 0 {
            h / 24.0 * (9.0 * g[0] + 19.0 * g[1] - 5.0 * g[2] + g[3])
        } else if k == n - 1 {
            h / 24.0 * (g[n - 3] - 5.0 * g[n - 2] + 19.0 * g[n - 1] + 9.0 * g[n])
        } else {
            h / 24.0 * (-g[k - 1] + 13.0 * g[k] + 13.0 * g[k + 1] - g[k + 2])
        };
        p[k + 1] = p[k] + inc;
    }
    p
}

// ---------------------------------------------------------------------------
// Signal feedback operator
// ---------------------------------------------------------------------------

/// How the signal operator evaluates its inner integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntegralMode {
    /// Closed form of the inner integral: `1/3 + t^2 + u * (1/5 + t^2/3)`.
    Analytic,
    /// Composite quadrature over the operator's own grid.
    Quadrature,
}

/// Distance kept between inputs and the pole of `1/(2*pi + u)`.
const SIGNAL_POLE_GUARD: f64 = 1e-3;

/// The self-feedback channel operator
/// `A(u)(t) = 1/(2*pi + u(t)) - (pi^2/16) * int_0^1 (s^2 + t^2)(1 + u(t) s^2)/(2*pi*M) ds`,
/// decreasing in `u`. The channel parameter `M` is a positive integer.
///
/// Inputs are accepted on the whole region where the formula is defined
/// (node values above the `-2*pi` pole); the contraction estimates are
/// stated for the nonnegative cone, which is where the samplers draw pairs.
#[derive(Debug, Clone)]
pub struct SignalFeedbackOperator {
    m_param: u32,
    grid_n: usize,
    mode: IntegralMode,
}

impl SignalFeedbackOperator {
    pub fn new(m_param: u32, grid_n: usize, mode: IntegralMode) -> Result<Self, Error> {
        if m_param < 1 {
            return Err(Error::InvalidParameter(
                "channel parameter must be a positive integer".into(),
            ));
        }
        if grid_n < 1 {
            return Err(Error::InvalidGrid("resolution must be at least 1".into()));
        }
        Ok(Self {
            m_param,
            grid_n,
            mode,
        })
    }

    /// Closed-form variant.
    pub fn analytic(m_param: u32, grid_n: usize) -> Result<Self, Error> {
        Self::new(m_param, grid_n, IntegralMode::Analytic)
    }

    pub fn m_param(&self) -> u32 {
        self.m_param
    }

    pub fn mode(&self) -> IntegralMode {
        self.mode
    }

    /// The analytic one-sided Lipschitz factor `1/(4*pi^2) + pi/(60*M)`;
    /// stays below 3/20 for every positive integer `M`.
    pub fn contraction_margin(&self) -> f64 {
        1.0 / (4.0 * PI * PI) + PI / (60.0 * self.m_param as f64)
    }
}

impl GridOperator for SignalFeedbackOperator {
    fn apply(&self, u: &GridFunction) -> Result<GridFunction, Error> {
        if u.n() != self.grid_n {
            return Err(Error::GridMismatch {
                left: self.grid_n,
                right: u.n(),
            });
        }
        let floor = -2.0 * PI + SIGNAL_POLE_GUARD;
        if let Some(i) = u.values().iter().position(|&x| x <= floor) {
            return Err(Error::Domain(format!(
                "node {i} value {} too close to the pole at -2*pi",
                u.values()[i]
            )));
        }
        let m = self.m_param as f64;
        let n = self.grid_n;
        let mut out = Vec::with_capacity(n + 1);
        for i in 0..=n {
            let t = i as f64 / n as f64;
            let ui = u.values()[i];
            let integral = match self.mode {
                IntegralMode::Analytic => {
                    (1.0 / 3.0 + t * t + ui * (0.2 + t * t / 3.0)) / (2.0 * PI * m)
                }
                IntegralMode::Quadrature => {
                    let integrand: Vec<f64> = (0..=n)
                        .map(|j| {
                            let s = j as f64 / n as f64;
                            (s * s + t * t) * (1.0 + ui * s * s) / (2.0 * PI * m)
                        })
                        .collect();
                    quadrature(&integrand)?
                }
            };
            out.push(1.0 / (2.0 * PI + ui) - PI * PI / 16.0 * integral);
        }
        GridFunction::new(out)
    }

    fn grid_n(&self) -> usize {
        self.grid_n
    }

    fn residual_allowance(&self) -> f64 {
        let h = 1.0 / self.grid_n as f64;
        let m = self.m_param as f64;
        match self.mode {
            IntegralMode::Analytic => 0.0,
            IntegralMode::Quadrature => {
                if self.grid_n.is_multiple_of(2) {
                    0.03 * h.powi(4) / m
                } else {
                    0.25 * h * h / m
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Green's function and the periodic operator
// ---------------------------------------------------------------------------

fn green_value(lambda: f64, t: f64, s: f64) -> f64 {
    // diagonal s = t belongs to the first branch
    if s <= t {
        (lambda * (1.0 + s - t)).exp() / lambda.exp_m1()
    } else {
        (lambda * (s - t)).exp() / lambda.exp_m1()
    }
}

/// The periodic-problem Green kernel on `[0,1]^2`:
/// `e^{lambda(1+s-t)}/(e^lambda - 1)` for `s <= t` and
/// `e^{lambda(s-t)}/(e^lambda - 1)` for `s > t`. Strictly positive, and its
/// integral in `s` over [0, 1] equals `1/lambda` at every `t`.
pub fn greens_function(lambda_bvp: f64, t: f64, s: f64) -> Result<f64, Error> {
    validate_bvp_rate(lambda_bvp)?;
    if !(0.0..=1.0).contains(&t) || !(0.0..=1.0).contains(&s) {
        return Err(Error::InvalidParameter(format!(
            "kernel arguments must lie in [0, 1], got t = {t}, s = {s}"
        )));
    }
    Ok(green_value(lambda_bvp, t, s))
}

fn validate_bvp_rate(lambda_bvp: f64) -> Result<(), Error> {
    if !lambda_bvp.is_finite() || lambda_bvp <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "kernel rate must be positive, got {lambda_bvp}"
        )));
    }
    if lambda_bvp > 700.0 {
        return Err(Error::InvalidParameter(format!(
            "kernel rate {lambda_bvp} overflows e^lambda"
        )));
    }
    Ok(())
}

/// Nodewise integral of the kernel against node weights `w`, split at the
/// diagonal. Both kernel branches share the factor `e^{lambda s}`, so the
/// split reduces to one cumulative integral of `e^{lambda s} w(s)`:
/// `int_0^1 G(t,s) w(s) ds = e^{-lambda t} (P(t) + J/(e^lambda - 1))`
/// with `P` the prefix integral and `J = P(1)`.
fn split_kernel_apply(lambda: f64, w: &[f64]) -> Vec<f64> {
    let n = w.len() - 1;
    let h = 1.0 / n as f64;
    let g: Vec<f64> = w
        .iter()
        .enumerate()
        .map(|(j, wj)| (lambda * j as f64 * h).exp() * wj)
        .collect();
    let p = cumulative_integral(&g, h);
    let total = p[n];
    let denom = lambda.exp_m1();
    (0..=n)
        .map(|i| (-lambda * i as f64 * h).exp() * (p[i] + total / denom))
        .collect()
}

fn naive_kernel_apply(lambda: f64, w: &[f64]) -> Result<Vec<f64>, Error> {
    let n = w.len() - 1;
    let h = 1.0 / n as f64;
    (0..=n)
        .map(|i| {
            let t = i as f64 * h;
            let integrand: Vec<f64> = w
                .iter()
                .enumerate()
                .map(|(j, wj)| green_value(lambda, t, j as f64 * h) * wj)
                .collect();
            quadrature(&integrand)
        })
        .collect()
}

/// Nodewise `int_0^1 G(t_i, s) ds` on a resolution-`grid_n` grid using the
/// split-at-diagonal quadrature. Equals `1/lambda` up to the rule's error.
pub fn greens_integral(lambda_bvp: f64, grid_n: usize) -> Result<Vec<f64>, Error> {
    validate_bvp_rate(lambda_bvp)?;
    if grid_n < 3 {
        return Err(Error::InvalidGrid(
            "kernel quadrature needs resolution >= 3".into(),
        ));
    }
    Ok(split_kernel_apply(lambda_bvp, &vec![1.0; grid_n + 1]))
}

/// Same integral by whole-interval composite Simpson that ignores the
/// kernel's jump at the diagonal. Kept as a foil: the jump wrecks the
/// rule's accuracy.
pub fn greens_integral_naive(lambda_bvp: f64, grid_n: usize) -> Result<Vec<f64>, Error> {
    validate_bvp_rate(lambda_bvp)?;
    if grid_n < 2 {
        return Err(Error::InvalidGrid(
            "kernel quadrature needs resolution >= 2".into(),
        ));
    }
    naive_kernel_apply(lambda_bvp, &vec![1.0; grid_n + 1])
}

/// Kernel quadrature used by [`PeriodicBVPOperator`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelRule {
    /// Split the integral at the kernel's diagonal jump; O(h^4).
    SplitAtDiagonal,
    /// Whole-interval composite Simpson across the jump (test foil).
    NaiveSimpson,
}

/// The fixed-point form of the first-order periodic problem
/// `u' = F(t, u)`, `u(0) = u(1)`:
/// `T(u)(t) = int_0^1 G(t,s) [F(s, u(s)) + lambda u(s)] ds`.
/// Decreasing whenever `F + lambda id` is decreasing in the state.
#[derive(Debug, Clone)]
pub struct PeriodicBVPOperator<F> {
    lambda_bvp: f64,
    alpha: f64,
    grid_n: usize,
    rule: KernelRule,
    nonlinearity: F,
}

impl<F: Fn(f64, f64) -> f64> PeriodicBVPOperator<F> {
    /// `alpha` must satisfy `0 < alpha <= lambda_bvp * N` with `N` the
    /// cone's normal constant.
    pub fn new(
        lambda_bvp: f64,
        alpha: f64,
        grid_n: usize,
        rule: KernelRule,
        nonlinearity: F,
        spec: &ConeSpec,
    ) -> Result<Self, Error> {
        validate_bvp_rate(lambda_bvp)?;
        if !alpha.is_finite() || alpha <= 0.0 || alpha > lambda_bvp * spec.normal_constant {
            return Err(Error::InvalidParameter(format!(
                "alpha must satisfy 0 < alpha <= lambda * N, got alpha = {alpha}, lambda = {lambda_bvp}, N = {}",
                spec.normal_constant
            )));
        }
        if grid_n < 3 {
            return Err(Error::InvalidGrid(
                "kernel quadrature needs resolution >= 3".into(),
            ));
        }
        Ok(Self {
            lambda_bvp,
            alpha,
            grid_n,
            rule,
            nonlinearity,
        })
    }

    pub fn lambda_bvp(&self) -> f64 {
        self.lambda_bvp
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

impl<F: Fn(f64, f64) -> f64> GridOperator for PeriodicBVPOperator<F> {
    fn apply(&self, u: &GridFunction) -> Result<GridFunction, Error> {
        if u.n() != self.grid_n {
            return Err(Error::GridMismatch {
                left: self.grid_n,
                right: u.n(),
            });
        }
        let n = self.grid_n;
        let mut w = Vec::with_capacity(n + 1);
        for i in 0..=n {
            let t = i as f64 / n as f64;
            let ui = u.values()[i];
            let wi = (self.nonlinearity)(t, ui) + self.lambda_bvp * ui;
            if !wi.is_finite() {
                return Err(Error::Domain(format!(
                    "nonlinearity produced a non-finite value at node {i}"
                )));
            }
            w.push(wi);
        }
        let out = match self.rule {
            KernelRule::SplitAtDiagonal => split_kernel_apply(self.lambda_bvp, &w),
            KernelRule::NaiveSimpson => naive_kernel_apply(self.lambda_bvp, &w)?,
        };
        GridFunction::new(out)
    }

    fn grid_n(&self) -> usize {
        self.grid_n
    }

    fn residual_allowance(&self) -> f64 {
        let h = 1.0 / self.grid_n as f64;
        let lam = self.lambda_bvp;
        match self.rule {
            KernelRule::SplitAtDiagonal => {
                11.0 / 720.0 * h.powi(4) * lam.powi(3) * (lam.exp() / lam.exp_m1()) * 4.0
            }
            KernelRule::NaiveSimpson => h * (1.0 + lam),
        }
    }
}

// ---------------------------------------------------------------------------
// Hypothesis checker for the periodic problem
// ---------------------------------------------------------------------------

/// Seeded generator of scalar triples `(t, x, y)` with `x > y`. Gaps are
/// drawn log-uniformly so that the small-gap regime is exercised.
#[derive(Debug, Clone)]
pub struct TripleSampler {
    pub count: usize,
    pub seed: u64,
    pub gap_min: f64,
    pub gap_max: f64,
    pub base_min: f64,
    pub base_max: f64,
}

impl TripleSampler {
    pub fn new(count: usize, seed: u64) -> Self {
        Self {
            count,
            seed,
            gap_min: 1e-6,
            gap_max: 10.0,
            base_min: -2.0,
            base_max: 2.0,
        }
    }

    pub fn generate(&self) -> Vec<(f64, f64, f64)> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let log_lo = self.gap_min.ln();
        let log_hi = self.gap_max.ln();
        (0..self.count)
            .map(|_| {
                let t = rng.gen_range(0.0..=1.0);
                let y = rng.gen_range(self.base_min..=self.base_max);
                let gap = rng.gen_range(log_lo..=log_hi).exp();
                (t, y + gap, y)
            })
            .collect()
    }
}

/// Checks the periodic-problem hypothesis on sampled triples `(t, x, y)`
/// with `x > y`: writing `h(z) = F(t, z) + lambda z` and `d = x - y`,
/// both `0 <= h(y) - h(x)` and `h(y) - h(x) <= alpha * d^2 * ln(1 + 1/d)`
/// must hold (the bound is `alpha * d * f(d)` with the logarithmic modulus).
pub fn check_periodic_hypothesis(
    nonlinearity: &impl Fn(f64, f64) -> f64,
    lambda_bvp: f64,
    alpha: f64,
    triples: &[(f64, f64, f64)],
) -> Result<ConditionReport, Error> {
    validate_bvp_rate(lambda_bvp)?;
    if !alpha.is_finite() || alpha <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "alpha must be positive, got {alpha}"
        )));
    }
    let modulus = Modulus::logarithmic();
    let tol = DEFAULT_ORDER_TOL;
    let mut tested = 0usize;
    let mut passed = 0usize;
    let mut worst_ratio = 0.0f64;
    let mut worst: Option<ConditionWitness> = None;
    for (index, &(t, x, y)) in triples.iter().enumerate() {
        if x.is_nan() || y.is_nan() || x <= y {
            return Err(Error::IncomparablePair { index });
        }
        let d = x - y;
        let h_y = nonlinearity(t, y) + lambda_bvp * y;
        let h_x = nonlinearity(t, x) + lambda_bvp * x;
        let diff = h_y - h_x;
        let bound = alpha * d * modulus.eval(d)?;
        // lower side: 0 <= diff, recast as -diff <= 0 + tol
        let ratio_low = -diff / tol;
        let ratio_up = diff / (bound + tol);
        let (ratio, lhs, rhs) = if ratio_low >= ratio_up {
            (ratio_low, -diff, 0.0)
        } else {
            (ratio_up, diff, bound)
        };
        tested += 1;
        if ratio <= 1.0 {
            passed += 1;
        }
        if ratio > worst_ratio {
            worst_ratio = ratio;
            worst = Some(ConditionWitness {
                pair_index: index,
                node_index: 0,
                gap: d,
                lhs,
                rhs,
            });
        }
    }
    let failed = passed < tested;
    Ok(ConditionReport {
        pairs_tested: tested,
        pairs_passed: passed,
        worst_ratio,
        witness: if failed { worst } else { None },
    })
}

/// Defect of `u` as a solution of `u' = F(t, u)` with `u(0) = u(1)`:
/// the max over interior nodes of the central-difference residual,
/// combined (by max) with the periodicity defect `|u(0) - u(1)|`.
pub fn ode_residual(u: &GridFunction, nonlinearity: &impl Fn(f64, f64) -> f64) -> f64 {
    let n = u.n();
    let h = 1.0 / n as f64;
    let vals = u.values();
    let mut worst = (vals[0] - vals[n]).abs();
    for i in 1..n {
        let t = i as f64 * h;
        let deriv = (vals[i + 1] - vals[i - 1]) / (2.0 * h);
        worst = worst.max((deriv - nonlinearity(t, vals[i])).abs());
    }
    worst
}

// ---------------------------------------------------------------------------
// Small reference operators
// ---------------------------------------------------------------------------

/// Maps every input to a fixed image.
#[derive(Debug, Clone)]
pub struct ConstantOperator {
    image: GridFunction,
}

impl ConstantOperator {
    pub fn new(image: GridFunction) -> Self {
        Self { image }
    }
}

impl GridOperator for ConstantOperator {
    fn apply(&self, u: &GridFunction) -> Result<GridFunction, Error> {
        if u.n() != self.image.n() {
            return Err(Error::GridMismatch {
                left: self.image.n(),
                right: u.n(),
            });
        }
        Ok(self.image.clone())
    }

    fn grid_n(&self) -> usize {
        self.image.n()
    }
}

/// Multiplies every node value by a fixed factor. Decreasing for negative
/// factors; `A(u) = -2u` is the standard non-contracting negative control.
#[derive(Debug, Clone)]
pub struct ScaleOperator {
    factor: f64,
    grid_n: usize,
}

impl ScaleOperator {
    pub fn new(factor: f64, grid_n: usize) -> Result<Self, Error> {
        if !factor.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "scale factor must be finite, got {factor}"
            )));
        }
        if grid_n < 1 {
            return Err(Error::InvalidGrid("resolution must be at least 1".into()));
        }
        Ok(Self { factor, grid_n })
    }
}

impl GridOperator for ScaleOperator {
    fn apply(&self, u: &GridFunction) -> Result<GridFunction, Error> {
        if u.n() != self.grid_n {
            return Err(Error::GridMismatch {
                left: self.grid_n,
                right: u.n(),
            });
        }
        GridFunction::new(u.values().iter().map(|x| self.factor * x).collect())
    }

    fn grid_n(&self) -> usize {
        self.grid_n
    }
}
