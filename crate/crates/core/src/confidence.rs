//! Time-uniform confidence radii and the sample-complexity calculators built
//! on them.
//!
//! The statistical radius for an arm sampled `n` times, with failure budget
//! `delta` split evenly over `M` arms, is
//!
//! ```text
//! u_stat(n) = c * sqrt( 2 sigma^2 ln(pi^2 n^2 M / (3 delta)) / n )
//! ```
//!
//! and the bias-shielded radius is `u_dist(n) = u_stat(n) + L`. The factor
//! `c` (`radius_factor`) scales the statistical part only; the bias shield is
//! never scaled.

use std::f64::consts::{E, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lambert::lambert_w_m1;

/// Largest integer sample count the solvers will report.
const MAX_EXACT: u64 = 1 << 53;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfidenceConfig {
    /// Sub-Gaussian noise scale.
    pub sigma: f64,
    /// Failure probability.
    pub delta: f64,
    /// Suboptimality tolerance.
    #[serde(default)]
    pub epsilon: f64,
    /// Bound on the systematic bias of any observation mean.
    #[serde(default)]
    pub bias_bound: f64,
    /// Multiplier on the statistical radius.
    #[serde(default = "default_radius_factor")]
    pub radius_factor: f64,
}

fn default_radius_factor() -> f64 {
    1.0
}

impl ConfidenceConfig {
    pub fn new(sigma: f64, delta: f64) -> Self {
        ConfidenceConfig {
            sigma,
            delta,
            epsilon: 0.0,
            bias_bound: 0.0,
            radius_factor: 1.0,
        }
    }

    pub fn with_bias(mut self, bias_bound: f64) -> Self {
        self.bias_bound = bias_bound;
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_radius_factor(mut self, radius_factor: f64) -> Self {
        self.radius_factor = radius_factor;
        self
    }

    /// Checks the parameter ranges. A zero `sigma` is accepted and models
    /// noiseless observations.
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::invalid("sigma", "must be finite and non-negative"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::invalid("delta", "must lie in (0, 1)"));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::invalid("epsilon", "must be finite and non-negative"));
        }
        if !(self.bias_bound >= 0.0 && self.bias_bound.is_finite()) {
            return Err(Error::invalid(
                "bias_bound",
                "must be finite and non-negative",
            ));
        }
        if !(self.radius_factor > 0.0 && self.radius_factor.is_finite()) {
            return Err(Error::invalid(
                "radius_factor",
                "must be finite and positive",
            ));
        }
        Ok(())
    }

    /// `pi^2 M / (3 delta)`, the constant inside the radius logarithm.
    pub fn log_constant(&self, m_count: usize) -> f64 {
        PI * PI * m_count as f64 / (3.0 * self.delta)
    }

    /// Statistical radius without argument validation. Used on hot paths
    /// where the engine has already validated its configuration.
    #[inline]
    pub fn stat_radius(&self, n: u64, m_count: usize) -> f64 {
        let n = n as f64;
        let log_term = (self.log_constant(m_count) * n * n).ln();
        self.radius_factor * (2.0 * self.sigma * self.sigma * log_term / n).sqrt()
    }
}

/// Inputs to the upper-bound calculators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexityInputs {
    pub gap: f64,
    pub frontier_size: usize,
    pub config: ConfidenceConfig,
}

impl ComplexityInputs {
    pub fn new(gap: f64, frontier_size: usize, config: ConfidenceConfig) -> Self {
        ComplexityInputs {
            gap,
            frontier_size,
            config,
        }
    }

    /// `gap - 4L`. May be non-positive.
    pub fn effective_gap(&self) -> f64 {
        self.gap - 4.0 * self.config.bias_bound
    }

    /// `gap - 4L - epsilon`, the margin the pruning radii must fit into.
    pub fn separation_margin(&self) -> f64 {
        self.effective_gap() - self.config.epsilon
    }

    fn validate(&self) -> Result<()> {
        self.config.validate()?;
        if !(self.gap > 0.0 && self.gap.is_finite()) {
            return Err(Error::invalid("gap", "must be finite and positive"));
        }
        if self.frontier_size < 2 {
            return Err(Error::invalid("frontier_size", "must be at least 2"));
        }
        Ok(())
    }

    /// `C1 = pi^2 M / (3 delta)`.
    pub fn c1(&self) -> f64 {
        self.config.log_constant(self.frontier_size)
    }

    /// `C2 = 32 c^2 sigma^2 / (gap - 4L - epsilon)^2`.
    pub fn c2(&self) -> f64 {
        let margin = self.separation_margin();
        let scale = self.config.radius_factor * self.config.sigma;
        32.0 * scale * scale / (margin * margin)
    }

    /// First sample count from which `u_stat` is non-increasing.
    pub fn monotone_from(&self) -> u64 {
        monotone_from(self.c1())
    }
}

pub(crate) fn monotone_from(c1: f64) -> u64 {
    // d/dn [ln(C1 n^2) / n] <= 0 iff C1 n^2 >= e^2.
    ((E / c1.sqrt()).ceil() as u64).max(1)
}

/// Outcome of an upper-bound calculation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleBound {
    Finite(u64),
    /// `gap - 4L <= epsilon`: no sample count guarantees safe separation.
    Infeasible,
}

impl SampleBound {
    pub fn finite(self) -> Option<u64> {
        match self {
            SampleBound::Finite(n) => Some(n),
            SampleBound::Infeasible => None,
        }
    }
}

/// Outcome of the lower-bound calculation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LowerBound {
    Finite(f64),
    /// `gap + epsilon - 2L <= 0`: bias can make the suboptimal arm look optimal.
    GapReversed,
}

impl LowerBound {
    pub fn finite(self) -> Option<f64> {
        match self {
            LowerBound::Finite(v) => Some(v),
            LowerBound::GapReversed => None,
        }
    }
}

/// Statistical confidence radius for an arm with `n` samples in a frontier of
/// `m_count` arms.
pub fn u_stat(n: u64, m_count: usize, config: &ConfidenceConfig) -> Result<f64> {
    config.validate()?;
    if n == 0 {
        return Err(Error::ZeroSamples);
    }
    if m_count == 0 {
        return Err(Error::invalid("m_count", "must be at least 1"));
    }
    Ok(config.stat_radius(n, m_count))
}

/// Bias-shielded radius `u_stat + L`.
pub fn u_dist(n: u64, m_count: usize, config: &ConfidenceConfig) -> Result<f64> {
    Ok(u_stat(n, m_count, config)? + config.bias_bound)
}

/// Smallest `n` (on the monotone tail of `u_stat`) with
/// `4 u_stat(n) < gap - 4L - epsilon`, found by doubling then bisection.
pub fn sample_complexity_upper(inputs: &ComplexityInputs) -> Result<SampleBound> {
    inputs.validate()?;
    let margin = inputs.separation_margin();
    if margin <= 0.0 {
        return Ok(SampleBound::Infeasible);
    }
    let c1 = inputs.c1();
    if c1 <= 1.0 {
        return Err(Error::invalid("delta", "log constant must exceed 1"));
    }
    let config = inputs.config;
    let m_count = inputs.frontier_size;
    let separated = |n: u64| 4.0 * config.stat_radius(n, m_count) < margin;

    let start = monotone_from(c1);
    if separated(start) {
        return Ok(SampleBound::Finite(start));
    }
    let mut lo = start;
    let mut hi = start.saturating_mul(2);
    while !separated(hi) {
        if hi >= MAX_EXACT {
            return Err(Error::ComplexityOverflow);
        }
        lo = hi;
        hi = hi.saturating_mul(2);
    }
    // Invariant: !separated(lo) && separated(hi).
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if separated(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(SampleBound::Finite(hi))
}

/// Closed-form inversion of `n / ln(C1 n^2) > C2`:
/// `n = ceil(-2 C2 W_-1(-1 / (2 C2 sqrt(C1))))`.
pub fn sample_complexity_lambert(inputs: &ComplexityInputs) -> Result<SampleBound> {
    inputs.validate()?;
    if inputs.separation_margin() <= 0.0 {
        return Ok(SampleBound::Infeasible);
    }
    let c1 = inputs.c1();
    let c2 = inputs.c2();
    let arg = -1.0 / (2.0 * c2 * c1.sqrt());
    let w = lambert_w_m1(arg)?;
    let n = (-2.0 * c2 * w).ceil();
    if !(n < MAX_EXACT as f64) {
        return Err(Error::ComplexityOverflow);
    }
    Ok(SampleBound::Finite((n as u64).max(1)))
}

/// Expected-sample lower bound for distinguishing one arm at gap `gap`:
/// `2 sigma^2 ln(1 / 4 delta) / (gap + epsilon - 2L)^2`.
pub fn lower_bound_samples(gap: f64, config: &ConfidenceConfig) -> Result<LowerBound> {
    config.validate()?;
    if !gap.is_finite() {
        return Err(Error::invalid("gap", "must be finite"));
    }
    let distance = gap + config.epsilon - 2.0 * config.bias_bound;
    if distance <= 0.0 {
        return Ok(LowerBound::GapReversed);
    }
    let log_term = (1.0 / (4.0 * config.delta)).ln();
    if log_term <= 0.0 {
        return Ok(LowerBound::Finite(0.0));
    }
    Ok(LowerBound::Finite(
        2.0 * config.sigma * config.sigma * log_term / (distance * distance),
    ))
}

/// Worst-case suboptimality of the returned arm, `4L + epsilon`.
pub fn graceful_degradation_cap(config: &ConfidenceConfig) -> f64 {
    4.0 * config.bias_bound + config.epsilon
}
