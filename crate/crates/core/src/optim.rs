//! AdamW with decoupled weight decay and the s-step weight predictor.
//!
//! One update, for step `t ≥ 1` with gradient `g_t` taken at `θ_{t−1}`:
//!
//! ```text
//! m_t = β1·m_{t−1} + (1−β1)·g_t
//! v_t = β2·v_{t−1} + (1−β2)·g_t²
//! m̂_t = m_t / (1−β1^t)        v̂_t = v_t / (1−β2^t)
//! θ_t = (1−γλ)·θ_{t−1} − γ·m̂_t / (√v̂_t + ε)
//! ```
//!
//! The predictor extrapolates the latest realized direction `s` times:
//! `θ̂_{t+s} = θ_t − s·γ·m̂_t / (√v̂_t + ε)`. The moments are the ones already
//! held in the state, because the gradient that would define `m_{t+1}` is the
//! one the predicted weights are about to produce.

use serde::{Deserialize, Serialize};

use crate::numerics::{GradVec, ParamVec};
use crate::{Error, Result, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(
    default,
    deny_unknown_fields,
    bound(deserialize = "T: Scalar + Deserialize<'de>")
)]
pub struct AdamWConfig<T> {
    /// Learning rate γ.
    pub gamma: T,
    pub beta1: T,
    pub beta2: T,
    pub eps: T,
    /// Decoupled weight decay λ.
    pub lambda: T,
    /// Number of future updates the predictor extrapolates.
    pub s: u32,
}

impl<T: Scalar> AdamWConfig<T> {
    pub const DEFAULT_GAMMA: f64 = 1e-3;
    pub const DEFAULT_BETA1: f64 = 0.9;
    pub const DEFAULT_BETA2: f64 = 0.999;
    pub const DEFAULT_EPS: f64 = 1e-8;
    pub const DEFAULT_LAMBDA: f64 = 5e-4;

    /// Default moments, ε and λ with the given learning rate and no prediction.
    pub fn with_gamma(gamma: T) -> Self {
        AdamWConfig {
            gamma,
            ..Self::default()
        }
    }

    pub fn with_s(self, s: u32) -> Self {
        AdamWConfig { s, ..self }
    }

    pub fn with_lambda(self, lambda: T) -> Self {
        AdamWConfig { lambda, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let zero = T::zero();
        let one = T::one();
        let mut problems = Vec::new();
        if !(self.gamma > zero && self.gamma.is_finite()) {
            problems.push(format!("gamma must be > 0 (got {})", self.gamma));
        }
        if !(self.beta1 >= zero && self.beta1 < one) {
            problems.push(format!("beta1 must be in [0, 1) (got {})", self.beta1));
        }
        if !(self.beta2 >= zero && self.beta2 < one) {
            problems.push(format!("beta2 must be in [0, 1) (got {})", self.beta2));
        }
        if !(self.eps > zero && self.eps.is_finite()) {
            problems.push(format!("eps must be > 0 (got {})", self.eps));
        }
        if !(self.lambda >= zero && self.lambda.is_finite()) {
            problems.push(format!("lambda must be >= 0 (got {})", self.lambda));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems.join("; ")))
        }
    }
}

impl<T: Scalar> Default for AdamWConfig<T> {
    fn default() -> Self {
        AdamWConfig {
            gamma: T::lit(Self::DEFAULT_GAMMA),
            beta1: T::lit(Self::DEFAULT_BETA1),
            beta2: T::lit(Self::DEFAULT_BETA2),
            eps: T::lit(Self::DEFAULT_EPS),
            lambda: T::lit(Self::DEFAULT_LAMBDA),
            s: 0,
        }
    }
}

/// Step counter and moment estimates. `t` counts applied updates.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamWState<T> {
    t: u64,
    m: ParamVec<T>,
    v: ParamVec<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BiasCorrectedMoments<T> {
    pub m_hat: ParamVec<T>,
    pub v_hat: ParamVec<T>,
}

impl<T: Scalar> AdamWState<T> {
    /// Fresh state: `t = 0`, zero moments.
    pub fn new(param_count: usize) -> Self {
        AdamWState {
            t: 0,
            m: ParamVec::zeros(param_count),
            v: ParamVec::zeros(param_count),
        }
    }

    /// Rebuilds a state from stored parts, checking its invariants.
    pub fn from_parts(t: u64, m: ParamVec<T>, v: ParamVec<T>) -> Result<Self> {
        if m.len() != v.len() {
            return Err(Error::Dimension {
                expected: m.len(),
                found: v.len(),
            });
        }
        if let Some(i) = v.as_slice().iter().position(|&x| x < T::zero()) {
            return Err(Error::Invariant(format!(
                "second moment entry {i} is negative"
            )));
        }
        if t == 0 && (m.max_abs() != T::zero() || v.max_abs() != T::zero()) {
            return Err(Error::Invariant(
                "a state at t = 0 must have zero moments".into(),
            ));
        }
        Ok(AdamWState { t, m, v })
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn m(&self) -> &ParamVec<T> {
        &self.m
    }

    pub fn v(&self) -> &ParamVec<T> {
        &self.v
    }

    pub fn len(&self) -> usize {
        self.m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m.is_empty()
    }

    /// Folds one gradient into both moment estimates and advances `t`.
    pub fn update_moments(&self, g: &GradVec<T>, config: &AdamWConfig<T>) -> Result<Self> {
        if g.len() != self.len() {
            return Err(Error::Dimension {
                expected: self.len(),
                found: g.len(),
            });
        }
        let one = T::one();
        let m = self.m.combine(g, config.beta1, one - config.beta1)?;
        let v = self
            .v
            .combine(&g.squared()?, config.beta2, one - config.beta2)?;
        Ok(AdamWState {
            t: self.t + 1,
            m,
            v,
        })
    }

    /// `m / (1 − β1^t)` and `v / (1 − β2^t)` at the state's own `t`.
    pub fn bias_correct(&self, config: &AdamWConfig<T>) -> Result<BiasCorrectedMoments<T>> {
        if self.t == 0 {
            return Err(Error::Precondition(
                "bias correction is undefined before the first update (t = 0)".into(),
            ));
        }
        let one = T::one();
        Ok(BiasCorrectedMoments {
            m_hat: self.m.divide_by(one - power(config.beta1, self.t))?,
            v_hat: self.v.divide_by(one - power(config.beta2, self.t))?,
        })
    }

    /// `m̂_t / (√v̂_t + ε)` for the current state.
    pub fn direction(&self, config: &AdamWConfig<T>) -> Result<ParamVec<T>> {
        let BiasCorrectedMoments { m_hat, v_hat } = self.bias_correct(config)?;
        ParamVec::adam_direction(&m_hat, &v_hat, config.eps)
    }
}

fn power<T: Scalar>(base: T, exponent: u64) -> T {
    match i32::try_from(exponent) {
        Ok(e) => base.powi(e),
        Err(_) => base.powf(T::from_u64(exponent).unwrap_or_else(T::max_value)),
    }
}

fn check_lengths<T: Scalar>(params: &ParamVec<T>, state: &AdamWState<T>) -> Result<()> {
    if params.len() != state.len() {
        return Err(Error::Dimension {
            expected: state.len(),
            found: params.len(),
        });
    }
    Ok(())
}

fn as_divergence(step: u64) -> impl FnOnce(Error) -> Error {
    move |e| match e {
        Error::NonFinite { context, index } => Error::Divergence {
            step,
            reason: format!("non-finite {context} at index {index}"),
        },
        other => other,
    }
}

/// One AdamW update: moments, then bias correction, then the decayed step.
pub fn adamw_step<T: Scalar>(
    params: &ParamVec<T>,
    state: &AdamWState<T>,
    g: &GradVec<T>,
    config: &AdamWConfig<T>,
) -> Result<(ParamVec<T>, AdamWState<T>)> {
    check_lengths(params, state)?;
    let step = state.t + 1;
    let next = state
        .update_moments(g, config)
        .map_err(as_divergence(step))?;
    let direction = next.direction(config).map_err(as_divergence(step))?;
    let decay = T::one() - config.gamma * config.lambda;
    let updated = params
        .combine(&direction, decay, -config.gamma)
        .map_err(as_divergence(step))?;
    Ok((updated, next))
}

/// Adam with λ folded into the gradient as an L2 term (`g + λθ`) and no decoupled decay.
///
/// Only used as a comparison baseline.
pub fn plain_adam_step<T: Scalar>(
    params: &ParamVec<T>,
    state: &AdamWState<T>,
    g: &GradVec<T>,
    config: &AdamWConfig<T>,
) -> Result<(ParamVec<T>, AdamWState<T>)> {
    check_lengths(params, state)?;
    let step = state.t + 1;
    let regularized = g
        .combine(params, T::one(), config.lambda)
        .map_err(as_divergence(step))?;
    let next = state
        .update_moments(&regularized, config)
        .map_err(as_divergence(step))?;
    let direction = next.direction(config).map_err(as_divergence(step))?;
    let updated = params
        .combine(&direction, T::one(), -config.gamma)
        .map_err(as_divergence(step))?;
    Ok((updated, next))
}

/// Weights `config.s` updates ahead: `θ − s·γ·m̂_t / (√v̂_t + ε)`.
///
/// Returns a copy of `params` when `s = 0` or when the state has no history (`t = 0`).
pub fn predict_weights<T: Scalar>(
    params: &ParamVec<T>,
    state: &AdamWState<T>,
    config: &AdamWConfig<T>,
) -> Result<ParamVec<T>> {
    check_lengths(params, state)?;
    if config.s == 0 || state.t == 0 {
        return Ok(params.snapshot());
    }
    let direction = state.direction(config)?;
    let reach = T::from_u32(config.s).expect("u32 fits in a float") * config.gamma;
    params.combine(&direction, T::one(), -reach)
}
