//! Observer that measures how well two cheap approximations track the true
//! AdamW trajectory `s` steps ahead.
//!
//! At each checkpoint `t` along a baseline trajectory, for every `s` in `1..=s_max`:
//!
//! - **true**: `s` genuine AdamW steps from `(θ_t, state_t)` on the upcoming batches
//! - **summed**: `θ_t − Σ γ·m̂_i/(√v̂_i + ε)` over those same steps, i.e. the true
//!   trajectory with only the `γλ·θ` decay coupling dropped
//! - **extrapolated**: the weight predictor, `θ_t − s·γ·m̂_t/(√v̂_t + ε)`
//!
//! The summed form is accumulated step by step in the same order as the true
//! trajectory, so with `λ = 0` it reproduces it bit for bit. All lookahead
//! work happens on copies; the observed trajectory is not perturbed.

use crate::controller::train_step_baseline;
use crate::data::Batch;
use crate::models::Model;
use crate::optim::{predict_weights, AdamWConfig, AdamWState};
use crate::{Error, Result, Scalar};

#[derive(Clone, Debug, PartialEq)]
pub struct ProbeRow<T> {
    /// Number of updates applied before the lookahead started.
    pub checkpoint: u64,
    pub s: u32,
    /// `max |summed − true|`.
    pub sum_error: T,
    /// `max |extrapolated − true|`.
    pub extrapolation_error: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProbeReport<T> {
    pub rows: Vec<ProbeRow<T>>,
    /// Updates applied to the observed trajectory.
    pub steps: u64,
}

/// First step, middle and last step of the horizon, deduplicated.
pub fn probe_checkpoints(horizon: u64) -> Vec<u64> {
    let mut points = vec![1, horizon.div_ceil(2).max(1), horizon];
    points.dedup();
    points
}

fn batch_for(stream: &[impl Sized], step: u64) -> usize {
    ((step - 1) % stream.len() as u64) as usize
}

/// Runs `horizon` baseline AdamW steps on `model`, consuming `stream`
/// cyclically (step `k` uses `stream[(k − 1) mod len]`), and probes at
/// [`probe_checkpoints`]. `model` ends at the trajectory's final weights.
pub fn approximation_probe<T: Scalar, M: Model<T> + Clone>(
    model: &mut M,
    stream: &[Batch<T>],
    config: &AdamWConfig<T>,
    s_max: u32,
    horizon: u64,
) -> Result<ProbeReport<T>> {
    if s_max == 0 || horizon < u64::from(s_max) {
        return Err(Error::Precondition(format!(
            "the probe needs horizon >= s_max >= 1 (got horizon {horizon}, s_max {s_max})"
        )));
    }
    if stream.is_empty() {
        return Err(Error::Precondition(
            "the probe needs at least one batch".into(),
        ));
    }
    config.validate()?;
    let checkpoints = probe_checkpoints(horizon);
    let mut state = AdamWState::new(model.params().len());
    let mut rows = Vec::new();

    for step in 1..=horizon {
        train_step_baseline(model, &stream[batch_for(stream, step)], &mut state, config)?;
        if checkpoints.contains(&step) {
            for s in 1..=s_max {
                rows.push(lookahead(model, &state, stream, config, s)?);
            }
        }
    }
    Ok(ProbeReport {
        rows,
        steps: state.t(),
    })
}

fn lookahead<T: Scalar, M: Model<T> + Clone>(
    model: &M,
    state: &AdamWState<T>,
    stream: &[Batch<T>],
    config: &AdamWConfig<T>,
    s: u32,
) -> Result<ProbeRow<T>> {
    let start = model.params().snapshot();
    let extrapolated = predict_weights(&start, state, &config.with_s(s))?;

    let mut ahead = model.clone();
    let mut ahead_state = state.clone();
    let mut summed = start.snapshot();
    for _ in 0..s {
        let step = ahead_state.t() + 1;
        train_step_baseline(
            &mut ahead,
            &stream[batch_for(stream, step)],
            &mut ahead_state,
            config,
        )?;
        let direction = ahead_state.direction(config)?;
        summed = summed.combine(&direction, T::one(), -config.gamma)?;
    }
    let truth = ahead.params();
    Ok(ProbeRow {
        checkpoint: state.t(),
        s,
        sum_error: summed.max_abs_diff(truth)?,
        extrapolation_error: extrapolated.max_abs_diff(truth)?,
    })
}
