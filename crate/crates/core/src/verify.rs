//! Self-check suite behind the `verify` command: closed-form AdamW oracles,
//! the predictor oracle, the `s = 0` collapse, gradient checks and the
//! zero-decay probe identity. Each check reports pass/fail with a detail line.

use std::fmt;
use std::str::FromStr;

use crate::controller::{run_training, Mode, TrainPlan};
use crate::data::{gen_blobs, Batch, Order};
use crate::harness::approximation_probe;
use crate::models::{
    finite_difference_gradient, max_relative_error, LogisticRegression, Mlp, Model,
};
use crate::numerics::ParamVec;
use crate::optim::{adamw_step, predict_weights, AdamWConfig, AdamWState};
use crate::{Error, Result};

/// A deliberate defect injected into the update rule, to show the checks catch it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fault {
    /// `γ·m̂ / √(v̂ + ε)` instead of `γ·m̂ / (√v̂ + ε)`.
    EpsInsideSqrt,
}

impl FromStr for Fault {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        match text {
            "eps-inside-sqrt" => Ok(Fault::EpsInsideSqrt),
            other => Err(Error::Config(format!(
                "unknown fault {other:?}; expected eps-inside-sqrt"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{verdict} {:<28} {}", self.name, self.detail)
    }
}

fn outcome(name: &'static str, result: Result<(bool, String)>) -> CheckOutcome {
    match result {
        Ok((passed, detail)) => CheckOutcome {
            name,
            passed,
            detail,
        },
        Err(e) => CheckOutcome {
            name,
            passed: false,
            detail: format!("error: {e}"),
        },
    }
}

/// Runs every check; `fault` swaps the update rule for a defective one.
pub fn run_checks(fault: Option<Fault>) -> Vec<CheckOutcome> {
    vec![
        outcome("adamw-closed-form", adamw_oracles(fault)),
        outcome("predictor-closed-form", predictor_oracle()),
        outcome("s0-equals-baseline", s0_collapse()),
        outcome("gradient-check-logreg", gradient_check_logreg()),
        outcome("gradient-check-mlp", gradient_check_mlp()),
        outcome("zero-decay-sum-identity", probe_identity()),
    ]
}

pub fn all_passed(outcomes: &[CheckOutcome]) -> bool {
    outcomes.iter().all(|o| o.passed)
}

fn pv(values: &[f64]) -> Result<ParamVec<f64>> {
    ParamVec::new(values.to_vec())
}

fn step_with(
    fault: Option<Fault>,
    params: &ParamVec<f64>,
    state: &AdamWState<f64>,
    g: &ParamVec<f64>,
    config: &AdamWConfig<f64>,
) -> Result<ParamVec<f64>> {
    match fault {
        None => Ok(adamw_step(params, state, g, config)?.0),
        Some(Fault::EpsInsideSqrt) => {
            let next = state.update_moments(g, config)?;
            let moments = next.bias_correct(config)?;
            let values = params
                .as_slice()
                .iter()
                .zip(
                    moments
                        .m_hat
                        .as_slice()
                        .iter()
                        .zip(moments.v_hat.as_slice()),
                )
                .map(|(&p, (&m, &v))| {
                    (1.0 - config.gamma * config.lambda) * p
                        - config.gamma * m / (v + config.eps).sqrt()
                })
                .collect();
            ParamVec::new(values)
        }
    }
}

/// First-step updates from zero moments, where `m̂ = g` and `v̂ = g²`.
fn adamw_oracles(fault: Option<Fault>) -> Result<(bool, String)> {
    let eps = 1e-8;
    let cases: [(&str, f64, f64, f64, f64); 4] = [
        ("λ=0", 1.0, 1.0, 0.0, 1.0 - 0.1 / (1.0 + eps)),
        ("λ=0.1", 1.0, 1.0, 0.1, 0.99 - 0.1 / (1.0 + eps)),
        ("zero gradient", 5.0, 0.0, 0.0, 5.0),
        (
            "ε placement",
            1.0,
            1e-6,
            0.0,
            1.0 - 0.1 * (1e-6 / (1e-6 + eps)),
        ),
    ];
    let mut worst = 0.0f64;
    let mut failed = Vec::new();
    for (label, theta0, g, lambda, expected) in cases {
        let config = AdamWConfig::with_gamma(0.1).with_lambda(lambda);
        let theta = step_with(
            fault,
            &pv(&[theta0])?,
            &AdamWState::new(1),
            &pv(&[g])?,
            &config,
        )?;
        let err = (theta.as_slice()[0] - expected).abs();
        worst = worst.max(err);
        if err > 1e-15 {
            failed.push(format!(
                "{label}: got {:.17}, want {expected:.17}",
                theta.as_slice()[0]
            ));
        }
    }
    if failed.is_empty() {
        Ok((true, format!("4 cases, max error {worst:.1e}")))
    } else {
        Ok((false, failed.join("; ")))
    }
}

/// After one step from `θ = 1` with `g = 1`, `λ = 0`: `θ₁ = 1 − u` and the 2-step prediction is `θ₁ − 2u`.
fn predictor_oracle() -> Result<(bool, String)> {
    let config = AdamWConfig::with_gamma(0.1).with_lambda(0.0);
    let (theta, state) = adamw_step(&pv(&[1.0])?, &AdamWState::new(1), &pv(&[1.0])?, &config)?;
    let u = 0.1 / (1.0 + 1e-8);
    let predicted = predict_weights(&theta, &state, &config.with_s(2))?;
    let expected = (1.0 - u) - 2.0 * u;
    let err = (predicted.as_slice()[0] - expected).abs();
    let unchanged = predict_weights(&theta, &state, &config.with_s(0))?.bitwise_eq(&theta);
    Ok((
        err <= 1e-15 && unchanged,
        format!("error {err:.1e}, s=0 identity {unchanged}"),
    ))
}

fn blobs_mlp() -> Result<(crate::data::Dataset<f64>, Mlp<f64>)> {
    let data = gen_blobs(3, 20, 4, 0.6, 11)?;
    let model = Mlp::init(&[4, 8, 3], 5)?;
    Ok((data, model))
}

fn s0_collapse() -> Result<(bool, String)> {
    let (data, start) = blobs_mlp()?;
    let config = AdamWConfig::with_gamma(0.01);
    let run = |mode| -> Result<_> {
        let mut model = start.clone();
        let plan = TrainPlan::new(mode, 3, 8, 2);
        let run = run_training(&plan, &mut model, &config, &data, None)?;
        Ok((run.epochs, model))
    };
    let (base_epochs, base) = run(Mode::Baseline)?;
    let (pred_epochs, pred) = run(Mode::Predictive)?;
    let same = base.params().bitwise_eq(pred.params()) && base_epochs == pred_epochs;
    Ok((
        same,
        format!(
            "{} parameters after 3 epochs, bitwise equal {same}",
            base.params().len()
        ),
    ))
}

fn gradient_check<M: Model<f64>>(
    model: &mut M,
    batch: &Batch<f64>,
    tolerance: f64,
) -> Result<(bool, String)> {
    let (_, analytic) = model.loss_and_grad(batch)?;
    let numeric = finite_difference_gradient(model, batch, 1e-6)?;
    let err = max_relative_error(&analytic, &numeric)?;
    Ok((
        err <= tolerance,
        format!("max relative error {err:.2e} (tolerance {tolerance:.0e})"),
    ))
}

fn gradient_check_logreg() -> Result<(bool, String)> {
    let data = gen_blobs(3, 10, 5, 0.8, 3)?;
    let mut model = LogisticRegression::init(3, 5, 9)?;
    gradient_check(&mut model, &data.as_batch()?, 1e-6)
}

fn gradient_check_mlp() -> Result<(bool, String)> {
    let (data, mut model) = blobs_mlp()?;
    gradient_check(&mut model, &data.as_batch()?, 1e-5)
}

fn probe_identity() -> Result<(bool, String)> {
    let data = gen_blobs(2, 16, 3, 1.0, 4)?;
    let stream = data.batches(8, Order::Shuffled { seed: 1, epoch: 1 })?;
    let mut model = LogisticRegression::init(2, 3, 3)?;
    let config = AdamWConfig::with_gamma(0.05).with_lambda(0.0);
    let report = approximation_probe(&mut model, &stream, &config, 3, 30)?;
    let worst = report.rows.iter().map(|r| r.sum_error).fold(0.0, f64::max);
    Ok((
        worst == 0.0,
        format!("{} probes, max deviation {worst:.1e}", report.rows.len()),
    ))
}
