//! Training steps and the epoch loop.
//!
//! A predictive step evaluates the gradient at predicted weights and applies
//! it to the cached current weights:
//!
//! 1. cache the current weights
//! 2. predict the weights `s` updates ahead
//! 3. forward and backward pass at the predicted weights
//! 4. restore the cached weights
//! 5. AdamW update of the cached weights with the gradient from 3
//!
//! If any stage fails the model is left holding the cached weights and the
//! optimizer state is untouched, so `t` keeps counting applied updates only.

use crate::data::{Batch, Dataset, Order};
use crate::models::Model;
use crate::numerics::{GradVec, ParamVec};
use crate::optim::{adamw_step, plain_adam_step, predict_weights, AdamWConfig, AdamWState};
use crate::{Error, Result, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    /// Gradient at the current weights, AdamW update.
    Baseline,
    /// Gradient at the weights predicted `s` steps ahead, AdamW update.
    Predictive,
    /// Gradient at the current weights, Adam with λ as an L2 gradient term.
    PlainAdam,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepTrace<T> {
    /// Index of the update this step applied (1-based).
    pub step: u64,
    /// Loss at the point the gradient was taken, before the update.
    pub loss: T,
    pub grad_norm: T,
    pub gamma: T,
    /// `max |predicted − cached|`; `None` outside predictive mode.
    pub prediction_distance: Option<T>,
}

fn divergence_at(step: u64) -> impl Fn(Error) -> Error {
    move |e| match e {
        Error::NonFinite { context, index } => Error::Divergence {
            step,
            reason: format!("non-finite {context} (index {index})"),
        },
        other => other,
    }
}

fn commit<T: Scalar, M: Model<T> + ?Sized>(
    model: &mut M,
    state: &mut AdamWState<T>,
    (params, next): (ParamVec<T>, AdamWState<T>),
) -> Result<()> {
    model.params_mut().restore(&params)?;
    *state = next;
    Ok(())
}

fn gradient_at_current<T: Scalar, M: Model<T> + ?Sized>(
    model: &M,
    batch: &Batch<T>,
    step: u64,
) -> Result<(T, GradVec<T>)> {
    model.loss_and_grad(batch).map_err(divergence_at(step))
}

/// Forward/backward at the weights `config.s` updates ahead, update at the cached weights.
pub fn train_step_predictive<T: Scalar, M: Model<T> + ?Sized>(
    model: &mut M,
    batch: &Batch<T>,
    state: &mut AdamWState<T>,
    config: &AdamWConfig<T>,
) -> Result<StepTrace<T>> {
    let step = state.t() + 1;
    let cached = model.params().snapshot();
    let predicted = predict_weights(&cached, state, config).map_err(divergence_at(step))?;
    let distance = predicted.max_abs_diff(&cached)?;

    model.params_mut().restore(&predicted)?;
    let evaluated = model.loss_and_grad(batch).map_err(divergence_at(step));
    model.params_mut().restore(&cached)?;
    let (loss, grad) = evaluated?;

    let updated = adamw_step(&cached, state, &grad, config)?;
    commit(model, state, updated)?;
    Ok(StepTrace {
        step,
        loss,
        grad_norm: grad.l2_norm(),
        gamma: config.gamma,
        prediction_distance: Some(distance),
    })
}

/// Forward/backward and AdamW update at the current weights.
pub fn train_step_baseline<T: Scalar, M: Model<T> + ?Sized>(
    model: &mut M,
    batch: &Batch<T>,
    state: &mut AdamWState<T>,
    config: &AdamWConfig<T>,
) -> Result<StepTrace<T>> {
    let step = state.t() + 1;
    let (loss, grad) = gradient_at_current(model, batch, step)?;
    let updated = adamw_step(model.params(), state, &grad, config)?;
    commit(model, state, updated)?;
    Ok(StepTrace {
        step,
        loss,
        grad_norm: grad.l2_norm(),
        gamma: config.gamma,
        prediction_distance: None,
    })
}

/// Forward/backward at the current weights, Adam update with L2-coupled λ.
pub fn train_step_plain_adam<T: Scalar, M: Model<T> + ?Sized>(
    model: &mut M,
    batch: &Batch<T>,
    state: &mut AdamWState<T>,
    config: &AdamWConfig<T>,
) -> Result<StepTrace<T>> {
    let step = state.t() + 1;
    let (loss, grad) = gradient_at_current(model, batch, step)?;
    let updated = plain_adam_step(model.params(), state, &grad, config)?;
    commit(model, state, updated)?;
    Ok(StepTrace {
        step,
        loss,
        grad_norm: grad.l2_norm(),
        gamma: config.gamma,
        prediction_distance: None,
    })
}

pub fn train_step<T: Scalar, M: Model<T> + ?Sized>(
    mode: Mode,
    model: &mut M,
    batch: &Batch<T>,
    state: &mut AdamWState<T>,
    config: &AdamWConfig<T>,
) -> Result<StepTrace<T>> {
    match mode {
        Mode::Baseline => train_step_baseline(model, batch, state, config),
        Mode::Predictive => train_step_predictive(model, batch, state, config),
        Mode::PlainAdam => train_step_plain_adam(model, batch, state, config),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainPlan<T> {
    pub epochs: u32,
    pub batch_size: usize,
    /// `(epoch, multiplier)`: after `epoch` epochs complete, γ is multiplied by `multiplier`.
    pub lr_schedule: Vec<(u32, T)>,
    pub mode: Mode,
    /// Drives the per-epoch shuffle order.
    pub seed: u64,
    pub shuffle: bool,
    pub record_trace: bool,
}

impl<T: Scalar> TrainPlan<T> {
    pub fn new(mode: Mode, epochs: u32, batch_size: usize, seed: u64) -> Self {
        TrainPlan {
            epochs,
            batch_size,
            lr_schedule: Vec::new(),
            mode,
            seed,
            shuffle: true,
            record_trace: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs < 1 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if self.batch_size < 1 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        for pair in self.lr_schedule.windows(2) {
            if pair[1].0 <= pair[0].0 {
                return Err(Error::Config(format!(
                    "schedule epochs must be strictly increasing ({} then {})",
                    pair[0].0, pair[1].0
                )));
            }
        }
        if let Some((e, m)) = self
            .lr_schedule
            .iter()
            .find(|(_, m)| !(*m > T::zero() && m.is_finite()))
        {
            return Err(Error::Config(format!(
                "schedule multiplier at epoch {e} must be > 0 (got {m})"
            )));
        }
        Ok(())
    }
}

/// Learning rate in effect during `epoch` (1-based).
pub fn gamma_for_epoch<T: Scalar>(base: T, schedule: &[(u32, T)], epoch: u32) -> T {
    schedule
        .iter()
        .filter(|(boundary, _)| *boundary < epoch)
        .fold(base, |gamma, (_, multiplier)| gamma * *multiplier)
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochMetrics<T> {
    pub epoch: u32,
    /// Loss over the full training set at the end of the epoch.
    pub train_loss: T,
    pub val_loss: T,
    pub val_acc: Option<T>,
    pub gamma: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainingRun<T> {
    pub epochs: Vec<EpochMetrics<T>>,
    pub trace: Vec<StepTrace<T>>,
    /// Updates applied successfully.
    pub steps: u64,
    /// Set when a non-finite value ended the run; the step that failed.
    pub diverged_at: Option<u64>,
    pub divergence_reason: Option<String>,
}

impl<T> TrainingRun<T> {
    pub fn diverged(&self) -> bool {
        self.diverged_at.is_some()
    }
}

fn evaluate<T: Scalar, M: Model<T> + ?Sized>(
    model: &M,
    data: &Dataset<T>,
) -> Result<(T, Option<T>)> {
    let batch = data.as_batch()?;
    Ok((model.loss(&batch)?, model.accuracy(&batch)?))
}

/// Runs `plan.epochs` epochs over `train`, validating once per epoch.
///
/// Validation uses `validation` when given and the training set otherwise.
/// A non-finite loss or update ends the run and is reported through
/// [`TrainingRun::diverged_at`]; other failures are returned as errors.
pub fn run_training<T: Scalar, M: Model<T> + ?Sized>(
    plan: &TrainPlan<T>,
    model: &mut M,
    config: &AdamWConfig<T>,
    train: &Dataset<T>,
    validation: Option<&Dataset<T>>,
) -> Result<TrainingRun<T>> {
    plan.validate()?;
    config.validate()?;
    if train.is_empty() {
        return Err(Error::Precondition("training set is empty".into()));
    }
    let validation = validation.filter(|v| !v.is_empty()).unwrap_or(train);
    let mut state = AdamWState::new(model.params().len());
    let mut run = TrainingRun {
        epochs: Vec::with_capacity(plan.epochs as usize),
        trace: Vec::new(),
        steps: 0,
        diverged_at: None,
        divergence_reason: None,
    };

    'epochs: for epoch in 1..=plan.epochs {
        let gamma = gamma_for_epoch(config.gamma, &plan.lr_schedule, epoch);
        let epoch_config = AdamWConfig { gamma, ..*config };
        let order = if plan.shuffle {
            Order::Shuffled {
                seed: plan.seed,
                epoch: u64::from(epoch),
            }
        } else {
            Order::Sequential
        };
        for batch in train.batches(plan.batch_size, order)? {
            match train_step(plan.mode, model, &batch, &mut state, &epoch_config) {
                Ok(trace) => {
                    run.steps += 1;
                    if plan.record_trace {
                        run.trace.push(trace);
                    }
                }
                Err(Error::Divergence { step, reason }) => {
                    run.diverged_at = Some(step);
                    run.divergence_reason = Some(reason);
                    break 'epochs;
                }
                Err(other) => return Err(other),
            }
        }
        let measured = evaluate(model, train).and_then(|(train_loss, _)| {
            evaluate(model, validation).map(|(val_loss, val_acc)| (train_loss, val_loss, val_acc))
        });
        match measured {
            Ok((train_loss, val_loss, val_acc)) => run.epochs.push(EpochMetrics {
                epoch,
                train_loss,
                val_loss,
                val_acc,
                gamma,
            }),
            Err(e) if e.is_divergence() => {
                run.diverged_at = Some(run.steps);
                run.divergence_reason = Some(format!("evaluation after epoch {epoch}: {e}"));
                break;
            }
            Err(other) => return Err(other),
        }
    }
    Ok(run)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{gen_blobs, Dataset};
    use crate::data::{Batch, Order};
    use crate::models::Model;
    use crate::models::{LinearObjective, LogisticRegression, Mlp, QuadraticBowl};
    use crate::numerics::{GradVec, ParamVec};
    use crate::optim::{adamw_step, predict_weights, AdamWConfig, AdamWState};
    use crate::{Error, Result};

    fn pv(v: &[f64]) -> ParamVec<f64> {
        ParamVec::new(v.to_vec()).unwrap()
    }

    fn unit_batch() -> Batch<f64> {
        Batch::from_rows(&[vec![]], &[0]).unwrap()
    }

    /// Records the weights every forward/backward pass saw.
    struct Spy<M> {
        inner: M,
        seen: std::cell::RefCell<Vec<ParamVec<f64>>>,
    }

    impl<M: Model<f64>> Model<f64> for Spy<M> {
        fn params(&self) -> &ParamVec<f64> {
            self.inner.params()
        }
        fn params_mut(&mut self) -> &mut ParamVec<f64> {
            self.inner.params_mut()
        }
        fn loss(&self, batch: &Batch<f64>) -> Result<f64> {
            self.inner.loss(batch)
        }
        fn loss_and_grad(&self, batch: &Batch<f64>) -> Result<(f64, GradVec<f64>)> {
            self.seen.borrow_mut().push(self.inner.params().snapshot());
            self.inner.loss_and_grad(batch)
        }
    }

    /// Returns a non-finite loss whenever its first weight is below a threshold.
    struct Cliff {
        params: ParamVec<f64>,
        edge: f64,
    }

    impl Model<f64> for Cliff {
        fn params(&self) -> &ParamVec<f64> {
            &self.params
        }
        fn params_mut(&mut self) -> &mut ParamVec<f64> {
            &mut self.params
        }
        fn loss(&self, _: &Batch<f64>) -> Result<f64> {
            let x = self.params.as_slice()[0];
            if x < self.edge {
                Err(Error::NonFinite {
                    context: "loss",
                    index: 0,
                })
            } else {
                Ok(x)
            }
        }
        fn loss_and_grad(&self, b: &Batch<f64>) -> Result<(f64, GradVec<f64>)> {
            Ok((self.loss(b)?, pv(&[1.0])))
        }
    }

    #[test]
    fn predictive_with_s0_matches_baseline_bitwise() {
        let data = gen_blobs::<f64>(3, 20, 4, 0.8, 1).unwrap();
        let batches = data
            .batches(8, Order::Shuffled { seed: 3, epoch: 1 })
            .unwrap();
        let cfg = AdamWConfig::with_gamma(0.05);
        let mut a = Mlp::<f64>::init(&[4, 6, 3], 2).unwrap();
        let mut b = a.clone();
        let (mut sa, mut sb) = (
            AdamWState::new(a.params().len()),
            AdamWState::new(b.params().len()),
        );
        for _ in 0..5 {
            for batch in &batches {
                let ta = train_step_predictive(&mut a, batch, &mut sa, &cfg).unwrap();
                let tb = train_step_baseline(&mut b, batch, &mut sb, &cfg).unwrap();
                assert!(a.params().bitwise_eq(b.params()));
                assert_eq!(ta.loss.to_bits(), tb.loss.to_bits());
                assert_eq!(ta.prediction_distance, Some(0.0));
            }
        }
        assert_eq!(sa, sb);
    }

    #[test]
    fn first_predictive_step_equals_baseline() {
        let cfg = AdamWConfig::with_gamma(0.1).with_s(3);
        let mut a = QuadraticBowl::new(vec![1.0, 2.0], pv(&[2.0, -1.0])).unwrap();
        let mut b = a.clone();
        let (mut sa, mut sb) = (AdamWState::new(2), AdamWState::new(2));
        train_step_predictive(&mut a, &unit_batch(), &mut sa, &cfg).unwrap();
        train_step_baseline(&mut b, &unit_batch(), &mut sb, &cfg).unwrap();
        assert!(a.params().bitwise_eq(b.params()));
    }

    #[test]
    fn predictive_step_evaluates_at_prediction_and_updates_cached() {
        let cfg = AdamWConfig::with_gamma(0.1).with_s(2);
        let bowl = QuadraticBowl::new(vec![1.0, 3.0], pv(&[2.0, -1.0])).unwrap();
        let mut spy = Spy {
            inner: bowl,
            seen: Default::default(),
        };
        let mut state = AdamWState::new(2);
        train_step_predictive(&mut spy, &unit_batch(), &mut state, &cfg).unwrap();

        let cached = spy.params().snapshot();
        let state_before = state.clone();
        let expected_prediction = predict_weights(&cached, &state, &cfg).unwrap();
        let trace = train_step_predictive(&mut spy, &unit_batch(), &mut state, &cfg).unwrap();

        let seen = spy.seen.borrow();
        assert!(seen[1].bitwise_eq(&expected_prediction));
        let grad_at_prediction: Vec<f64> = expected_prediction
            .as_slice()
            .iter()
            .zip([1.0, 3.0])
            .map(|(x, c)| c * x)
            .collect();
        let (expected_params, expected_state) =
            adamw_step(&cached, &state_before, &pv(&grad_at_prediction), &cfg).unwrap();
        assert!(spy.params().bitwise_eq(&expected_params));
        assert_eq!(state, expected_state);
        assert_eq!(
            trace.prediction_distance,
            Some(expected_prediction.max_abs_diff(&cached).unwrap())
        );
        assert!(trace.prediction_distance.unwrap() > 0.0);
    }

    #[test]
    fn zero_gradient_only_decays() {
        let cfg = AdamWConfig::with_gamma(0.1).with_lambda(0.01);
        let mut lin = LinearObjective::new(vec![0.0, 0.0], pv(&[1.0, -3.0])).unwrap();
        let mut state = AdamWState::new(2);
        train_step_baseline(&mut lin, &unit_batch(), &mut state, &cfg).unwrap();
        let factor = 1.0 - 0.1 * 0.01;
        assert_eq!(lin.params().as_slice(), &[factor * 1.0, factor * -3.0]);
    }

    #[test]
    fn baseline_step_matches_hand_example() {
        let cfg = AdamWConfig::with_gamma(0.1).with_lambda(0.0);
        let mut lin = LinearObjective::new(vec![1.0], pv(&[1.0])).unwrap();
        let mut state = AdamWState::new(1);
        let trace = train_step_baseline(&mut lin, &unit_batch(), &mut state, &cfg).unwrap();
        assert!((lin.params().as_slice()[0] - (1.0 - 0.1 / (1.0 + 1e-8))).abs() <= 1e-15);
        assert_eq!((trace.step, trace.loss, trace.grad_norm), (1, 1.0, 1.0));
        assert_eq!(state.t(), 1);
    }

    #[test]
    fn quadratic_loss_eventually_decreases() {
        let cfg = AdamWConfig::with_gamma(0.01);
        let mut bowl = QuadraticBowl::new(vec![1.0], pv(&[2.0])).unwrap();
        let mut state = AdamWState::new(1);
        let losses: Vec<f64> = (0..20)
            .map(|_| {
                train_step_baseline(&mut bowl, &unit_batch(), &mut state, &cfg)
                    .unwrap()
                    .loss
            })
            .collect();
        assert!(losses.windows(2).all(|w| w[1] < w[0]), "{losses:?}");
    }

    #[test]
    fn prediction_helps_on_quadratic_bowl() {
        let run = |s: u32| {
            let cfg = AdamWConfig::with_gamma(0.1).with_s(s);
            let mut bowl = QuadraticBowl::new(vec![1.0], pv(&[2.0])).unwrap();
            let mut state = AdamWState::new(1);
            for _ in 0..200 {
                train_step_predictive(&mut bowl, &unit_batch(), &mut state, &cfg).unwrap();
            }
            bowl.loss(&unit_batch()).unwrap()
        };
        let baseline = run(0);
        let predictive = run(1);
        assert!(
            predictive < baseline,
            "s=1 {predictive} vs baseline {baseline}"
        );
    }

    #[test]
    fn failed_step_restores_cached_weights() {
        // First update moves x from 1.0 to ~0.9; predicting 5 steps ahead lands below the edge.
        let cfg = AdamWConfig::with_gamma(0.1).with_lambda(0.0).with_s(5);
        let mut cliff = Cliff {
            params: pv(&[1.0]),
            edge: 0.7,
        };
        let mut state = AdamWState::new(1);
        train_step_predictive(&mut cliff, &unit_batch(), &mut state, &cfg).unwrap();
        let cached = cliff.params().snapshot();
        let state_before = state.clone();
        let err = train_step_predictive(&mut cliff, &unit_batch(), &mut state, &cfg).unwrap_err();
        assert!(matches!(err, Error::Divergence { step: 2, .. }), "{err:?}");
        assert!(cliff.params().bitwise_eq(&cached));
        assert_eq!(state, state_before);
    }

    #[test]
    fn one_step_lookahead_is_exact_without_momentum() {
        let cfg = AdamWConfig {
            beta1: 0.0,
            beta2: 0.0,
            ..AdamWConfig::with_gamma(0.05).with_lambda(0.0)
        };
        let mut lin = LinearObjective::new(vec![0.5, -2.0, 1e-3], pv(&[1.0, 1.0, 1.0])).unwrap();
        let mut state = AdamWState::new(3);
        for _ in 0..10 {
            train_step_baseline(&mut lin, &unit_batch(), &mut state, &cfg).unwrap();
            let predicted = predict_weights(lin.params(), &state, &cfg.with_s(1)).unwrap();
            let mut peek = lin.clone();
            let mut peek_state = state.clone();
            train_step_baseline(&mut peek, &unit_batch(), &mut peek_state, &cfg).unwrap();
            assert!(predicted.bitwise_eq(peek.params()));
        }
    }

    #[test]
    fn one_step_lookahead_close_with_momentum() {
        let cfg = AdamWConfig::with_gamma(0.05).with_lambda(0.0);
        let mut lin = LinearObjective::new(vec![0.5, -2.0], pv(&[1.0, 1.0])).unwrap();
        let mut state = AdamWState::new(2);
        for _ in 0..10 {
            train_step_baseline(&mut lin, &unit_batch(), &mut state, &cfg).unwrap();
        }
        let predicted = predict_weights(lin.params(), &state, &cfg.with_s(1)).unwrap();
        let mut peek_state = state.clone();
        train_step_baseline(&mut lin, &unit_batch(), &mut peek_state, &cfg).unwrap();
        // constant gradients: m̂ and v̂ are exactly g and g² at every t
        assert!(predicted.max_abs_diff(lin.params()).unwrap() < 1e-15);
    }

    #[test]
    fn schedule_semantics() {
        let schedule = vec![(2, 0.1)];
        let gammas: Vec<f64> = (1..=4)
            .map(|e| gamma_for_epoch(0.1, &schedule, e))
            .collect();
        assert_eq!(gammas[0], 0.1);
        assert_eq!(gammas[1], 0.1);
        assert!((gammas[2] - 0.01).abs() < 1e-17);
        assert_eq!(gammas[2], gammas[3]);

        let steps = vec![(60, 0.1), (80, 0.1)];
        assert!((gamma_for_epoch(0.01f64, &steps, 100) - 1e-4).abs() < 1e-19);
    }

    #[test]
    fn plan_validation() {
        let mut plan = TrainPlan::<f64>::new(Mode::Baseline, 1, 4, 0);
        plan.validate().unwrap();
        plan.lr_schedule = vec![(3, 0.1), (3, 0.5)];
        assert!(plan.validate().is_err());
        plan.lr_schedule = vec![(3, 0.0)];
        assert!(plan.validate().is_err());
        plan.lr_schedule.clear();
        plan.epochs = 0;
        assert!(plan.validate().is_err());
    }

    fn logreg_setup() -> (LogisticRegression<f64>, Dataset<f64>) {
        (
            LogisticRegression::init(2, 3, 5).unwrap(),
            gen_blobs::<f64>(2, 12, 3, 0.7, 9).unwrap(),
        )
    }

    #[test]
    fn run_records_schedule_and_is_deterministic() {
        let (model, data) = logreg_setup();
        let mut plan = TrainPlan::new(Mode::Predictive, 4, 5, 11);
        plan.lr_schedule = vec![(2, 0.1)];
        plan.record_trace = true;
        let cfg = AdamWConfig::with_gamma(0.1).with_s(2);
        let mut m1 = model.clone();
        let mut m2 = model.clone();
        let r1 = run_training(&plan, &mut m1, &cfg, &data, None).unwrap();
        let r2 = run_training(&plan, &mut m2, &cfg, &data, None).unwrap();
        assert_eq!(r1, r2);
        assert!(m1.params().bitwise_eq(m2.params()));
        assert_eq!(r1.epochs.len(), 4);
        assert_eq!(r1.steps, 4 * 5);
        assert_eq!(r1.trace.len(), 20);
        let gammas: Vec<f64> = r1.epochs.iter().map(|e| e.gamma).collect();
        assert_eq!(&gammas[..2], &[0.1, 0.1]);
        assert!((gammas[2] - 0.01).abs() < 1e-17);
        assert!(r1.trace.iter().all(|t| t.prediction_distance.is_some()));
    }

    #[test]
    fn run_with_s0_equals_baseline_run() {
        let (model, data) = logreg_setup();
        let cfg = AdamWConfig::with_gamma(0.05);
        let baseline = TrainPlan::new(Mode::Baseline, 1, data.len(), 3);
        let predictive = TrainPlan {
            mode: Mode::Predictive,
            ..baseline.clone()
        };
        let mut a = model.clone();
        let mut b = model;
        let ra = run_training(&baseline, &mut a, &cfg, &data, None).unwrap();
        let rb = run_training(&predictive, &mut b, &cfg, &data, None).unwrap();
        assert_eq!(ra, rb);
    }

    #[test]
    fn divergence_is_recorded_not_raised() {
        let cfg = AdamWConfig::with_gamma(1e6);
        let mut bowl = QuadraticBowl::new(vec![1.0; 3], pv(&[1.0, -2.0, 0.5])).unwrap();
        let plan = TrainPlan::new(Mode::Baseline, 10, 1, 0);
        let run = run_training(&plan, &mut bowl, &cfg, &Dataset::featureless(100), None).unwrap();
        assert!(run.diverged());
        assert!(run.epochs.len() < 10);
        assert!(bowl.params().as_slice().iter().all(|x| x.is_finite()));
    }

    #[test]
    fn non_divergence_errors_propagate() {
        let cfg = AdamWConfig::with_gamma(0.1);
        let mut model = LogisticRegression::<f64>::zeros(2, 3).unwrap();
        let bad = gen_blobs::<f64>(3, 4, 3, 1.0, 0).unwrap();
        let plan = TrainPlan::new(Mode::Baseline, 1, 4, 0);
        assert!(matches!(
            run_training(&plan, &mut model, &cfg, &bad, None),
            Err(Error::Precondition(_))
        ));
    }
}
