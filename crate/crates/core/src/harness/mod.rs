//! Experiment orchestration: builds problems from a config, runs every
//! (mode, seed) pair from identical initial weights and batch sequences,
//! aggregates the results and persists them as CSV.

mod aggregate;
pub mod config;
mod metrics;
mod probe;

pub use aggregate::{aggregate, ModeSummary, Stats, SummaryTable};
pub use config::{ExperimentConfig, ModeSpec, ProblemConfig, ProblemKind, TrainMode};
pub use metrics::{
    read_metrics_csv, write_metrics_csv, write_probe_csv, write_trace_csv, MetricRow,
};
pub use probe::{approximation_probe, probe_checkpoints, ProbeReport, ProbeRow};

use std::path::PathBuf;

use rayon::prelude::*;

use crate::controller::{run_training, EpochMetrics, StepTrace, TrainPlan};
use crate::data::{
    gen_blobs, gen_quadratic_target, load_csv, split_dataset, Batch, Dataset, Order,
};
use crate::models::{LinearObjective, LogisticRegression, Mlp, Model, QuadraticBowl};
use crate::numerics::{GradVec, ParamVec};
use crate::rng::{SeededRng, STREAM_DATA, STREAM_INIT};
use crate::{Error, Result};

pub const METRICS_FILE: &str = "metrics.csv";
pub const TRACE_FILE: &str = "traces.csv";
pub const PROBE_FILE: &str = "probe.csv";

/// Any of the built-in objectives, so one sweep can hold any problem kind.
#[derive(Clone, Debug)]
pub enum AnyModel {
    Quadratic(QuadraticBowl<f64>),
    Linear(LinearObjective<f64>),
    Logreg(LogisticRegression<f64>),
    Mlp(Mlp<f64>),
}

macro_rules! dispatch {
    ($self:expr, $m:ident => $body:expr) => {
        match $self {
            AnyModel::Quadratic($m) => $body,
            AnyModel::Linear($m) => $body,
            AnyModel::Logreg($m) => $body,
            AnyModel::Mlp($m) => $body,
        }
    };
}

impl Model<f64> for AnyModel {
    fn params(&self) -> &ParamVec<f64> {
        dispatch!(self, m => m.params())
    }

    fn params_mut(&mut self) -> &mut ParamVec<f64> {
        dispatch!(self, m => m.params_mut())
    }

    fn loss(&self, batch: &Batch<f64>) -> Result<f64> {
        dispatch!(self, m => m.loss(batch))
    }

    fn loss_and_grad(&self, batch: &Batch<f64>) -> Result<(f64, GradVec<f64>)> {
        dispatch!(self, m => m.loss_and_grad(batch))
    }

    fn accuracy(&self, batch: &Batch<f64>) -> Result<Option<f64>> {
        dispatch!(self, m => m.accuracy(batch))
    }
}

/// A fully materialized problem: datasets plus everything needed to build
/// the model for a given seed.
#[derive(Clone, Debug)]
pub struct Problem {
    config: ProblemConfig,
    train: Dataset<f64>,
    validation: Option<Dataset<f64>>,
    coefficients: Vec<f64>,
}

impl Problem {
    pub fn build(config: &ProblemConfig) -> Result<Self> {
        let mut problem = Problem {
            config: config.clone(),
            train: Dataset::featureless(config.steps_per_epoch),
            validation: None,
            coefficients: Vec::new(),
        };
        match config.kind {
            ProblemKind::Quadratic => {
                problem.coefficients = gen_quadratic_target(
                    config.dim,
                    config.curvature_lo,
                    config.curvature_hi,
                    config.data_seed,
                )?;
            }
            ProblemKind::Linear => {
                let mut rng = SeededRng::new(config.data_seed, STREAM_DATA);
                problem.coefficients = (0..config.dim).map(|_| rng.uniform(-1.0, 1.0)).collect();
            }
            ProblemKind::Logreg | ProblemKind::Mlp => {
                let (train, validation) = if config.csv_path.is_empty() {
                    let all = gen_blobs(
                        config.classes,
                        config.per_class,
                        config.dim,
                        config.spread,
                        config.data_seed,
                    )?;
                    if config.train_fraction < 1.0 {
                        let (t, v) = split_dataset(&all, config.train_fraction, config.data_seed)?;
                        (t, Some(v))
                    } else {
                        (all, None)
                    }
                } else {
                    let (t, v) = load_csv(
                        &PathBuf::from(&config.csv_path),
                        config.target_column,
                        config.train_fraction,
                        config.data_seed,
                    )?;
                    (t, Some(v))
                };
                if train.class_count().is_none() {
                    return Err(Error::Config(
                        "classification problems need integer class targets".into(),
                    ));
                }
                problem.train = train;
                problem.validation = validation.filter(|v| !v.is_empty());
            }
        }
        Ok(problem)
    }

    pub fn kind(&self) -> ProblemKind {
        self.config.kind
    }

    pub fn train(&self) -> &Dataset<f64> {
        &self.train
    }

    pub fn validation(&self) -> Option<&Dataset<f64>> {
        self.validation.as_ref()
    }

    /// Short description used to keep different problems out of one aggregation.
    pub fn label(&self) -> String {
        let c = &self.config;
        match c.kind {
            ProblemKind::Quadratic => format!(
                "quadratic(dim={},curvature=[{},{}],data_seed={})",
                c.dim, c.curvature_lo, c.curvature_hi, c.data_seed
            ),
            ProblemKind::Linear => format!("linear(dim={},data_seed={})", c.dim, c.data_seed),
            ProblemKind::Logreg | ProblemKind::Mlp => {
                let source = if c.csv_path.is_empty() {
                    format!(
                        "blobs(classes={},per_class={},dim={},spread={})",
                        c.classes, c.per_class, c.dim, c.spread
                    )
                } else {
                    format!("csv({})", c.csv_path)
                };
                let net = if c.kind == ProblemKind::Mlp {
                    format!("mlp{:?}", c.hidden)
                } else {
                    "logreg".to_string()
                };
                format!("{net}/{source}/data_seed={}", c.data_seed)
            }
        }
    }

    /// Batch size actually used: objectives without data take one evaluation per step.
    pub fn batch_size(&self, configured: usize) -> usize {
        match self.config.kind {
            ProblemKind::Quadratic | ProblemKind::Linear => 1,
            ProblemKind::Logreg | ProblemKind::Mlp => configured,
        }
    }

    /// The model with its seeded initial weights.
    pub fn model(&self, seed: u64) -> Result<AnyModel> {
        let c = &self.config;
        Ok(match c.kind {
            ProblemKind::Quadratic | ProblemKind::Linear => {
                let mut rng = SeededRng::new(seed, STREAM_INIT);
                let start = (0..c.dim)
                    .map(|_| rng.uniform(-c.init_scale, c.init_scale))
                    .collect();
                let start = ParamVec::new(start)?;
                if c.kind == ProblemKind::Quadratic {
                    AnyModel::Quadratic(QuadraticBowl::new(self.coefficients.clone(), start)?)
                } else {
                    AnyModel::Linear(LinearObjective::new(self.coefficients.clone(), start)?)
                }
            }
            ProblemKind::Logreg => {
                let classes = self.train.class_count().unwrap_or(2).max(2);
                AnyModel::Logreg(LogisticRegression::init(classes, self.train.width(), seed)?)
            }
            ProblemKind::Mlp => {
                let classes = self.train.class_count().unwrap_or(2).max(2);
                let mut sizes = vec![self.train.width()];
                sizes.extend(&c.hidden);
                sizes.push(classes);
                AnyModel::Mlp(Mlp::init(&sizes, seed)?)
            }
        })
    }

    /// The batch stream a run with `seed` consumes, epoch by epoch.
    pub fn epoch_batches(
        &self,
        batch_size: usize,
        shuffle: bool,
        seed: u64,
        epoch: u64,
    ) -> Result<Vec<Batch<f64>>> {
        let order = if shuffle {
            Order::Shuffled { seed, epoch }
        } else {
            Order::Sequential
        };
        self.train.batches(self.batch_size(batch_size), order)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunSummary {
    pub min_val_loss: f64,
    /// NaN when the model reports no accuracy.
    pub max_val_acc: f64,
    /// Epoch of the minimum validation loss; 0 when no epoch completed.
    pub best_epoch: u32,
    pub final_train_loss: f64,
}

impl RunSummary {
    pub fn from_epochs(epochs: &[EpochMetrics<f64>]) -> Self {
        let best = epochs
            .iter()
            .filter(|e| e.val_loss.is_finite())
            .min_by(|a, b| a.val_loss.total_cmp(&b.val_loss));
        let max_val_acc = epochs
            .iter()
            .filter_map(|e| e.val_acc)
            .fold(f64::NAN, f64::max);
        RunSummary {
            min_val_loss: best.map_or(f64::NAN, |e| e.val_loss),
            max_val_acc,
            best_epoch: best.map_or(0, |e| e.epoch),
            final_train_loss: epochs.last().map_or(f64::NAN, |e| e.train_loss),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    pub problem: String,
    pub mode: ModeSpec,
    pub seed: u64,
    pub epochs: Vec<EpochMetrics<f64>>,
    pub trace: Vec<StepTrace<f64>>,
    pub diverged_at: Option<u64>,
    pub divergence_reason: Option<String>,
    pub summary: RunSummary,
    pub final_params: ParamVec<f64>,
}

/// Trains one (mode, seed) pair on an already built problem.
pub fn run_one(
    problem: &Problem,
    config: &ExperimentConfig,
    mode: ModeSpec,
    seed: u64,
) -> Result<RunRecord> {
    let mut model = problem.model(seed)?;
    let plan = TrainPlan {
        epochs: config.training.epochs,
        batch_size: problem.batch_size(config.training.batch_size),
        lr_schedule: config.training.schedule.clone(),
        mode: mode.controller_mode(),
        seed,
        shuffle: config.training.shuffle,
        record_trace: config.experiment.trace,
    };
    let optimizer = mode.apply(&config.optimizer);
    let run = run_training(
        &plan,
        &mut model,
        &optimizer,
        problem.train(),
        problem.validation(),
    )?;
    Ok(RunRecord {
        problem: problem.label(),
        mode,
        seed,
        summary: RunSummary::from_epochs(&run.epochs),
        epochs: run.epochs,
        trace: run.trace,
        diverged_at: run.diverged_at,
        divergence_reason: run.divergence_reason,
        final_params: model.params().snapshot(),
    })
}

/// Runs every mode against every seed without writing anything.
///
/// Records come back mode-major, in the order of `experiment.modes` then
/// `experiment.seeds`. Runs are independent and execute in parallel.
pub fn run_sweep(config: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    config.validate()?;
    let problem = Problem::build(&config.problem)?;
    let pairs: Vec<(ModeSpec, u64)> = config
        .experiment
        .modes
        .iter()
        .flat_map(|&m| config.experiment.seeds.iter().map(move |&s| (m, s)))
        .collect();
    pairs
        .into_par_iter()
        .map(|(mode, seed)| run_one(&problem, config, mode, seed))
        .collect()
}

/// [`run_sweep`], then writes `metrics.csv` (and `traces.csv` when tracing)
/// into `experiment.output`.
pub fn run_comparison(config: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    let records = run_sweep(config)?;
    persist(&records, config)?;
    Ok(records)
}

pub fn persist(records: &[RunRecord], config: &ExperimentConfig) -> Result<()> {
    let dir = &config.experiment.output;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_metrics_csv(records, &dir.join(METRICS_FILE))?;
    if config.experiment.trace {
        write_trace_csv(records, &dir.join(TRACE_FILE))?;
    }
    Ok(())
}

/// The approximation probe on the configured problem, first seed, observing
/// a baseline AdamW trajectory of `experiment.horizon` steps.
pub fn run_probe(config: &ExperimentConfig) -> Result<ProbeReport<f64>> {
    config.validate()?;
    let problem = Problem::build(&config.problem)?;
    let seed = config.experiment.seeds[0];
    let mut model = problem.model(seed)?;
    let needed = config.experiment.horizon + u64::from(config.experiment.s_max);
    let mut stream = Vec::new();
    let mut epoch = 1;
    while (stream.len() as u64) < needed {
        stream.extend(problem.epoch_batches(
            config.training.batch_size,
            config.training.shuffle,
            seed,
            epoch,
        )?);
        epoch += 1;
    }
    approximation_probe(
        &mut model,
        &stream,
        &config.optimizer,
        config.experiment.s_max,
        config.experiment.horizon,
    )
}
