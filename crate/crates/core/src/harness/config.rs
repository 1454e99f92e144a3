//! Experiment configuration file.
//!
//! TOML with four sections. Every key is optional; missing keys take the
//! defaults shown. Unknown keys are rejected.
//!
//! ```toml
//! [problem]
//! kind = "logreg"          # quadratic | linear | logreg | mlp
//! data_seed = 0            # seeds dataset generation, curvatures and splits
//! dim = 10                 # parameter count (quadratic, linear) or feature width (logreg, mlp)
//! curvature_lo = 0.5       # quadratic curvature range
//! curvature_hi = 2.0
//! init_scale = 2.0         # quadratic/linear start: uniform in [-init_scale, init_scale]
//! steps_per_epoch = 100    # quadratic/linear: full evaluations per epoch
//! classes = 2              # blobs
//! per_class = 200
//! spread = 1.0
//! hidden = [8]             # mlp hidden layer widths
//! csv_path = ""            # non-empty: load this CSV instead of generating blobs
//! target_column = 0
//! train_fraction = 1.0     # share of rows used for training, the rest validates
//!
//! [optimizer]
//! gamma = 0.001
//! beta1 = 0.9
//! beta2 = 0.999
//! eps = 1e-8
//! lambda = 0.0005
//! s = 0                    # prediction steps for `train` in predictive mode
//!
//! [training]
//! mode = "predictive"      # `train` only: baseline | plain-adam | predictive
//! epochs = 10
//! batch_size = 32
//! shuffle = true
//! schedule = []            # [[epoch, multiplier], ...]: γ *= multiplier after `epoch` epochs
//!
//! [experiment]
//! modes = ["baseline", "predictive-s1", "predictive-s2", "predictive-s3"]
//! seeds = [1]
//! output = "runs"          # directory for metrics.csv (and traces.csv)
//! trace = false            # also record every step
//! s_max = 3                # approximation probe
//! horizon = 100
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::controller::Mode;
use crate::optim::AdamWConfig;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemKind {
    Quadratic,
    Linear,
    Logreg,
    Mlp,
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProblemKind::Quadratic => "quadratic",
            ProblemKind::Linear => "linear",
            ProblemKind::Logreg => "logreg",
            ProblemKind::Mlp => "mlp",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemConfig {
    pub kind: ProblemKind,
    pub data_seed: u64,
    pub dim: usize,
    pub curvature_lo: f64,
    pub curvature_hi: f64,
    pub init_scale: f64,
    pub steps_per_epoch: usize,
    pub classes: usize,
    pub per_class: usize,
    pub spread: f64,
    pub hidden: Vec<usize>,
    pub csv_path: String,
    pub target_column: usize,
    pub train_fraction: f64,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        ProblemConfig {
            kind: ProblemKind::Logreg,
            data_seed: 0,
            dim: 10,
            curvature_lo: 0.5,
            curvature_hi: 2.0,
            init_scale: 2.0,
            steps_per_epoch: 100,
            classes: 2,
            per_class: 200,
            spread: 1.0,
            hidden: vec![8],
            csv_path: String::new(),
            target_column: 0,
            train_fraction: 1.0,
        }
    }
}

/// A single optimizer variant in a comparison.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ModeSpec {
    Baseline,
    PlainAdam,
    Predictive(u32),
}

impl ModeSpec {
    pub fn controller_mode(self) -> Mode {
        match self {
            ModeSpec::Baseline => Mode::Baseline,
            ModeSpec::PlainAdam => Mode::PlainAdam,
            ModeSpec::Predictive(_) => Mode::Predictive,
        }
    }

    /// The optimizer settings this mode runs with.
    pub fn apply(self, base: &AdamWConfig<f64>) -> AdamWConfig<f64> {
        match self {
            ModeSpec::Predictive(s) => base.with_s(s),
            ModeSpec::Baseline | ModeSpec::PlainAdam => base.with_s(0),
        }
    }
}

impl fmt::Display for ModeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModeSpec::Baseline => f.write_str("baseline"),
            ModeSpec::PlainAdam => f.write_str("plain-adam"),
            ModeSpec::Predictive(s) => write!(f, "predictive-s{s}"),
        }
    }
}

impl FromStr for ModeSpec {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        match text {
            "baseline" => Ok(ModeSpec::Baseline),
            "plain-adam" => Ok(ModeSpec::PlainAdam),
            other => other
                .strip_prefix("predictive-s")
                .and_then(|s| s.parse().ok())
                .map(ModeSpec::Predictive)
                .ok_or_else(|| {
                    Error::Config(format!(
                        "unknown mode {other:?}; expected baseline, plain-adam or predictive-s<N>"
                    ))
                }),
        }
    }
}

impl TryFrom<String> for ModeSpec {
    type Error = Error;

    fn try_from(text: String) -> Result<Self> {
        text.parse()
    }
}

impl From<ModeSpec> for String {
    fn from(mode: ModeSpec) -> String {
        mode.to_string()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrainMode {
    Baseline,
    PlainAdam,
    Predictive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingConfig {
    pub mode: TrainMode,
    pub epochs: u32,
    pub batch_size: usize,
    pub shuffle: bool,
    pub schedule: Vec<(u32, f64)>,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            mode: TrainMode::Predictive,
            epochs: 10,
            batch_size: 32,
            shuffle: true,
            schedule: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    pub modes: Vec<ModeSpec>,
    pub seeds: Vec<u64>,
    pub output: PathBuf,
    pub trace: bool,
    pub s_max: u32,
    pub horizon: u64,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        ExperimentSection {
            modes: vec![
                ModeSpec::Baseline,
                ModeSpec::Predictive(1),
                ModeSpec::Predictive(2),
                ModeSpec::Predictive(3),
            ],
            seeds: vec![1],
            output: PathBuf::from("runs"),
            trace: false,
            s_max: 3,
            horizon: 100,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemConfig,
    pub optimizer: AdamWConfig<f64>,
    pub training: TrainingConfig,
    pub experiment: ExperimentSection,
}

impl ExperimentConfig {
    /// Parses TOML text, applies `key=value` overrides, then validates.
    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<Self> {
        let parsed: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        parsed.with_overrides(overrides)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Config(format!("cannot read config file {}: {e}", path.display()))
        })?;
        Self::from_toml_str(&text, overrides).map_err(|e| match e {
            Error::Config(message) => Error::Config(format!("{}: {message}", path.display())),
            other => other,
        })
    }

    /// Applies dotted `section.key=value` overrides. Values are TOML literals;
    /// anything that does not parse as one is taken as a string.
    pub fn with_overrides(&self, overrides: &[String]) -> Result<Self> {
        let mut tree = toml::Table::try_from(self).map_err(|e| Error::Config(e.to_string()))?;
        for item in overrides {
            apply_override(&mut tree, item)?;
        }
        let config: ExperimentConfig = tree
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.optimizer.validate()?;
        let p = &self.problem;
        let fail = |msg: String| Err(Error::Config(msg));
        match p.kind {
            ProblemKind::Quadratic | ProblemKind::Linear => {
                if p.dim == 0 {
                    return fail("problem.dim must be at least 1".into());
                }
                if p.steps_per_epoch == 0 {
                    return fail("problem.steps_per_epoch must be at least 1".into());
                }
                if !(p.init_scale >= 0.0 && p.init_scale.is_finite()) {
                    return fail("problem.init_scale must be >= 0".into());
                }
                if p.kind == ProblemKind::Quadratic
                    && !(p.curvature_lo > 0.0 && p.curvature_lo <= p.curvature_hi)
                {
                    return fail(
                        "problem curvature range must satisfy 0 < curvature_lo <= curvature_hi"
                            .into(),
                    );
                }
            }
            ProblemKind::Logreg | ProblemKind::Mlp => {
                if p.csv_path.is_empty() {
                    if p.classes < 2
                        || p.per_class < 1
                        || p.dim < 1
                        || !(p.spread.is_finite() && p.spread > 0.0)
                    {
                        return fail(
                            "blobs need classes >= 2, per_class >= 1, dim >= 1, spread > 0".into(),
                        );
                    }
                } else if !(p.train_fraction > 0.0 && p.train_fraction < 1.0) {
                    return fail(
                        "problem.train_fraction must be in (0, 1) when loading a CSV".into(),
                    );
                }
                if !(p.train_fraction > 0.0 && p.train_fraction <= 1.0) {
                    return fail("problem.train_fraction must be in (0, 1]".into());
                }
                if p.kind == ProblemKind::Mlp && p.hidden.contains(&0) {
                    return fail("problem.hidden widths must be non-zero".into());
                }
            }
        }
        let t = &self.training;
        if t.epochs == 0 || t.batch_size == 0 {
            return fail("training.epochs and training.batch_size must be at least 1".into());
        }
        if t.schedule.windows(2).any(|w| w[1].0 <= w[0].0) {
            return fail("training.schedule epochs must be strictly increasing".into());
        }
        if t.schedule.iter().any(|(_, m)| !(*m > 0.0 && m.is_finite())) {
            return fail("training.schedule multipliers must be > 0".into());
        }
        let e = &self.experiment;
        if e.modes.is_empty() {
            return fail("experiment.modes needs at least one mode".into());
        }
        if e.seeds.is_empty() {
            return fail("experiment.seeds needs at least one seed".into());
        }
        if e.s_max == 0 || e.horizon < u64::from(e.s_max) {
            return fail("the probe needs horizon >= s_max >= 1".into());
        }
        Ok(())
    }

    /// The controller mode and optimizer settings used by a single `train` run.
    pub fn train_mode(&self) -> ModeSpec {
        match self.training.mode {
            TrainMode::Baseline => ModeSpec::Baseline,
            TrainMode::PlainAdam => ModeSpec::PlainAdam,
            TrainMode::Predictive => ModeSpec::Predictive(self.optimizer.s),
        }
    }
}

fn apply_override(tree: &mut toml::Table, item: &str) -> Result<()> {
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override {item:?} is not of the form key=value")))?;
    let key = key.trim();
    let path: Vec<&str> = key.split('.').collect();
    let (last, sections) = path.split_last().expect("split yields at least one part");

    let mut table = &mut *tree;
    for section in sections {
        table = match table.get_mut(*section) {
            Some(toml::Value::Table(inner)) => inner,
            _ => return Err(Error::Config(format!("unknown configuration key {key:?}"))),
        };
    }
    let slot = table
        .get_mut(*last)
        .ok_or_else(|| Error::Config(format!("unknown configuration key {key:?}")))?;
    if slot.is_table() {
        return Err(Error::Config(format!("{key:?} is a section, not a key")));
    }
    *slot = coerce(parse_literal(raw.trim()), slot);
    Ok(())
}

fn parse_literal(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("value = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("value"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

/// Lets `gamma=1` stand for a float field and `output=123` for a string field.
fn coerce(value: toml::Value, existing: &toml::Value) -> toml::Value {
    match (value, existing) {
        (toml::Value::Integer(i), toml::Value::Float(_)) => toml::Value::Float(i as f64),
        (
            v @ (toml::Value::Integer(_) | toml::Value::Float(_) | toml::Value::Boolean(_)),
            toml::Value::String(_),
        ) => toml::Value::String(v.to_string()),
        (v, _) => v,
    }
}
