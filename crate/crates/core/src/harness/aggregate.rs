use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::{ModeSpec, RunRecord};
use crate::{Error, Result};

/// Spread of one metric over seeds. Non-finite values (diverged runs,
/// objectives without accuracy) are left out; `count` says how many remained.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Stats {
    pub count: usize,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    /// Population standard deviation.
    pub std: f64,
}

impl Stats {
    fn of(values: impl IntoIterator<Item = f64>) -> Stats {
        // sorted so the result does not depend on record order
        let mut v: Vec<f64> = values.into_iter().filter(|x| x.is_finite()).collect();
        v.sort_by(f64::total_cmp);
        if v.is_empty() {
            return Stats {
                count: 0,
                mean: f64::NAN,
                min: f64::NAN,
                max: f64::NAN,
                std: f64::NAN,
            };
        }
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let mut squares: Vec<f64> = v.iter().map(|x| (x - mean) * (x - mean)).collect();
        squares.sort_by(f64::total_cmp);
        Stats {
            count: v.len(),
            mean,
            min: v[0],
            max: v[v.len() - 1],
            std: (squares.iter().sum::<f64>() / n).sqrt(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModeSummary {
    pub mode: ModeSpec,
    pub runs: usize,
    pub diverged: usize,
    pub max_val_acc: Stats,
    pub min_val_loss: Stats,
    pub final_train_loss: Stats,
    /// Mean differences against the baseline mode, when the records include one.
    pub delta_max_val_acc: Option<f64>,
    pub delta_min_val_loss: Option<f64>,
    pub delta_final_train_loss: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SummaryTable {
    pub problem: String,
    /// One row per mode: baseline, plain-adam, then predictive modes by `s`.
    pub rows: Vec<ModeSummary>,
}

/// Per-mode statistics over seeds, plus deltas against the baseline.
pub fn aggregate(records: &[RunRecord]) -> Result<SummaryTable> {
    let first = records
        .first()
        .ok_or_else(|| Error::Precondition("nothing to aggregate".into()))?;
    if let Some(other) = records.iter().find(|r| r.problem != first.problem) {
        return Err(Error::Config(format!(
            "cannot aggregate runs of different problems: {} and {}",
            first.problem, other.problem
        )));
    }
    let mut by_mode: BTreeMap<ModeSpec, Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        by_mode.entry(r.mode).or_default().push(r);
    }
    let mut rows: Vec<ModeSummary> = by_mode
        .into_iter()
        .map(|(mode, runs)| ModeSummary {
            mode,
            runs: runs.len(),
            diverged: runs.iter().filter(|r| r.diverged_at.is_some()).count(),
            max_val_acc: Stats::of(runs.iter().map(|r| r.summary.max_val_acc)),
            min_val_loss: Stats::of(runs.iter().map(|r| r.summary.min_val_loss)),
            final_train_loss: Stats::of(runs.iter().map(|r| r.summary.final_train_loss)),
            delta_max_val_acc: None,
            delta_min_val_loss: None,
            delta_final_train_loss: None,
        })
        .collect();
    if let Some(base) = rows.iter().find(|r| r.mode == ModeSpec::Baseline).cloned() {
        for row in &mut rows {
            row.delta_max_val_acc = Some(row.max_val_acc.mean - base.max_val_acc.mean);
            row.delta_min_val_loss = Some(row.min_val_loss.mean - base.min_val_loss.mean);
            row.delta_final_train_loss =
                Some(row.final_train_loss.mean - base.final_train_loss.mean);
        }
    }
    Ok(SummaryTable {
        problem: first.problem.clone(),
        rows,
    })
}

impl SummaryTable {
    pub fn row(&self, mode: ModeSpec) -> Option<&ModeSummary> {
        self.rows.iter().find(|r| r.mode == mode)
    }

    /// Plain-text table, one line per mode.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "problem: {}", self.problem);
        let _ = writeln!(
            out,
            "{:<16} {:>4} {:>4}  {:>21}  {:>23}  {:>23}  {:>11}  {:>11}",
            "mode",
            "runs",
            "div",
            "max val acc (±std)",
            "min val loss (±std)",
            "final train loss (±std)",
            "Δ val loss",
            "Δ acc"
        );
        let fmt_delta = |d: Option<f64>| d.map_or_else(|| "-".to_string(), |x| format!("{x:+.4e}"));
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<16} {:>4} {:>4}  {:>10.4} ±{:<9.4}  {:>11.5e} ±{:<10.3e}  {:>11.5e} ±{:<10.3e}  {:>11}  {:>11}",
                r.mode.to_string(),
                r.runs,
                r.diverged,
                r.max_val_acc.mean,
                r.max_val_acc.std,
                r.min_val_loss.mean,
                r.min_val_loss.std,
                r.final_train_loss.mean,
                r.final_train_loss.std,
                fmt_delta(r.delta_min_val_loss),
                fmt_delta(r.delta_max_val_acc),
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controller::EpochMetrics;
    use crate::harness::RunSummary;
    use crate::numerics::ParamVec;
    use crate::Error;

    fn record(mode: ModeSpec, seed: u64, val_losses: &[f64], accs: &[f64]) -> RunRecord {
        let epochs: Vec<EpochMetrics<f64>> = val_losses
            .iter()
            .zip(accs)
            .enumerate()
            .map(|(i, (&l, &a))| EpochMetrics {
                epoch: i as u32 + 1,
                train_loss: l * 0.9,
                val_loss: l,
                val_acc: Some(a),
                gamma: 0.1,
            })
            .collect();
        RunRecord {
            problem: "p".into(),
            mode,
            seed,
            summary: RunSummary::from_epochs(&epochs),
            epochs,
            trace: vec![],
            diverged_at: None,
            divergence_reason: None,
            final_params: ParamVec::zeros(1),
        }
    }

    #[test]
    fn summary_tracks_series() {
        let r = record(ModeSpec::Baseline, 1, &[0.5, 0.3, 0.4], &[0.6, 0.8, 0.7]);
        assert_eq!(r.summary.min_val_loss, 0.3);
        assert_eq!(r.summary.best_epoch, 2);
        assert_eq!(r.summary.max_val_acc, 0.8);
        assert!((r.summary.final_train_loss - 0.36).abs() < 1e-15);
    }

    #[test]
    fn singleton_and_identical_records() {
        let one = record(ModeSpec::Baseline, 1, &[0.5, 0.3], &[0.6, 0.8]);
        let t = aggregate(std::slice::from_ref(&one)).unwrap();
        let row = t.row(ModeSpec::Baseline).unwrap();
        assert_eq!(row.min_val_loss.mean, 0.3);
        assert_eq!(row.min_val_loss.std, 0.0);
        assert_eq!(row.max_val_acc.mean, 0.8);

        let t = aggregate(&[one.clone(), one]).unwrap();
        let row = t.row(ModeSpec::Baseline).unwrap();
        assert_eq!(
            (row.runs, row.min_val_loss.std, row.max_val_acc.std),
            (2, 0.0, 0.0)
        );
        assert_eq!(row.delta_min_val_loss, Some(0.0));
        assert_eq!(row.delta_max_val_acc, Some(0.0));
    }

    #[test]
    fn stats_and_deltas() {
        let records = vec![
            record(ModeSpec::Baseline, 1, &[0.4], &[0.5]),
            record(ModeSpec::Baseline, 2, &[0.6], &[0.7]),
            record(ModeSpec::Predictive(1), 1, &[0.3], &[0.9]),
            record(ModeSpec::Predictive(1), 2, &[0.1], &[0.7]),
        ];
        let t = aggregate(&records).unwrap();
        let base = t.row(ModeSpec::Baseline).unwrap();
        assert!((base.min_val_loss.mean - 0.5).abs() < 1e-15);
        assert!((base.min_val_loss.std - 0.1).abs() < 1e-15);
        assert_eq!((base.min_val_loss.min, base.min_val_loss.max), (0.4, 0.6));
        let p = t.row(ModeSpec::Predictive(1)).unwrap();
        assert!((p.delta_min_val_loss.unwrap() + 0.3).abs() < 1e-15);
        assert!((p.delta_max_val_acc.unwrap() - 0.2).abs() < 1e-15);
        assert_eq!(t.rows[0].mode, ModeSpec::Baseline);
        assert_eq!(t.render().lines().count(), 2 + 2);
    }

    #[test]
    fn permutation_invariant() {
        let mut records: Vec<RunRecord> = (0..7)
            .map(|i| {
                let mode = if i % 2 == 0 {
                    ModeSpec::Baseline
                } else {
                    ModeSpec::Predictive(2)
                };
                record(
                    mode,
                    i,
                    &[0.1 + 0.37 * i as f64, 0.3 / (1.0 + i as f64)],
                    &[0.61, 0.1 * i as f64],
                )
            })
            .collect();
        let forward = aggregate(&records).unwrap();
        records.reverse();
        records.swap(1, 4);
        assert_eq!(aggregate(&records).unwrap(), forward);
    }

    #[test]
    fn errors() {
        assert!(aggregate(&[]).is_err());
        let a = record(ModeSpec::Baseline, 1, &[0.4], &[0.5]);
        let mut b = a.clone();
        b.problem = "other".into();
        assert!(matches!(aggregate(&[a, b]), Err(Error::Config(_))));
    }

    #[test]
    fn diverged_runs_are_counted_not_averaged() {
        let good = record(ModeSpec::Baseline, 1, &[0.4], &[0.5]);
        let mut bad = record(ModeSpec::Baseline, 2, &[], &[]);
        bad.diverged_at = Some(3);
        let t = aggregate(&[good, bad]).unwrap();
        let row = t.row(ModeSpec::Baseline).unwrap();
        assert_eq!((row.runs, row.diverged, row.min_val_loss.count), (2, 1, 1));
        assert_eq!(row.min_val_loss.mean, 0.4);
    }
}
