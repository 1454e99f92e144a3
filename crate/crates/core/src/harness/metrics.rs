//! Metrics CSV: `mode,seed,epoch,train_loss,val_loss,val_acc,gamma`, one row
//! per (mode, seed, epoch). Floats are written with 17 significant digits so
//! they parse back to the same bits; a missing accuracy is written as `NaN`.

use std::path::Path;

use super::{ModeSpec, ProbeReport, RunRecord};
use crate::{Error, Result};

pub const METRICS_HEADER: [&str; 7] = [
    "mode",
    "seed",
    "epoch",
    "train_loss",
    "val_loss",
    "val_acc",
    "gamma",
];
pub const PROBE_HEADER: [&str; 4] = ["checkpoint", "s", "sum_error", "extrapolation_error"];
pub const TRACE_HEADER: [&str; 7] = [
    "mode",
    "seed",
    "step",
    "loss",
    "grad_norm",
    "gamma",
    "prediction_distance",
];

fn float(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::io(path, std::io::Error::other(format!("{other:?}"))),
    }
}

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::WriterBuilder::new()
        .quote_style(csv::QuoteStyle::Never)
        .from_writer(file))
}

pub fn write_metrics_csv(records: &[RunRecord], path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(METRICS_HEADER)
        .map_err(|e| csv_error(path, e))?;
    for r in records {
        for e in &r.epochs {
            w.write_record([
                r.mode.to_string(),
                r.seed.to_string(),
                e.epoch.to_string(),
                float(e.train_loss),
                float(e.val_loss),
                float(e.val_acc.unwrap_or(f64::NAN)),
                float(e.gamma),
            ])
            .map_err(|e| csv_error(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_trace_csv(records: &[RunRecord], path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(TRACE_HEADER)
        .map_err(|e| csv_error(path, e))?;
    for r in records {
        for t in &r.trace {
            w.write_record([
                r.mode.to_string(),
                r.seed.to_string(),
                t.step.to_string(),
                float(t.loss),
                float(t.grad_norm),
                float(t.gamma),
                t.prediction_distance.map_or_else(String::new, float),
            ])
            .map_err(|e| csv_error(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_probe_csv(report: &ProbeReport<f64>, path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(PROBE_HEADER)
        .map_err(|e| csv_error(path, e))?;
    for row in &report.rows {
        w.write_record([
            row.checkpoint.to_string(),
            row.s.to_string(),
            float(row.sum_error),
            float(row.extrapolation_error),
        ])
        .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricRow {
    pub mode: ModeSpec,
    pub seed: u64,
    pub epoch: u32,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_acc: f64,
    pub gamma: f64,
}

pub fn read_metrics_csv(path: &Path) -> Result<Vec<MetricRow>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().quoting(false).from_reader(file);
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 2;
        let record = record.map_err(|e| csv_error(path, e))?;
        let cell = |c: usize| -> Result<&str> {
            record.get(c).ok_or_else(|| Error::Parse {
                path: path.to_path_buf(),
                row,
                column: c + 1,
                message: "missing cell".into(),
            })
        };
        let bad = |c: usize, text: &str| Error::Parse {
            path: path.to_path_buf(),
            row,
            column: c + 1,
            message: format!("cannot parse {text:?}"),
        };
        let num = |c: usize| -> Result<f64> {
            let text = cell(c)?;
            text.parse().map_err(|_| bad(c, text))
        };
        rows.push(MetricRow {
            mode: cell(0)?.parse()?,
            seed: cell(1)?
                .parse()
                .map_err(|_| bad(1, record.get(1).unwrap_or("")))?,
            epoch: cell(2)?
                .parse()
                .map_err(|_| bad(2, record.get(2).unwrap_or("")))?,
            train_loss: num(3)?,
            val_loss: num(4)?,
            val_acc: num(5)?,
            gamma: num(6)?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controller::EpochMetrics;
    use crate::harness::RunSummary;
    use crate::numerics::ParamVec;
    use crate::Error;
    use proptest::prelude::*;
    use std::path::Path;

    fn record(mode: ModeSpec, seed: u64, losses: &[f64]) -> RunRecord {
        let epochs: Vec<EpochMetrics<f64>> = losses
            .iter()
            .enumerate()
            .map(|(i, &l)| EpochMetrics {
                epoch: i as u32 + 1,
                train_loss: l,
                val_loss: l * 1.1,
                val_acc: if i % 2 == 0 { Some(1.0 / 3.0) } else { None },
                gamma: 0.1 / (i as f64 + 1.0),
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
    fn row_count_and_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        let records = vec![
            record(ModeSpec::Baseline, 1, &[0.5, 0.4, 0.3]),
            record(ModeSpec::Predictive(2), 1, &[0.5, 0.35, 0.2]),
        ];
        write_metrics_csv(&records, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 7);
        assert_eq!(
            lines[0],
            "mode,seed,epoch,train_loss,val_loss,val_acc,gamma"
        );
        assert!(lines[4].starts_with("predictive-s2,1,1,"));
    }

    #[test]
    fn empty_records_give_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        write_metrics_csv(&[], &path).unwrap();
        assert_eq!(
            std::fs::read_to_string(&path).unwrap(),
            "mode,seed,epoch,train_loss,val_loss,val_acc,gamma\n"
        );
    }

    #[test]
    fn unwritable_path_reports_it() {
        let err = write_metrics_csv(&[], Path::new("/nonexistent-dir/x/m.csv")).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
        assert!(err.to_string().contains("/nonexistent-dir/x/m.csv"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn values_round_trip_bitwise(
            losses in proptest::collection::vec(prop_oneof![1e-300f64..1e300, -1e3f64..1e3, Just(0.0), Just(f64::MIN_POSITIVE)], 1..6),
            seed in any::<u64>(),
        ) {
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("m.csv");
            let records = vec![record(ModeSpec::PlainAdam, seed, &losses)];
            write_metrics_csv(&records, &path).unwrap();
            let rows = read_metrics_csv(&path).unwrap();
            prop_assert_eq!(rows.len(), losses.len());
            for (row, e) in rows.iter().zip(&records[0].epochs) {
                prop_assert_eq!(row.seed, seed);
                prop_assert_eq!(row.train_loss.to_bits(), e.train_loss.to_bits());
                prop_assert_eq!(row.val_loss.to_bits(), e.val_loss.to_bits());
                prop_assert_eq!(row.gamma.to_bits(), e.gamma.to_bits());
                match e.val_acc {
                    Some(a) => prop_assert_eq!(row.val_acc.to_bits(), a.to_bits()),
                    None => prop_assert!(row.val_acc.is_nan()),
                }
            }
        }
    }
}
