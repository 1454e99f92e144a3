//! Datasets, seeded synthetic generators, the CSV loader and mini-batching.
//!
//! CSV dialect: comma separated, `.` decimal point, no quoting, one optional
//! header line. The first line is treated as a header when any of its cells
//! fails to parse as a number.

use std::path::Path;

use crate::rng::{SeededRng, STREAM_DATA, STREAM_SHUFFLE_BASE, STREAM_SPLIT};
use crate::{Error, Result, Scalar};

/// Half-width of the cube blob centers are drawn from.
pub const BLOB_CENTER_RANGE: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Target<T> {
    Class(usize),
    Real(T),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Split {
    Train,
    Validation,
}

/// Rows of equal-width features, each with one target.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset<T> {
    width: usize,
    features: Vec<T>,
    targets: Vec<Target<T>>,
    split: Split,
}

/// A mini-batch: a non-empty selection of dataset rows.
#[derive(Clone, Debug, PartialEq)]
pub struct Batch<T> {
    width: usize,
    features: Vec<T>,
    targets: Vec<Target<T>>,
}

/// Row order used when cutting a dataset into batches.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Order {
    Sequential,
    /// Permuted with the shuffle stream of `epoch` (1-based) under `seed`.
    Shuffled {
        seed: u64,
        epoch: u64,
    },
}

fn check_rows<T>(width: usize, features: &[T], targets: &[Target<T>]) -> Result<()> {
    if features.len() != width * targets.len() {
        return Err(Error::Dimension {
            expected: width * targets.len(),
            found: features.len(),
        });
    }
    Ok(())
}

impl<T: Scalar> Dataset<T> {
    pub fn new(
        width: usize,
        features: Vec<T>,
        targets: Vec<Target<T>>,
        split: Split,
    ) -> Result<Self> {
        check_rows(width, &features, &targets)?;
        if let Some(i) = features.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite {
                context: "dataset features",
                index: i,
            });
        }
        Ok(Dataset {
            width,
            features,
            targets,
            split,
        })
    }

    /// `n` rows with no features. Objectives that ignore their input use this
    /// to get `n` evaluations per epoch from the ordinary batching path.
    pub fn featureless(n: usize) -> Self {
        Dataset {
            width: 0,
            features: Vec::new(),
            targets: vec![Target::Real(T::zero()); n],
            split: Split::Train,
        }
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn split(&self) -> Split {
        self.split
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.features[i * self.width..(i + 1) * self.width]
    }

    pub fn target(&self, i: usize) -> Target<T> {
        self.targets[i]
    }

    pub fn targets(&self) -> &[Target<T>] {
        &self.targets
    }

    /// Number of classes implied by the largest class label, if targets are classes.
    pub fn class_count(&self) -> Option<usize> {
        self.targets
            .iter()
            .map(|t| match t {
                Target::Class(c) => Some(*c),
                Target::Real(_) => None,
            })
            .collect::<Option<Vec<_>>>()
            .and_then(|cs| cs.into_iter().max())
            .map(|c| c + 1)
    }

    fn select(&self, indices: &[usize], split: Split) -> Dataset<T> {
        let mut features = Vec::with_capacity(indices.len() * self.width);
        for &i in indices {
            features.extend_from_slice(self.row(i));
        }
        Dataset {
            width: self.width,
            features,
            targets: indices.iter().map(|&i| self.targets[i]).collect(),
            split,
        }
    }

    /// The whole dataset as one batch.
    pub fn as_batch(&self) -> Result<Batch<T>> {
        Batch::new(self.width, self.features.clone(), self.targets.clone())
    }

    /// Cuts the rows into `ceil(n / batch_size)` batches; the last may be short.
    pub fn batches(&self, batch_size: usize, order: Order) -> Result<Vec<Batch<T>>> {
        if batch_size == 0 {
            return Err(Error::Precondition("batch size must be at least 1".into()));
        }
        if self.is_empty() {
            return Err(Error::Precondition("cannot batch an empty dataset".into()));
        }
        let mut indices: Vec<usize> = (0..self.len()).collect();
        if let Order::Shuffled { seed, epoch } = order {
            SeededRng::new(seed, STREAM_SHUFFLE_BASE + epoch).shuffle(&mut indices);
        }
        indices
            .chunks(batch_size)
            .map(|chunk| {
                let part = self.select(chunk, self.split);
                Batch::new(part.width, part.features, part.targets)
            })
            .collect()
    }
}

impl<T: Scalar> Batch<T> {
    pub fn new(width: usize, features: Vec<T>, targets: Vec<Target<T>>) -> Result<Self> {
        check_rows(width, &features, &targets)?;
        if targets.is_empty() {
            return Err(Error::Precondition("a batch needs at least one row".into()));
        }
        Ok(Batch {
            width,
            features,
            targets,
        })
    }

    /// Builds a batch of class-labelled rows.
    pub fn from_rows(rows: &[Vec<T>], labels: &[usize]) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::Dimension {
                expected: rows.len(),
                found: labels.len(),
            });
        }
        let width = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != width) {
            return Err(Error::Dimension {
                expected: width,
                found: bad.len(),
            });
        }
        Batch::new(
            width,
            rows.concat(),
            labels.iter().map(|&c| Target::Class(c)).collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.features[i * self.width..(i + 1) * self.width]
    }

    pub fn target(&self, i: usize) -> Target<T> {
        self.targets[i]
    }

    /// Class label of row `i`, checked against `classes`.
    pub fn class(&self, i: usize, classes: usize) -> Result<usize> {
        match self.targets[i] {
            Target::Class(c) if c < classes => Ok(c),
            Target::Class(c) => Err(Error::Precondition(format!(
                "label {c} in row {i} is outside 0..{classes}"
            ))),
            Target::Real(_) => Err(Error::Precondition(format!(
                "row {i} has a real-valued target; a class label is required"
            ))),
        }
    }
}

/// Gaussian clusters around centers drawn uniformly from `[-1, 1]^dim`.
///
/// Rows are class-major: all of class 0, then class 1, and so on.
pub fn gen_blobs<T: Scalar>(
    classes: usize,
    per_class: usize,
    dim: usize,
    spread: f64,
    seed: u64,
) -> Result<Dataset<T>> {
    if classes < 2 || per_class < 1 || dim < 1 {
        return Err(Error::Precondition(format!(
            "blobs need classes >= 2, per_class >= 1, dim >= 1 (got {classes}, {per_class}, {dim})"
        )));
    }
    if !(spread > 0.0 && spread.is_finite()) {
        return Err(Error::Precondition(format!(
            "spread must be > 0 (got {spread})"
        )));
    }
    let mut rng = SeededRng::new(seed, STREAM_DATA);
    let centers: Vec<Vec<f64>> = (0..classes)
        .map(|_| {
            (0..dim)
                .map(|_| rng.uniform(-BLOB_CENTER_RANGE, BLOB_CENTER_RANGE))
                .collect()
        })
        .collect();
    let mut features = Vec::with_capacity(classes * per_class * dim);
    let mut targets = Vec::with_capacity(classes * per_class);
    for (class, center) in centers.iter().enumerate() {
        for _ in 0..per_class {
            features.extend(
                center
                    .iter()
                    .map(|&c| T::lit(c + spread * rng.standard_normal())),
            );
            targets.push(Target::Class(class));
        }
    }
    Dataset::new(dim, features, targets, Split::Train)
}

/// Curvatures drawn uniformly from `[lo, hi]` for a diagonal quadratic bowl.
pub fn gen_quadratic_target<T: Scalar>(dim: usize, lo: f64, hi: f64, seed: u64) -> Result<Vec<T>> {
    if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
        return Err(Error::Precondition(format!(
            "curvature range must satisfy 0 < lo <= hi (got [{lo}, {hi}])"
        )));
    }
    let mut rng = SeededRng::new(seed, STREAM_DATA);
    Ok((0..dim)
        .map(|_| T::lit(rng.uniform(lo, hi).min(hi)))
        .collect())
}

/// Reads a numeric CSV file, shuffles it with `seed` and splits off the first
/// `round(n · split_fraction)` rows for training.
///
/// Targets become class labels when every target cell is a non-negative
/// integer, and real values otherwise.
pub fn load_csv<T: Scalar>(
    path: &Path,
    target_column: usize,
    split_fraction: f64,
    seed: u64,
) -> Result<(Dataset<T>, Dataset<T>)> {
    if !(split_fraction > 0.0 && split_fraction < 1.0) {
        return Err(Error::Precondition(format!(
            "split fraction must be in (0, 1) (got {split_fraction})"
        )));
    }
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .quoting(false)
        .flexible(true)
        .from_reader(file);

    let parse_error = |row: usize, column: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        row,
        column,
        message,
    };

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width: Option<usize> = None;
    for (line_index, record) in reader.records().enumerate() {
        let line = line_index + 1;
        let record = record.map_err(|e| parse_error(line, 0, e.to_string()))?;
        let parsed: Vec<std::result::Result<f64, _>> = record
            .iter()
            .map(|cell| cell.trim().parse::<f64>())
            .collect();
        if line == 1 && parsed.iter().any(|p| p.is_err()) {
            width = Some(record.len());
            continue;
        }
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            return Err(parse_error(
                line,
                record.len().min(expected) + 1,
                format!("expected {expected} columns, found {}", record.len()),
            ));
        }
        let mut values = Vec::with_capacity(expected);
        for (col, (cell, p)) in record.iter().zip(parsed).enumerate() {
            match p {
                Ok(v) if v.is_finite() => values.push(v),
                _ => {
                    return Err(parse_error(
                        line,
                        col + 1,
                        format!("non-numeric cell {cell:?}"),
                    ))
                }
            }
        }
        rows.push(values);
    }
    if rows.is_empty() {
        return Err(parse_error(0, 0, "file contains no data rows".into()));
    }
    let columns = width.unwrap_or(0);
    if target_column >= columns {
        return Err(Error::Precondition(format!(
            "target column {target_column} is out of range for {columns} columns"
        )));
    }

    let as_class = rows.iter().all(|r| {
        let t = r[target_column];
        t >= 0.0 && t.fract() == 0.0 && t <= usize::MAX as f64
    });
    let mut features = Vec::with_capacity(rows.len() * (columns - 1));
    let mut targets = Vec::with_capacity(rows.len());
    for r in &rows {
        for (c, &v) in r.iter().enumerate() {
            if c != target_column {
                features.push(T::lit(v));
            }
        }
        let t = r[target_column];
        targets.push(if as_class {
            Target::Class(t as usize)
        } else {
            Target::Real(T::lit(t))
        });
    }
    let all = Dataset::new(columns - 1, features, targets, Split::Train)?;

    let mut order: Vec<usize> = (0..all.len()).collect();
    SeededRng::new(seed, STREAM_SPLIT).shuffle(&mut order);
    let n_train = (all.len() as f64 * split_fraction).round() as usize;
    if n_train == 0 {
        return Err(Error::Precondition(format!(
            "split fraction {split_fraction} leaves no training rows out of {}",
            all.len()
        )));
    }
    let (train_idx, val_idx) = order.split_at(n_train.min(all.len()));
    Ok((
        all.select(train_idx, Split::Train),
        all.select(val_idx, Split::Validation),
    ))
}

/// Seeded train/validation split of an in-memory dataset, same rule as [`load_csv`].
pub fn split_dataset<T: Scalar>(
    dataset: &Dataset<T>,
    train_fraction: f64,
    seed: u64,
) -> Result<(Dataset<T>, Dataset<T>)> {
    if !(train_fraction > 0.0 && train_fraction <= 1.0) {
        return Err(Error::Precondition(format!(
            "train fraction must be in (0, 1] (got {train_fraction})"
        )));
    }
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    SeededRng::new(seed, STREAM_SPLIT).shuffle(&mut order);
    let n_train =
        ((dataset.len() as f64 * train_fraction).round() as usize).clamp(1, dataset.len());
    let (train_idx, val_idx) = order.split_at(n_train);
    Ok((
        dataset.select(train_idx, Split::Train),
        dataset.select(val_idx, Split::Validation),
    ))
}
