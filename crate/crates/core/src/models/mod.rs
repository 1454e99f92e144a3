//! Differentiable objectives with analytic gradients, plus a central
//! finite-difference gradient used to check them.
//!
//! Batch losses are means over rows, so γ means the same thing at any batch size.

mod logreg;
mod mlp;
mod quadratic;

pub use logreg::LogisticRegression;
pub use mlp::Mlp;
pub use quadratic::{quadratic_loss, LinearObjective, QuadraticBowl};

use crate::data::Batch;
use crate::numerics::{GradVec, ParamVec};
use crate::rng::{SeededRng, STREAM_INIT};
use crate::{Error, Result, Scalar};

/// A loss over flattened weights. Holds its weights; has no other mutable state.
pub trait Model<T: Scalar> {
    fn params(&self) -> &ParamVec<T>;

    fn params_mut(&mut self) -> &mut ParamVec<T>;

    /// Mean loss over the batch at the current weights.
    fn loss(&self, batch: &Batch<T>) -> Result<T>;

    /// Mean loss and its gradient at the current weights.
    fn loss_and_grad(&self, batch: &Batch<T>) -> Result<(T, GradVec<T>)>;

    /// Fraction of rows classified correctly, for classifiers.
    fn accuracy(&self, _batch: &Batch<T>) -> Result<Option<T>> {
        Ok(None)
    }
}

/// Central differences `(f(θ + h·e_i) − f(θ − h·e_i)) / 2h` for every coordinate.
///
/// The model's weights are bitwise identical to their starting values on return.
pub fn finite_difference_gradient<T: Scalar, M: Model<T> + ?Sized>(
    model: &mut M,
    batch: &Batch<T>,
    h: T,
) -> Result<GradVec<T>> {
    if !(h > T::zero() && h.is_finite()) {
        return Err(Error::Precondition(format!("step h must be > 0 (got {h})")));
    }
    let saved = model.params().snapshot();
    let two_h = h + h;
    let mut grad = Vec::with_capacity(saved.len());
    let result = (|| {
        for (i, &x) in saved.as_slice().iter().enumerate() {
            model.params_mut().set(i, x + h)?;
            let up = model.loss(batch)?;
            model.params_mut().set(i, x - h)?;
            let down = model.loss(batch)?;
            model.params_mut().set(i, x)?;
            grad.push((up - down) / two_h);
        }
        Ok(())
    })();
    model.params_mut().restore(&saved)?;
    result?;
    ParamVec::new(grad)
}

/// Largest per-coordinate `|a − b| / max(|a|, |b|, 1e-8)`.
pub fn max_relative_error<T: Scalar>(a: &ParamVec<T>, b: &ParamVec<T>) -> Result<T> {
    if a.len() != b.len() {
        return Err(Error::Dimension {
            expected: a.len(),
            found: b.len(),
        });
    }
    let floor = T::lit(1e-8);
    Ok(a.as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(&x, &y)| (x - y).abs() / x.abs().max(y.abs()).max(floor))
        .fold(T::zero(), T::max))
}

/// Uniform draws in `[-1/√fan_in, 1/√fan_in]`.
fn uniform_fan_in<T: Scalar>(rng: &mut SeededRng, count: usize, fan_in: usize) -> Vec<T> {
    let r = 1.0 / (fan_in.max(1) as f64).sqrt();
    (0..count).map(|_| T::lit(rng.uniform(-r, r))).collect()
}

fn init_rng(seed: u64) -> SeededRng {
    SeededRng::new(seed, STREAM_INIT)
}

/// Numerically stable `-ln softmax(logits)[label]`, and the softmax itself.
pub fn softmax_cross_entropy<T: Scalar>(logits: &[T], label: usize) -> (T, Vec<T>) {
    let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let exps: Vec<T> = logits.iter().map(|&z| (z - max).exp()).collect();
    let total = exps.iter().copied().fold(T::zero(), |a, b| a + b);
    let loss = total.ln() - (logits[label] - max);
    (loss, exps.into_iter().map(|e| e / total).collect())
}

fn argmax<T: Scalar>(values: &[T]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

fn check_width<T: Scalar>(batch: &Batch<T>, expected: usize) -> Result<()> {
    if batch.width() != expected {
        return Err(Error::Dimension {
            expected,
            found: batch.width(),
        });
    }
    Ok(())
}

fn finite_loss<T: Scalar>(loss: T) -> Result<T> {
    if loss.is_finite() {
        Ok(loss)
    } else {
        Err(Error::NonFinite {
            context: "loss",
            index: 0,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Batch;
    use crate::numerics::ParamVec;

    #[test]
    fn fd_on_quadratic() {
        let mut bowl = QuadraticBowl::new(vec![1.0f64], ParamVec::new(vec![2.0]).unwrap()).unwrap();
        let batch = Batch::from_rows(&[vec![]], &[0]).unwrap();
        let g = finite_difference_gradient(&mut bowl, &batch, 1e-5).unwrap();
        assert!((g.as_slice()[0] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn fd_on_linear_is_exact_for_dyadic_steps() {
        let mut lin = LinearObjective::new(vec![3.0], ParamVec::new(vec![0.75]).unwrap()).unwrap();
        let batch = Batch::from_rows(&[vec![]], &[0]).unwrap();
        for h in [0.5, 2f64.powi(-10), 2f64.powi(-20)] {
            let g = finite_difference_gradient(&mut lin, &batch, h).unwrap();
            assert_eq!(g.as_slice(), &[3.0]);
        }
        for h in [1e-3, 1e-5, 0.1] {
            let g = finite_difference_gradient(&mut lin, &batch, h).unwrap();
            assert!((g.as_slice()[0] - 3.0).abs() < 1e-9);
        }
    }

    #[test]
    fn fd_restores_weights_bitwise() {
        let mut net = Mlp::<f64>::init(&[3, 4, 2], 17).unwrap();
        let before = net.params().snapshot();
        let batch =
            Batch::from_rows(&[vec![0.3, -0.1, 0.7], vec![1.0, 0.0, -2.0]], &[0, 1]).unwrap();
        finite_difference_gradient(&mut net, &batch, 1e-5).unwrap();
        assert!(net.params().bitwise_eq(&before));

        assert!(finite_difference_gradient(&mut net, &batch, 0.0).is_err());
        // a failing loss still leaves the weights restored
        let bad = Batch::from_rows(&[vec![0.0, 0.0, 0.0]], &[7]).unwrap();
        assert!(finite_difference_gradient(&mut net, &bad, 1e-5).is_err());
        assert!(net.params().bitwise_eq(&before));
    }

    #[test]
    fn relative_error_floor() {
        let a = ParamVec::new(vec![1.0, 0.0]).unwrap();
        let b = ParamVec::new(vec![1.0 + 1e-9, 1e-12]).unwrap();
        let e = max_relative_error(&a, &b).unwrap();
        assert!(e < 2e-4 && e > 0.0);
    }

    #[test]
    fn softmax_is_stable() {
        let (loss, p) = softmax_cross_entropy(&[1000.0f64, 0.0], 0);
        assert!(loss.abs() < 1e-12);
        assert!((p[0] - 1.0).abs() < 1e-12);
        let (loss, _) = softmax_cross_entropy(&[0.0f64, 0.0], 1);
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-15);
    }
}
