use super::{
    argmax, check_width, finite_loss, init_rng, softmax_cross_entropy, uniform_fan_in, Model,
};
use crate::data::Batch;
use crate::numerics::{GradVec, ParamVec};
use crate::{Error, Result, Scalar};

/// Multinomial logistic regression with softmax cross-entropy.
///
/// Layout: the `classes × features` weight matrix row by row, then `classes` biases.
#[derive(Clone, Debug)]
pub struct LogisticRegression<T> {
    classes: usize,
    features: usize,
    params: ParamVec<T>,
}

impl<T: Scalar> LogisticRegression<T> {
    pub fn param_count(classes: usize, features: usize) -> usize {
        classes * (features + 1)
    }

    pub fn with_params(classes: usize, features: usize, params: ParamVec<T>) -> Result<Self> {
        if classes < 2 {
            return Err(Error::Precondition(format!(
                "need at least 2 classes (got {classes})"
            )));
        }
        let expected = Self::param_count(classes, features);
        if params.len() != expected {
            return Err(Error::Dimension {
                expected,
                found: params.len(),
            });
        }
        Ok(LogisticRegression {
            classes,
            features,
            params,
        })
    }

    pub fn zeros(classes: usize, features: usize) -> Result<Self> {
        Self::with_params(
            classes,
            features,
            ParamVec::zeros(Self::param_count(classes, features)),
        )
    }

    /// Weights and biases uniform in `[-1/√features, 1/√features]`.
    pub fn init(classes: usize, features: usize, seed: u64) -> Result<Self> {
        let values = uniform_fan_in(
            &mut init_rng(seed),
            Self::param_count(classes, features),
            features,
        );
        Self::with_params(classes, features, ParamVec::new(values)?)
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    fn logits(&self, x: &[T]) -> Vec<T> {
        let p = self.params.as_slice();
        let bias = &p[self.classes * self.features..];
        (0..self.classes)
            .map(|c| {
                let w = &p[c * self.features..(c + 1) * self.features];
                w.iter()
                    .zip(x)
                    .fold(bias[c], |acc, (&wi, &xi)| acc + wi * xi)
            })
            .collect()
    }
}

impl<T: Scalar> Model<T> for LogisticRegression<T> {
    fn params(&self) -> &ParamVec<T> {
        &self.params
    }

    fn params_mut(&mut self) -> &mut ParamVec<T> {
        &mut self.params
    }

    fn loss(&self, batch: &Batch<T>) -> Result<T> {
        check_width(batch, self.features)?;
        let mut total = T::zero();
        for i in 0..batch.len() {
            let label = batch.class(i, self.classes)?;
            total = total + softmax_cross_entropy(&self.logits(batch.row(i)), label).0;
        }
        finite_loss(total / T::from_usize(batch.len()).unwrap())
    }

    fn loss_and_grad(&self, batch: &Batch<T>) -> Result<(T, GradVec<T>)> {
        check_width(batch, self.features)?;
        let bias_offset = self.classes * self.features;
        let mut grad = vec![T::zero(); self.params.len()];
        let mut total = T::zero();
        for i in 0..batch.len() {
            let label = batch.class(i, self.classes)?;
            let x = batch.row(i);
            let (loss, probs) = softmax_cross_entropy(&self.logits(x), label);
            total = total + loss;
            for (c, &p) in probs.iter().enumerate() {
                let delta = if c == label { p - T::one() } else { p };
                for (gw, &xi) in grad[c * self.features..(c + 1) * self.features]
                    .iter_mut()
                    .zip(x)
                {
                    *gw = *gw + delta * xi;
                }
                grad[bias_offset + c] = grad[bias_offset + c] + delta;
            }
        }
        let n = T::from_usize(batch.len()).unwrap();
        let grad = grad.into_iter().map(|g| g / n).collect();
        Ok((finite_loss(total / n)?, ParamVec::new(grad)?))
    }

    fn accuracy(&self, batch: &Batch<T>) -> Result<Option<T>> {
        check_width(batch, self.features)?;
        let mut correct = 0usize;
        for i in 0..batch.len() {
            if argmax(&self.logits(batch.row(i))) == batch.class(i, self.classes)? {
                correct += 1;
            }
        }
        Ok(Some(
            T::from_usize(correct).unwrap() / T::from_usize(batch.len()).unwrap(),
        ))
    }
}
