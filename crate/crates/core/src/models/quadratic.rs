use super::{finite_loss, Model};
use crate::data::Batch;
use crate::numerics::{GradVec, ParamVec};
use crate::{Error, Result, Scalar};

/// `½ Σ curvature[i]·params[i]²`.
pub fn quadratic_loss<T: Scalar>(params: &ParamVec<T>, curvature: &[T]) -> Result<T> {
    check_curvature(curvature, params.len())?;
    let half = T::lit(0.5);
    let total = params
        .as_slice()
        .iter()
        .zip(curvature)
        .fold(T::zero(), |acc, (&x, &c)| acc + c * x * x);
    finite_loss(half * total)
}

fn check_curvature<T: Scalar>(curvature: &[T], len: usize) -> Result<()> {
    if curvature.len() != len {
        return Err(Error::Dimension {
            expected: len,
            found: curvature.len(),
        });
    }
    if let Some(i) = curvature
        .iter()
        .position(|&c| !(c > T::zero() && c.is_finite()))
    {
        return Err(Error::Precondition(format!(
            "curvature entry {i} must be positive (got {})",
            curvature[i]
        )));
    }
    Ok(())
}

/// Diagonal convex bowl with its minimum at the origin. Ignores batch contents.
#[derive(Clone, Debug)]
pub struct QuadraticBowl<T> {
    curvature: Vec<T>,
    params: ParamVec<T>,
}

impl<T: Scalar> QuadraticBowl<T> {
    pub fn new(curvature: Vec<T>, params: ParamVec<T>) -> Result<Self> {
        check_curvature(&curvature, params.len())?;
        Ok(QuadraticBowl { curvature, params })
    }

    pub fn curvature(&self) -> &[T] {
        &self.curvature
    }
}

impl<T: Scalar> Model<T> for QuadraticBowl<T> {
    fn params(&self) -> &ParamVec<T> {
        &self.params
    }

    fn params_mut(&mut self) -> &mut ParamVec<T> {
        &mut self.params
    }

    fn loss(&self, _batch: &Batch<T>) -> Result<T> {
        quadratic_loss(&self.params, &self.curvature)
    }

    fn loss_and_grad(&self, batch: &Batch<T>) -> Result<(T, GradVec<T>)> {
        let loss = self.loss(batch)?;
        let grad = self
            .params
            .as_slice()
            .iter()
            .zip(&self.curvature)
            .map(|(&x, &c)| c * x)
            .collect();
        Ok((loss, ParamVec::new(grad)?))
    }
}

/// `f(θ) = Σ coefficients[i]·θ[i]`: its gradient does not depend on θ.
#[derive(Clone, Debug)]
pub struct LinearObjective<T> {
    coefficients: ParamVec<T>,
    params: ParamVec<T>,
}

impl<T: Scalar> LinearObjective<T> {
    pub fn new(coefficients: Vec<T>, params: ParamVec<T>) -> Result<Self> {
        let coefficients = ParamVec::new(coefficients)?;
        if coefficients.len() != params.len() {
            return Err(Error::Dimension {
                expected: params.len(),
                found: coefficients.len(),
            });
        }
        Ok(LinearObjective {
            coefficients,
            params,
        })
    }
}

impl<T: Scalar> Model<T> for LinearObjective<T> {
    fn params(&self) -> &ParamVec<T> {
        &self.params
    }

    fn params_mut(&mut self) -> &mut ParamVec<T> {
        &mut self.params
    }

    fn loss(&self, _batch: &Batch<T>) -> Result<T> {
        let total = self
            .params
            .as_slice()
            .iter()
            .zip(self.coefficients.as_slice())
            .fold(T::zero(), |acc, (&x, &c)| acc + c * x);
        finite_loss(total)
    }

    fn loss_and_grad(&self, batch: &Batch<T>) -> Result<(T, GradVec<T>)> {
        Ok((self.loss(batch)?, self.coefficients.clone()))
    }
}
