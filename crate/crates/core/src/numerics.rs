//! Flat parameter vectors and the elementwise kernels the optimizer is built from.
//!
//! Every entry of a [`ParamVec`] is finite. Operations that would produce a
//! NaN or an infinity return [`Error::NonFinite`] instead of propagating it.

use crate::{Error, Result, Scalar};

/// Flattened model weights. All entries are finite.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamVec<T>(Vec<T>);

/// Gradient of a loss with respect to a [`ParamVec`] of the same length.
pub type GradVec<T> = ParamVec<T>;

fn check_finite<T: Scalar>(values: &[T], context: &'static str) -> Result<()> {
    match values.iter().position(|x| !x.is_finite()) {
        Some(index) => Err(Error::NonFinite { context, index }),
        None => Ok(()),
    }
}

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::Dimension { expected, found })
    }
}

impl<T: Scalar> ParamVec<T> {
    pub fn new(values: Vec<T>) -> Result<Self> {
        check_finite(&values, "parameter vector")?;
        Ok(ParamVec(values))
    }

    pub fn zeros(len: usize) -> Self {
        ParamVec(vec![T::zero(); len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<T> {
        self.0
    }

    pub fn get(&self, index: usize) -> Option<T> {
        self.0.get(index).copied()
    }

    /// Overwrites one entry. Used by coordinate-wise probes such as finite differences.
    pub fn set(&mut self, index: usize, value: T) -> Result<()> {
        if !value.is_finite() {
            return Err(Error::NonFinite {
                context: "parameter write",
                index,
            });
        }
        let len = self.len();
        let slot = self.0.get_mut(index).ok_or(Error::Dimension {
            expected: index + 1,
            found: len,
        })?;
        *slot = value;
        Ok(())
    }

    /// `scale_a·self[i] + scale_b·other[i]`, elementwise.
    pub fn combine(&self, other: &Self, scale_a: T, scale_b: T) -> Result<Self> {
        check_len(self.len(), other.len())?;
        if !scale_a.is_finite() || !scale_b.is_finite() {
            return Err(Error::Precondition(
                "combination scales must be finite".into(),
            ));
        }
        let out: Vec<T> = self
            .0
            .iter()
            .zip(&other.0)
            .map(|(&a, &b)| scale_a * a + scale_b * b)
            .collect();
        check_finite(&out, "elementwise combination")?;
        Ok(ParamVec(out))
    }

    /// `m_hat[i] / (sqrt(v_hat[i]) + eps)`, elementwise. `eps` is added outside the root.
    pub fn adam_direction(m_hat: &Self, v_hat: &Self, eps: T) -> Result<Self> {
        check_len(m_hat.len(), v_hat.len())?;
        if !(eps.is_finite() && eps > T::zero()) {
            return Err(Error::Precondition(format!(
                "eps must be positive, got {eps}"
            )));
        }
        if let Some(i) = v_hat.0.iter().position(|&v| v < T::zero()) {
            return Err(Error::Invariant(format!(
                "second moment entry {i} is negative ({})",
                v_hat.0[i]
            )));
        }
        let out: Vec<T> = m_hat
            .0
            .iter()
            .zip(&v_hat.0)
            .map(|(&m, &v)| m / (v.sqrt() + eps))
            .collect();
        check_finite(&out, "adam direction")?;
        Ok(ParamVec(out))
    }

    /// `self[i] / denominator`, elementwise.
    pub fn divide_by(&self, denominator: T) -> Result<Self> {
        let out: Vec<T> = self.0.iter().map(|&x| x / denominator).collect();
        check_finite(&out, "elementwise division")?;
        Ok(ParamVec(out))
    }

    /// Elementwise square.
    pub fn squared(&self) -> Result<Self> {
        let out: Vec<T> = self.0.iter().map(|&x| x * x).collect();
        check_finite(&out, "elementwise square")?;
        Ok(ParamVec(out))
    }

    /// Independent copy of the current values.
    pub fn snapshot(&self) -> Self {
        self.clone()
    }

    /// Copies `saved` into `self` bit for bit.
    pub fn restore(&mut self, saved: &Self) -> Result<()> {
        check_len(self.len(), saved.len())?;
        self.0.copy_from_slice(&saved.0);
        Ok(())
    }

    /// `max_i |self[i] − other[i]|`; zero for empty vectors.
    pub fn max_abs_diff(&self, other: &Self) -> Result<T> {
        check_len(self.len(), other.len())?;
        Ok(self
            .0
            .iter()
            .zip(&other.0)
            .map(|(&a, &b)| (a - b).abs())
            .fold(T::zero(), T::max))
    }

    pub fn max_abs(&self) -> T {
        self.0.iter().map(|x| x.abs()).fold(T::zero(), T::max)
    }

    pub fn l2_norm(&self) -> T {
        self.0
            .iter()
            .map(|&x| x * x)
            .fold(T::zero(), |acc, x| acc + x)
            .sqrt()
    }

    /// Exact equality of the underlying bit patterns.
    pub fn bitwise_eq(&self, other: &Self) -> bool {
        self.len() == other.len()
            && self
                .0
                .iter()
                .zip(&other.0)
                .all(|(a, b)| a.to_f64_lossy().to_bits() == b.to_f64_lossy().to_bits())
    }
}

impl<T> AsRef<[T]> for ParamVec<T> {
    fn as_ref(&self) -> &[T] {
        &self.0
    }
}
