use std::fmt::{Debug, Display, LowerExp};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point element type for parameters, moments and losses.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Debug + Display + LowerExp + Default + Send + Sync + 'static
{
    /// Converts an `f64` constant into this type.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal is representable")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
