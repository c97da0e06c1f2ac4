//! Scalar abstraction shared by the probability and risk arithmetic.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating-point scalar the engine computes with: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + Debug + Display + Default + Send + Sync + Serialize + DeserializeOwned + 'static
{
    /// Converts an `f64` literal into this scalar.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Clamps `x` into the closed unit interval. NaN maps to zero.
pub fn clamp_unit<T: Scalar>(x: T) -> T {
    if x.is_nan() {
        T::zero()
    } else {
        x.max(T::zero()).min(T::one())
    }
}

/// Finite and `>= 0`; false for NaN.
pub(crate) fn is_non_negative<T: Scalar>(x: T) -> bool {
    x.is_finite() && x >= T::zero()
}

pub(crate) fn in_unit<T: Scalar>(x: T) -> bool {
    x >= T::zero() && x <= T::one()
}
