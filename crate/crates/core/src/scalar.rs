//! Scalar abstraction shared by every numeric module.

use std::fmt::{Debug, Display, LowerExp};
use std::str::FromStr;

use nalgebra::RealField;
use num_traits::FromPrimitive;

/// Floating point scalar the simulator can run on: `f32` or `f64`.
pub trait Real:
    RealField + Copy + FromPrimitive + Display + LowerExp + Debug + FromStr + Send + Sync + 'static
{
    /// Converts an `f64` literal, panicking only if the target type cannot
    /// represent it at all (never the case for `f32`/`f64`).
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    fn to_f64(self) -> f64;

    /// Machine epsilon of the scalar type.
    fn eps() -> Self;

    fn is_finite_value(self) -> bool {
        self.to_f64().is_finite()
    }
}

impl Real for f32 {
    fn to_f64(self) -> f64 {
        self as f64
    }

    fn eps() -> Self {
        f32::EPSILON
    }
}

impl Real for f64 {
    fn to_f64(self) -> f64 {
        self
    }

    fn eps() -> Self {
        f64::EPSILON
    }
}
