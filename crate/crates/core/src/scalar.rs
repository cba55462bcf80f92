//! Floating-point abstraction shared by every numerical module.

use std::fmt::{Debug, Display, LowerExp};

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Real scalar the solver stack is generic over (`f32` or `f64`).
pub trait Scalar: RealField + Copy + FromPrimitive + ToPrimitive + LowerExp + Display + Debug + Send + Sync + 'static {
    /// Converts an `f64` literal into the working precision.
    #[inline]
    fn lit(v: f64) -> Self {
        <Self as FromPrimitive>::from_f64(v).expect("finite literal")
    }

    #[inline]
    fn from_usize_lossy(v: usize) -> Self {
        <Self as FromPrimitive>::from_usize(v).expect("representable count")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        <Self as ToPrimitive>::to_f64(&self).unwrap_or(f64::NAN)
    }

    /// Unit roundoff of the working precision.
    fn unit_roundoff() -> Self;
}

impl Scalar for f32 {
    fn unit_roundoff() -> Self {
        f32::EPSILON
    }
}

impl Scalar for f64 {
    fn unit_roundoff() -> Self {
        f64::EPSILON
    }
}
