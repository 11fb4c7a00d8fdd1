//! Scalar abstraction shared by the model modules.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating-point scalar the models are written against: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
}

impl<T> Real for T where
    T: Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
}

/// Converts an `f64` literal into the working scalar.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("literal representable in scalar type")
}

/// Converts a count into the working scalar.
#[inline]
pub fn count<T: Real>(n: u32) -> T {
    T::from_u32(n).expect("count representable in scalar type")
}

/// Rounds to the nearest integer, ties away from zero.
///
/// Values within 1e-9 of a half-integer are snapped onto it first, so that a
/// product such as `265 * 0.7` lands on the tie it denotes instead of the
/// neighbouring binary approximation.
pub fn round_half_away(x: f64) -> i64 {
    let frac = x - x.trunc();
    let snapped = if (frac.abs() - 0.5).abs() < 1e-9 { x.trunc() + 0.5 * frac.signum() } else { x };
    snapped.round() as i64
}
