//! Scalar abstraction: everything numeric in this crate is generic over a
//! floating-point type implementing [`Real`]; `f64` is the default for
//! experiments, `f32` works for quick exploratory runs.

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Floating-point scalar usable throughout the crate: `f32` or `f64`.
pub trait Real: Float + FloatConst + FromPrimitive + NumAssign + rustfft::FftNum + Default {}

impl Real for f32 {}
impl Real for f64 {}

/// Convert an `f64` literal to the working scalar type.
///
/// Panics only if the conversion is unrepresentable, which cannot happen for
/// the finite constants used in this crate.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("finite constant must convert")
}

/// Convert a lattice integer to the working scalar type.
#[inline]
pub fn int<T: Real>(x: i64) -> T {
    T::from_i64(x).expect("lattice integer must convert")
}
