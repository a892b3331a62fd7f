//! Scalar abstraction for the numerical kernels.
//!
//! Everything downstream is written against [`Scalar`], which is satisfied by
//! `f32` and `f64`. Tolerances quoted elsewhere in the crate assume `f64`.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive};

/// Floating-point scalar: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + Debug + Display + Default + Sum + Send + Sync + 'static
{
}

impl<T> Scalar for T where
    T: Float + FromPrimitive + Debug + Display + Default + Sum + Send + Sync + 'static
{
}

/// Converts an `f64` constant into the working scalar type.
#[inline]
pub fn c<T: Scalar>(x: f64) -> T {
    T::from(x).expect("constant representable in scalar type")
}

/// π in the working scalar type.
#[inline]
pub fn pi<T: Scalar>() -> T {
    c(std::f64::consts::PI)
}

/// 2π in the working scalar type.
#[inline]
pub fn tau<T: Scalar>() -> T {
    c(2.0 * std::f64::consts::PI)
}
