//! Scalar abstraction for the floating-point kernels.
//!
//! Everything geometric is written over [`Real`] so the kernels work at
//! `f32` or `f64`; the crate-root aliases pin `f64` for the statistical
//! layer, whose tolerances are double-precision.

use std::fmt::{Debug, Display};
use std::iter::Sum;

/// Floating-point scalar: `num_traits::Float` plus the special functions
/// the lattice kernels need.
pub trait Real:
    num_traits::Float
    + num_traits::FromPrimitive
    + num_traits::ToPrimitive
    + num_traits::NumAssign
    + Sum
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Natural log of the Gamma function.
    fn ln_gamma(self) -> Self;

    fn pi() -> Self {
        r64(std::f64::consts::PI)
    }
}

/// Shorthand conversion from `f64` into any [`Real`].
pub fn r64<R: Real>(x: f64) -> R {
    <R as num_traits::FromPrimitive>::from_f64(x).expect("f64 conversion")
}

/// Shorthand conversion from `usize` into any [`Real`].
pub fn rus<R: Real>(n: usize) -> R {
    <R as num_traits::FromPrimitive>::from_usize(n).expect("usize conversion")
}

impl Real for f64 {
    fn ln_gamma(self) -> Self {
        libm::lgamma(self)
    }
}

impl Real for f32 {
    fn ln_gamma(self) -> Self {
        libm::lgammaf(self)
    }
}
