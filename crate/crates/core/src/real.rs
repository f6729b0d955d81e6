//! Scalar abstraction for the numeric layer.

use num_traits::{Float, FloatConst, FromPrimitive, NumAssignOps};

/// Floating-point scalar the library is generic over.
///
/// Heavy kernels (special functions, quadrature, RNG output) always run in
/// `f64` internally and convert at the boundary, so an `f32` instantiation
/// gets correctly rounded `f64` results rather than a low-precision
/// re-derivation.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + NumAssignOps
    + core::fmt::Debug
    + core::fmt::Display
    + serde::Serialize
    + serde::de::DeserializeOwned
    + Send
    + Sync
    + 'static
{
    fn of(x: f64) -> Self;
    fn wide(self) -> f64;
}

impl Real for f64 {
    #[inline]
    fn of(x: f64) -> Self {
        x
    }
    #[inline]
    fn wide(self) -> f64 {
        self
    }
}

impl Real for f32 {
    #[inline]
    fn of(x: f64) -> Self {
        x as f32
    }
    #[inline]
    fn wide(self) -> f64 {
        self as f64
    }
}

/// Shorthand for `T::of`, handy in generic numeric expressions.
#[inline]
pub fn c<T: Real>(x: f64) -> T {
    T::of(x)
}
