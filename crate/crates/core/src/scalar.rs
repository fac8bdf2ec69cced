//! Floating point abstraction shared by every scoring routine.
//!
//! Metric math, BM25 weights, dense inner products and preference fractions
//! are written once against [`Scalar`] and instantiated for `f32` or `f64`.
//! The crate root exports `f64` aliases for everyday use.

use num_traits::{Float, FromPrimitive, NumAssign, NumCast};
use serde::de::DeserializeOwned;
use serde::Serialize;
use std::fmt::{Debug, Display};
use std::iter::Sum;

/// floating point: f32 or f64
pub trait Scalar:
    Float
    + FromPrimitive
    + NumCast
    + NumAssign
    + Sum
    + Debug
    + Display
    + Default
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + 'static
{
    /// Width in bytes of the on-disk representation.
    const WIDTH: u8;

    fn from_usize_lossy(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).expect("usize is representable as a float")
    }

    fn from_f64_lossy(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("f64 is representable as a float")
    }

    fn hundred() -> Self {
        Self::from_f64_lossy(100.0)
    }

    fn half() -> Self {
        Self::from_f64_lossy(0.5)
    }
}

impl Scalar for f32 {
    const WIDTH: u8 = 4;
}

impl Scalar for f64 {
    const WIDTH: u8 = 8;
}

/// Mean of an iterator, `0` for an empty one.
pub fn mean<T: Scalar>(values: impl IntoIterator<Item = T>) -> T {
    let mut sum = T::zero();
    let mut n = 0usize;
    for v in values {
        sum += v;
        n += 1;
    }
    if n == 0 {
        T::zero()
    } else {
        sum / T::from_usize_lossy(n)
    }
}

/// Round half away from zero to one decimal, the precision reports use.
pub fn round1<T: Scalar>(x: T) -> T {
    let ten = T::from_f64_lossy(10.0);
    (x * ten).round() / ten
}
