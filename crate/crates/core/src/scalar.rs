//! Numeric abstractions shared by every module.
//!
//! Real-valued computation (layers, normalized walk sums, spectral norms,
//! statistics) is generic over [`Scalar`], implemented for `f32` and `f64`.
//! Raw walk counting is generic over [`WalkCount`], which covers the
//! primitive unsigned integers and arbitrary-precision integers such as
//! `num_bigint::BigUint`.

use std::fmt::{Debug, Display, LowerExp};
use std::hash::Hash;
use std::iter::Sum;

use num_traits::{CheckedAdd, Float, FromPrimitive, One, ToPrimitive, Zero};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating-point type usable throughout the crate.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Default
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Converts an `f64` constant, rounding to the nearest representable value.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 converts to any Scalar")
    }

    /// Lossy widening used for reports and statistics.
    fn as_f64(self) -> f64 {
        self.to_f64().expect("Scalar converts to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Exact counting type for raw walk counts. Addition is always checked.
pub trait WalkCount: Clone + Ord + Hash + Zero + One + CheckedAdd + ToPrimitive + Debug + Display {}

impl<C> WalkCount for C where C: Clone + Ord + Hash + Zero + One + CheckedAdd + ToPrimitive + Debug + Display {}

/// Euclidean norm of a slice.
pub fn norm2<T: Scalar>(xs: &[T]) -> T {
    xs.iter().fold(T::zero(), |acc, &x| acc + x * x).sqrt()
}

/// Euclidean distance between two equal-length slices.
pub fn distance2<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + (x - y) * (x - y)).sqrt()
}
