//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display, LowerExp};

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating point type the solvers and estimators are generic over.
///
/// Implemented for `f32` and `f64`. Tolerances in the public API are given in
/// the scalar type itself, so callers working in `f32` should loosen them to
/// match single precision.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
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
    /// Lossy conversion from an `f64` literal.
    fn of(v: f64) -> Self;

    /// Lossy conversion from an index or count.
    fn of_usize(n: usize) -> Self;

    fn as_f64(self) -> f64;
}

impl Scalar for f32 {
    #[inline]
    fn of(v: f64) -> Self {
        v as f32
    }
    #[inline]
    fn of_usize(n: usize) -> Self {
        n as f32
    }
    #[inline]
    fn as_f64(self) -> f64 {
        self as f64
    }
}

impl Scalar for f64 {
    #[inline]
    fn of(v: f64) -> Self {
        v
    }
    #[inline]
    fn of_usize(n: usize) -> Self {
        n as f64
    }
    #[inline]
    fn as_f64(self) -> f64 {
        self
    }
}

pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

pub(crate) fn norm2<T: Scalar>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

pub(crate) fn norm1<T: Scalar>(a: &[T]) -> T {
    a.iter().fold(T::zero(), |acc, &x| acc + x.abs())
}

pub(crate) fn dist2<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .fold(T::zero(), |acc, (&x, &y)| acc + (x - y) * (x - y))
        .sqrt()
}

pub(crate) fn sub<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

/// `x + gamma * d`, the convex-combination update used by every solver.
pub(crate) fn axpy<T: Scalar>(x: &[T], gamma: T, d: &[T]) -> Vec<T> {
    x.iter().zip(d).map(|(&xi, &di)| xi + gamma * di).collect()
}

pub(crate) fn all_finite<T: Scalar>(a: &[T]) -> bool {
    a.iter().all(|v| v.is_finite())
}

pub(crate) fn to_f64_vec<T: Scalar>(a: &[T]) -> Vec<f64> {
    a.iter().map(|v| v.as_f64()).collect()
}
