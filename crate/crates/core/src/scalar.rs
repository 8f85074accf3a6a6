//! Numeric traits shared by the model and evaluation code.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, Num, NumAssign};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating point scalar used by the fitted models: `f32` or `f64`.
pub trait Scalar:
    Float
    + FromPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Converts an `f64` literal into this scalar.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable")
    }

    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable")
    }

    /// Default absolute tolerance for first-order optimality checks.
    fn default_gradient_tol() -> Self {
        Self::lit(1e-8).max(Self::epsilon() * Self::lit(1e4))
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Ordered field used by the confusion-matrix metrics. Besides the floats this
/// covers exact rationals such as `num_rational::Ratio<i64>`.
pub trait Field: Num + Copy + PartialOrd + FromPrimitive + Debug {}

impl<T> Field for T where T: Num + Copy + PartialOrd + FromPrimitive + Debug {}
