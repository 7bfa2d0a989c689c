//! Scalar abstractions.
//!
//! Probability computations (step laws, offspring laws, return-probability
//! recursions, Green sums, extinction fixed points) are written against
//! [`Real`], implemented for `f32` and `f64`. Mass redistribution on
//! percolation windows only needs field arithmetic and is written against
//! [`Field`], which additionally covers exact rationals.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, Num, ToPrimitive};

/// Floating point scalar: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Default + Debug + Display + Send + Sync + 'static
{
    /// Lossy conversion from `f64`; only used for literal constants.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal fits the scalar type")
    }

    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count fits the scalar type")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Ordered field scalar. `f64` and [`crate::Rational`] both qualify.
pub trait Field: Num + Clone + PartialOrd + FromPrimitive + Debug + Send + Sync {
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count fits the scalar type")
    }
}

impl<T> Field for T where T: Num + Clone + PartialOrd + FromPrimitive + Debug + Send + Sync {}

/// Relative-plus-absolute closeness test used for normalisation checks.
pub(crate) fn close<T: Real>(a: T, b: T, tol: T) -> bool {
    (a - b).abs() <= tol * (T::one() + a.abs().max(b.abs()))
}

/// Normalisation tolerance: 1e-12, floored at a few ulps of `T`.
pub(crate) fn tolerance<T: Real>() -> T {
    T::lit(1e-12).max(T::epsilon() * T::lit(16.0))
}
