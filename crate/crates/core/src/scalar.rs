//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating point type the models, samplers and allocators are generic over.
///
/// Implemented for `f32` and `f64`. Constants are written as `f64` literals and
/// converted through [`Scalar::lit`].
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Converts an `f64` constant into this scalar type.
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 constant representable in scalar type")
    }

    fn from_usize_lossy(v: usize) -> Self {
        Self::from_usize(v).expect("usize representable in scalar type")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Machine-independent relative tolerance used by the linear solvers.
    fn solver_eps() -> Self;
}

impl Scalar for f32 {
    fn solver_eps() -> Self {
        1e-6
    }
}

impl Scalar for f64 {
    fn solver_eps() -> Self {
        1e-13
    }
}

/// Total order on scalars that sorts NaN last.
pub(crate) fn total_cmp<S: Scalar>(a: &S, b: &S) -> std::cmp::Ordering {
    a.partial_cmp(b).unwrap_or_else(|| a.is_nan().cmp(&b.is_nan()))
}
