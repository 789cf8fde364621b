//! Scalar abstraction for the numeric core.
//!
//! Every statistic, feature value, and score in this crate is generic over a
//! floating-point scalar so the same code runs in `f32` or `f64`. The crate
//! root exports `f64`-typed aliases, which is what the CLI and the evaluation
//! harness use.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating-point scalar usable throughout the numeric core.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum<Self>
    + Default
    + Debug
    + Display
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + 'static
{
    /// Lift an `f64` constant into this scalar type.
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("finite f64 converts to any Scalar")
    }

    /// Lift an integer count.
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count converts to any Scalar")
    }

    /// Lossy view as `f64` (exact for f64, widened for f32).
    fn as_f64(self) -> f64 {
        self.to_f64().expect("any Scalar converts to f64")
    }
}

impl<T> Scalar for T where
    T: Float
        + FromPrimitive
        + ToPrimitive
        + AddAssign
        + SubAssign
        + MulAssign
        + DivAssign
        + Sum<T>
        + Default
        + Debug
        + Display
        + Serialize
        + DeserializeOwned
        + Send
        + Sync
        + 'static
{
}
