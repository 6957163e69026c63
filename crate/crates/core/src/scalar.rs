//! Floating-point abstraction shared by the numeric modules.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// A real scalar the metrics, the mapper and the bound checks can run on.
///
/// Implemented for `f32` and `f64`. Counting-based quantities (AUROC pair
/// counts, bin counts) stay in integers and are converted only at the end.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
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
    /// Allowed deviation of a probability mass total from one.
    const MASS_TOLERANCE: f64;

    /// Converts an `f64` constant. Every finite `f64` is representable (possibly rounded).
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable")
    }

    fn half() -> Self {
        Self::lit(0.5)
    }

    fn two() -> Self {
        Self::lit(2.0)
    }
}

impl Scalar for f32 {
    const MASS_TOLERANCE: f64 = 1e-5;
}

impl Scalar for f64 {
    const MASS_TOLERANCE: f64 = 1e-9;
}
