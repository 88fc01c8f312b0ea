//! Floating-point scalar abstraction: everything geometric is generic over it.

use std::fmt::{Debug, Display};
use std::str::FromStr;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Scalar type underlying all space computations: `f32` or `f64`.
///
/// The bound is deliberately wide enough that geometry, flows, and text
/// round-trips all work from the one trait. `Display`/`FromStr` give the
/// shortest-representation decimal round-trip used by the serialized point
/// form.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + NumAssign
    + FromStr
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Conversion from an `f64` literal (tolerances, weights, grid values).
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal must be representable in the scalar type")
    }

    /// Lossy view as `f64`, for diagnostics and sampling.
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
