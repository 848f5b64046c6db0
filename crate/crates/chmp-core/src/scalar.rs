//! Floating-point abstraction so every algorithm works over `f32` or `f64`.

use core::fmt::{Debug, Display, LowerExp};
use core::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Scalar type the whole crate is generic over.
///
/// Everything required is already provided by `f32`/`f64`; the trait exists
/// only to name the bound once. `c` converts an `f64` literal, which is how
/// algorithm constants (tolerances, step caps, 0.9, 1.5, ...) enter generic
/// code. Constants used here are all exactly representable in `f32`, or are
/// tolerances where the rounding is irrelevant.
pub trait Scalar:
    Float
    + NumAssign
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` constant into the scalar type.
    fn c(x: f64) -> Self {
        Self::from_f64(x).expect("f64 constant must convert into the scalar type")
    }

    /// Lossy view as `f64`, for reporting and error messages.
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar must convert to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_convert_both_ways() {
        assert_eq!(f64::c(1.5), 1.5);
        assert_eq!(f32::c(1.5), 1.5f32);
        assert_eq!(2.0f32.as_f64(), 2.0);
    }
}
