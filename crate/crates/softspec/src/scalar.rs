//! Scalar abstraction for the numerical kernels.
//!
//! Everything downstream (assembly, factorisations, eigensolvers, the beta
//! function) is generic over [`Scalar`]; `f32` and `f64` both qualify through
//! the blanket impl. The crate root exports f64 aliases for the main types,
//! which is what the CLI and the stated tolerances assume.

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};
use serde::{de::DeserializeOwned, Serialize};
use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

pub trait Scalar:
    Float
    + FloatConst
    + NumAssign
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Default
    + Debug
    + Display
    + LowerExp
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from f64; the compile-time constant path for literals.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 converts to any Scalar")
    }

    /// Conversion to f64 for reporting and file formats.
    fn to64(self) -> f64 {
        self.to_f64().expect("Scalar converts to f64")
    }
}

impl<T> Scalar for T where
    T: Float
        + FloatConst
        + NumAssign
        + FromPrimitive
        + ToPrimitive
        + Sum
        + Default
        + Debug
        + Display
        + LowerExp
        + Serialize
        + DeserializeOwned
        + Send
        + Sync
        + 'static
{
}

/// Shorthand for `T::of` at call sites where the target type is inferred.
pub fn real<T: Scalar>(x: f64) -> T {
    T::of(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_widths_qualify() {
        fn take<T: Scalar>(x: T) -> f64 {
            x.to64()
        }
        assert_eq!(take(1.5f32), 1.5);
        assert_eq!(take(1.5f64), 1.5);
        assert_eq!(real::<f64>(0.25), 0.25);
    }
}
