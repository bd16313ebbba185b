//! Scalar abstraction for the numeric core.
//!
//! Everything under [`crate::lumped`], [`crate::eqnet`], [`crate::transducers`]
//! and [`crate::scenarios`] is generic over [`Scalar`] so the same code runs at
//! `f32` or `f64`. The crate root exports `f64` aliases, which is what the CLI
//! and the shipped scenario files use.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive};

/// Floating-point scalar the models and solvers are generic over.
pub trait Scalar: Float + FromPrimitive + Sum + Debug + Display + Default + 'static {
    /// Shorthand for converting an `f64` literal into the scalar type.
    fn of(value: f64) -> Self {
        Self::from_f64(value).expect("finite f64 literal converts to scalar")
    }

    /// Lossy conversion back to `f64`, for reporting and serialization.
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar converts to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Vacuum permittivity in F/m.
pub fn vacuum_permittivity<T: Scalar>() -> T {
    T::of(8.854_187_812_8e-12)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literal_round_trip() {
        let x: f64 = Scalar::of(0.25);
        assert_eq!(x, 0.25);
        let y: f32 = Scalar::of(0.25);
        assert_eq!(y, 0.25f32);
        assert_eq!(x.as_f64(), 0.25);
    }
}
