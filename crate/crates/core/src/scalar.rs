//! Scalar abstraction for the numerical core.
//!
//! Everything downstream of the integral store is generic over a real
//! scalar type so the same code runs in `f64` (the default) or `f32`.
//! The bound set is deliberately small: nalgebra's `RealField` supplies
//! the transcendental functions and the dense solvers, `FromPrimitive`
//! converts tolerance literals.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Real scalar type usable by the engine.
pub trait Scalar:
    RealField + FromPrimitive + ToPrimitive + Sum<Self> + Copy + Default + Debug + Display + LowerExp
{
    /// Cast an `f64` literal (model parameter, tolerance) into `Self`.
    fn cast(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 literal")
    }

    /// Convert a count into `Self`.
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count fits in scalar")
    }

    /// Lossy view as `f64`, used only for reporting.
    fn as_f64(self) -> f64 {
        self.to_f64().expect("real scalar converts to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
