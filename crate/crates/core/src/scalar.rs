//! Scalar abstraction shared by every numerical routine in the crate.
//!
//! All model and solver code is written against [`Real`], which is implemented
//! for `f32` and `f64`. Tolerances quoted as absolute numbers are clamped from
//! below by a multiple of the type's machine epsilon so the same code paths stay
//! meaningful in single precision.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating-point scalar usable by the model, integrators and PDE solver.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Sum + Default + Debug + Display + LowerExp + Send + Sync + 'static
{
    /// Converts an `f64` literal into `Self`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in target float")
    }

    /// Converts a count into `Self`.
    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in target float")
    }

    /// A tolerance that is never below `factor` ulps of one.
    #[inline]
    fn tol(requested: f64, factor: f64) -> Self {
        let floor = Self::epsilon() * Self::lit(factor);
        Self::lit(requested).max(floor)
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tolerance_is_clamped_in_single_precision() {
        let t32 = <f32 as Real>::tol(1e-12, 16.0);
        assert!(t32 >= 16.0 * f32::EPSILON);
        let t64 = <f64 as Real>::tol(1e-12, 16.0);
        assert_eq!(t64, 1e-12);
    }

    #[test]
    fn literal_round_trip() {
        assert_eq!(<f64 as Real>::lit(0.25), 0.25);
        assert_eq!(<f32 as Real>::from_count(7), 7.0f32);
    }
}
