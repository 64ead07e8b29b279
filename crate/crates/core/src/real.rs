//! Scalar abstraction for the numerical kernels.
//!
//! Everything downstream (shooting, quadrature, curvature stencils,
//! collocation) is generic over [`Real`], so the same code instantiates at
//! `f32` and `f64`. Concrete aliases for the common `f64` lane live at the
//! crate root.

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

/// Floating-point scalar usable by every solver in this crate.
///
/// Blanket-implemented for any type satisfying the bounds, which in practice
/// means `f32` and `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal into `Self`, rounding as needed.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 literal converts to any Real")
    }

    /// Lossy view as `f64`, for diagnostics and reports.
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Converts a small integer exactly.
    fn of_usize(k: usize) -> Self {
        Self::from_usize(k).expect("usize converts to any Real")
    }

    /// A tolerance that honors the type's precision: `max(requested, 32 eps)`.
    ///
    /// Spec-level tolerances are written for `f64`; clamping keeps the `f32`
    /// instantiation from demanding sub-epsilon accuracy.
    fn tol(requested: f64) -> Self {
        let req = Self::of(requested);
        let floor = Self::epsilon() * Self::of(32.0);
        if req > floor {
            req
        } else {
            floor
        }
    }
}

impl<T> Real for T where
    T: Float
        + FloatConst
        + FromPrimitive
        + ToPrimitive
        + AddAssign
        + SubAssign
        + MulAssign
        + DivAssign
        + Sum
        + Debug
        + Display
        + LowerExp
        + Send
        + Sync
        + 'static
{
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literal_conversion_round_trips() {
        assert_eq!(<f64 as Real>::of(1.5), 1.5);
        assert_eq!(<f32 as Real>::of(1.5), 1.5f32);
        assert_eq!(<f64 as Real>::of_usize(7), 7.0);
    }

    #[test]
    fn tolerance_respects_type_precision() {
        assert_eq!(<f64 as Real>::tol(1e-12), 1e-12);
        // f32 cannot resolve 1e-12; the clamp kicks in.
        assert!(<f32 as Real>::tol(1e-12) >= f32::EPSILON);
    }
}
