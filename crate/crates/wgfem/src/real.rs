//! Scalar abstraction for the numerical kernels.
//!
//! Everything in this crate is generic over a floating-point scalar so the
//! same code runs in `f32` or `f64`. The concrete aliases exported from the
//! crate root fix `f64`, which is the precision all shipped experiments use.

use std::fmt::{Debug, Display, LowerExp};
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

/// Floating-point scalar usable by the mesh, quadrature and solver kernels.
pub trait Real:
    num_traits::Float
    + num_traits::FloatConst
    + num_traits::FromPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion to `f64`, used for reporting and error messages.
    fn to_f64_lossy(self) -> f64 {
        num_traits::ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl<T> Real for T where
    T: num_traits::Float
        + num_traits::FloatConst
        + num_traits::FromPrimitive
        + AddAssign
        + SubAssign
        + MulAssign
        + DivAssign
        + Debug
        + Display
        + LowerExp
        + Send
        + Sync
        + 'static
{
}

/// Converts an `f64` constant into the working scalar.
#[inline]
pub fn real<R: Real>(x: f64) -> R {
    R::from_f64(x).expect("constant not representable in scalar type")
}
