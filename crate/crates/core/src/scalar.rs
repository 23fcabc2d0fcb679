//! Scalar abstraction shared by every numerical module.

use nalgebra::{Complex, RealField};
use num_traits::{FloatConst, FromPrimitive, ToPrimitive};

/// Real floating-point scalar the simulator is generic over.
///
/// Implemented for `f32` and `f64`. Tolerances quoted in the API are `f64`
/// literals; [`Real::tol`] widens them to what the type can actually resolve.
pub trait Real:
    RealField + Copy + FloatConst + FromPrimitive + ToPrimitive + Send + Sync + 'static
{
    /// Converts an `f64` literal into this scalar.
    #[inline]
    fn lit(x: f64) -> Self {
        nalgebra::convert(x)
    }

    /// Lossy conversion back to `f64` for reporting and sampling.
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// A tolerance of `base`, floored at a few thousand ulps of one.
    #[inline]
    fn tol(base: f64) -> Self {
        let floor = Self::default_epsilon().as_f64() * 4096.0;
        Self::lit(base.max(floor))
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex amplitude over a real scalar.
pub type C<T> = Complex<T>;

#[inline]
pub(crate) fn c<T: Real>(re: f64, im: f64) -> C<T> {
    Complex::new(T::lit(re), T::lit(im))
}

#[inline]
pub(crate) fn cr<T: Real>(re: T) -> C<T> {
    Complex::new(re, T::zero())
}

/// `e^{iθ}`.
#[inline]
pub(crate) fn cis<T: Real>(theta: T) -> C<T> {
    Complex::new(theta.cos(), theta.sin())
}
