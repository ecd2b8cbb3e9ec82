use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating point scalar used throughout the crate.
///
/// `RealField` provides the linear algebra (eigen solvers, SVD, QR) and the
/// elementary functions; num-traits provides the lossy conversions used when
/// talking to the `f32` on-disk formats and to `f64` configuration values.
pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + Default + Send + Sync + Serialize + DeserializeOwned
{
    /// Converts an `f64` literal or parameter.
    #[inline]
    fn lit(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("f64 is representable in every Real")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        ToPrimitive::to_f64(&self).expect("Real always converts to f64")
    }

    #[inline]
    fn of_f32(x: f32) -> Self {
        <Self as FromPrimitive>::from_f32(x).expect("f32 is representable in every Real")
    }

    #[inline]
    fn as_f32(self) -> f32 {
        ToPrimitive::to_f32(&self).expect("Real always converts to f32")
    }

    /// Machine epsilon of the concrete type.
    fn eps() -> Self;

    fn is_finite_value(self) -> bool;
}

impl Real for f32 {
    #[inline]
    fn eps() -> Self {
        f32::EPSILON
    }

    #[inline]
    fn is_finite_value(self) -> bool {
        self.is_finite()
    }
}

impl Real for f64 {
    #[inline]
    fn eps() -> Self {
        f64::EPSILON
    }

    #[inline]
    fn is_finite_value(self) -> bool {
        self.is_finite()
    }
}

/// Soft-thresholding `sign(x) * max(|x| - t, 0)`.
#[inline]
pub fn soft_threshold<T: Real>(x: T, t: T) -> T {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        T::zero()
    }
}

#[inline]
pub fn sign<T: Real>(x: T) -> T {
    if x > T::zero() {
        T::one()
    } else if x < T::zero() {
        -T::one()
    } else {
        T::zero()
    }
}

pub(crate) fn all_finite<'a, T: Real + 'a>(xs: impl IntoIterator<Item = &'a T>) -> bool {
    xs.into_iter().all(|x| x.is_finite_value())
}
