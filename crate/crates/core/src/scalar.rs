//! Scalar abstraction shared by every numerical routine in the crate.
//!
//! Geometry (box sizes, shifts, frequencies) is kept in `f64`; sampled values
//! and spectra are generic over [`Scalar`], which is implemented for `f32` and
//! `f64`.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use rustfft::FftNum;

pub trait Scalar:
    Float
    + FloatConst
    + FftNum
    + FromPrimitive
    + ToPrimitive
    + Sum
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` constant into this scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar representable as f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// `|x|^p` with the convention `|0|^p = 0` for `p > 0`.
#[inline]
pub fn abs_pow<S: Scalar>(x: S, p: S) -> S {
    let a = x.abs();
    if a == S::zero() {
        S::zero()
    } else {
        a.powf(p)
    }
}

/// `|x|^(p-2) x`, continuous at zero for every `p >= 1`.
#[inline]
pub fn signed_pow<S: Scalar>(x: S, p: S) -> S {
    let a = x.abs();
    if a == S::zero() {
        S::zero()
    } else {
        a.powf(p - S::one()) * x.signum()
    }
}
