//! Numeric abstraction shared by every score, mass and cost computation.
//!
//! Algorithms are written once against [`Scalar`] and instantiated either
//! with `f64`/`f32` for speed or with [`BigRational`] when results must be
//! compared for exact equality.

use std::fmt::{Debug, Display};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, One, ToPrimitive};

pub trait Scalar: Num + Clone + PartialOrd + Debug + Display + Send + Sync + 'static {
    /// True when arithmetic is exact, so equality checks are meaningful.
    const EXACT: bool;

    fn from_ratio(numer: u64, denom: u64) -> Self;

    fn from_rational(value: &BigRational) -> Self;

    /// `base^(-exp)`.
    fn inv_pow(base: usize, exp: u32) -> Self;

    fn as_f64(&self) -> f64;

    fn from_usize(value: usize) -> Self {
        Self::from_ratio(value as u64, 1)
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_ratio(numer: u64, denom: u64) -> Self {
        numer as f64 / denom as f64
    }

    fn from_rational(value: &BigRational) -> Self {
        ToPrimitive::to_f64(value).unwrap_or(f64::NAN)
    }

    fn inv_pow(base: usize, exp: u32) -> Self {
        (base as f64).powi(-(exp as i32))
    }

    fn as_f64(&self) -> f64 {
        *self
    }
}

impl Scalar for f32 {
    const EXACT: bool = false;

    fn from_ratio(numer: u64, denom: u64) -> Self {
        (numer as f64 / denom as f64) as f32
    }

    fn from_rational(value: &BigRational) -> Self {
        value.to_f32().unwrap_or(f32::NAN)
    }

    fn inv_pow(base: usize, exp: u32) -> Self {
        (base as f32).powi(-(exp as i32))
    }

    fn as_f64(&self) -> f64 {
        f64::from(*self)
    }
}

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn from_ratio(numer: u64, denom: u64) -> Self {
        BigRational::new(BigInt::from(numer), BigInt::from(denom))
    }

    fn from_rational(value: &BigRational) -> Self {
        value.clone()
    }

    fn inv_pow(base: usize, exp: u32) -> Self {
        BigRational::new(BigInt::one(), num_traits::pow(BigInt::from(base), exp as usize))
    }

    fn as_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

/// Sum of an iterator of scalars.
pub fn sum<S: Scalar, I: IntoIterator<Item = S>>(items: I) -> S {
    items.into_iter().fold(S::zero(), |acc, x| acc + x)
}

/// Index of the first maximum, ignoring incomparable values.
pub fn argmax_first<S: Scalar>(values: &[(usize, S)]) -> Option<(usize, S)> {
    let mut best: Option<(usize, S)> = None;
    for (idx, v) in values {
        match &best {
            Some((_, b)) if !(v > b) => {}
            _ => best = Some((*idx, v.clone())),
        }
    }
    best
}
