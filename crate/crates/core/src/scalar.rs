//! Scalar fields the coefficient formulas are evaluated over.
//!
//! `f64` is the working type for dynamics; `BigRational` gives exact answers
//! for identity checks, where a float residual cannot tell a broken identity
//! from cancellation error.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub trait Field:
    Clone
    + Debug
    + PartialEq
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_i64(v: i64) -> Self;

    fn is_finite_value(&self) -> bool;

    /// Whether `self` and `other` are the same node for closed-form purposes.
    /// Floats use the relative rule `|a-b| < eps * max(1, |a|, |b|)`; exact
    /// types ignore `eps` and compare exactly.
    fn coincides(&self, other: &Self, eps: f64) -> bool;

    fn to_f64_lossy(&self) -> f64;

    fn pow(&self, n: u32) -> Self {
        num_traits::pow(self.clone(), n as usize)
    }

    /// Sum in iteration order.
    fn sum_ordered<I: IntoIterator<Item = Self>>(items: I) -> Self {
        items.into_iter().fold(Self::zero(), |acc, x| acc + x)
    }
}

impl Field for f64 {
    fn from_i64(v: i64) -> Self {
        v as f64
    }

    fn is_finite_value(&self) -> bool {
        self.is_finite()
    }

    fn coincides(&self, other: &Self, eps: f64) -> bool {
        (self - other).abs() < eps * 1f64.max(self.abs()).max(other.abs())
    }

    fn to_f64_lossy(&self) -> f64 {
        *self
    }

    fn sum_ordered<I: IntoIterator<Item = Self>>(items: I) -> Self {
        let mut acc = NeumaierSum::default();
        for x in items {
            acc.add(x);
        }
        acc.value()
    }
}

impl Field for BigRational {
    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }

    fn is_finite_value(&self) -> bool {
        true
    }

    fn coincides(&self, other: &Self, _eps: f64) -> bool {
        self == other
    }

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or_else(|| {
            if self.is_negative() {
                f64::NEG_INFINITY
            } else {
                f64::INFINITY
            }
        })
    }
}

/// Compensated (Kahan–Babuška–Neumaier) summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    compensation: f64,
}

impl NeumaierSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Convenience constructor for exact rationals `num / den`.
pub fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}
