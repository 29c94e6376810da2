//! Scalar traits shared by the polynomial, tensor and variety code.
//!
//! `Ring` is all the sparse polynomial machinery needs, so polynomials whose
//! coefficients are themselves polynomials (parameter-dependent coefficients)
//! plug into the same code paths. `Field` adds division plus a way to measure
//! size, which is what tensors and membership checks need.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::{Complex, Complex64};
use num_rational::{BigRational, Rational64};
use num_traits::{One, ToPrimitive, Zero};

/// Commutative ring with identity.
pub trait Ring:
    Clone
    + PartialEq
    + Debug
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + Send
    + Sync
    + 'static
{
    /// `k · 1` computed in the ring.
    fn from_usize(k: usize) -> Self {
        let mut acc = Self::zero();
        let mut base = Self::one();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc + base.clone();
            }
            base = base.clone() + base;
            k >>= 1;
        }
        acc
    }
}

impl<T> Ring for T where
    T: Clone
        + PartialEq
        + Debug
        + Zero
        + One
        + Add<Output = T>
        + Sub<Output = T>
        + Mul<Output = T>
        + Neg<Output = T>
        + Send
        + Sync
        + 'static
{
}

/// Field scalars usable as tensor entries.
pub trait Field: Ring + Div<Output = Self> {
    fn from_i64(v: i64) -> Self;
    /// Absolute value / modulus as an `f64`.
    fn modulus(&self) -> f64;
    /// Nearest double-precision complex value.
    fn to_c64(&self) -> Complex64;
    /// Whether exact comparison with zero is meaningful.
    const EXACT: bool = false;
}

impl Field for f64 {
    fn from_i64(v: i64) -> Self {
        v as f64
    }
    fn modulus(&self) -> f64 {
        self.abs()
    }
    fn to_c64(&self) -> Complex64 {
        Complex64::new(*self, 0.0)
    }
}

impl Field for f32 {
    fn from_i64(v: i64) -> Self {
        v as f32
    }
    fn modulus(&self) -> f64 {
        self.abs() as f64
    }
    fn to_c64(&self) -> Complex64 {
        Complex64::new(*self as f64, 0.0)
    }
}

impl Field for Complex<f64> {
    fn from_i64(v: i64) -> Self {
        Complex::new(v as f64, 0.0)
    }
    fn modulus(&self) -> f64 {
        self.norm()
    }
    fn to_c64(&self) -> Complex64 {
        *self
    }
}

impl Field for Complex<f32> {
    fn from_i64(v: i64) -> Self {
        Complex::new(v as f32, 0.0)
    }
    fn modulus(&self) -> f64 {
        self.norm() as f64
    }
    fn to_c64(&self) -> Complex64 {
        Complex64::new(self.re as f64, self.im as f64)
    }
}

impl Field for BigRational {
    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }
    fn modulus(&self) -> f64 {
        self.to_f64().map(f64::abs).unwrap_or(f64::INFINITY)
    }
    fn to_c64(&self) -> Complex64 {
        Complex64::new(self.to_f64().unwrap_or(f64::NAN), 0.0)
    }
    const EXACT: bool = true;
}

impl Field for Rational64 {
    fn from_i64(v: i64) -> Self {
        Rational64::from_integer(v)
    }
    fn modulus(&self) -> f64 {
        self.to_f64().map(f64::abs).unwrap_or(f64::INFINITY)
    }
    fn to_c64(&self) -> Complex64 {
        Complex64::new(self.to_f64().unwrap_or(f64::NAN), 0.0)
    }
    const EXACT: bool = true;
}

/// Exact rational from a finite double (every finite double is a dyadic rational).
pub fn rational_from_f64(v: f64) -> Option<BigRational> {
    BigRational::from_float(v)
}

/// `i64 / i64` as an exact rational.
pub fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_usize_matches_cast() {
        for k in [0usize, 1, 2, 7, 64, 1000] {
            assert_eq!(<f64 as Ring>::from_usize(k), k as f64);
            assert_eq!(<BigRational as Ring>::from_usize(k), BigRational::from_i64(k as i64));
        }
    }

    #[test]
    fn rational_modulus() {
        assert_eq!(ratio(-3, 4).modulus(), 0.75);
        assert!(BigRational::EXACT && !<f64 as Field>::EXACT);
    }
}
