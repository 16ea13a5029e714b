//! Scalar abstraction shared by the approximation and envelope code.
//!
//! Everything that is evaluated in floating point is written once against
//! [`Real`] and instantiated for `f32` and `f64`. The exact oracle never goes
//! through this trait.

use std::fmt::{Debug, Display};
use std::ops::{Add, AddAssign};

use num_traits::{Float, FloatConst, FromPrimitive};

/// Floating point scalar: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + Default + Debug + Display + Send + Sync + 'static
{
    /// Converts an `f64` literal, rounding to the nearest representable value.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("every f64 converts to a float scalar")
    }

    #[inline]
    fn of_u64(x: u64) -> Self {
        Self::from_u64(x).expect("every u64 converts to a float scalar")
    }

    #[inline]
    fn of_i64(x: i64) -> Self {
        Self::from_i64(x).expect("every i64 converts to a float scalar")
    }

    #[inline]
    fn half() -> Self {
        Self::lit(0.5)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Inverse hyperbolic tangent as `½·log1p(2t / (1 − t))`, accurate near zero.
#[inline]
pub fn atanh<F: Real>(t: F) -> F {
    let a = t.abs();
    let two = F::lit(2.0);
    (F::half() * (two * a / (F::one() - a)).ln_1p()).copysign(t)
}

/// Kahan–Neumaier compensated accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub struct NeumaierSum<F> {
    s: F,
    c: F,
}

impl<F: Real> NeumaierSum<F> {
    pub fn new() -> Self {
        Self {
            s: F::zero(),
            c: F::zero(),
        }
    }

    pub fn sum(&self) -> F {
        self.s + self.c
    }
}

impl<F: Real> From<F> for NeumaierSum<F> {
    fn from(value: F) -> Self {
        Self {
            s: value,
            c: F::zero(),
        }
    }
}

impl<F: Real> AddAssign<F> for NeumaierSum<F> {
    fn add_assign(&mut self, rhs: F) {
        let (s, c) = two_sum(self.s, rhs);
        self.s = s;
        self.c = self.c + c;
    }
}

impl<F: Real> Add<F> for NeumaierSum<F> {
    type Output = Self;

    fn add(mut self, rhs: F) -> Self {
        self += rhs;
        self
    }
}

impl<F: Real> std::iter::Sum<F> for NeumaierSum<F> {
    fn sum<I: Iterator<Item = F>>(iter: I) -> Self {
        iter.fold(Self::new(), |acc, x| acc + x)
    }
}

/// Error-free transformation `a + b = s + e` (branching Fast2Sum).
#[inline]
pub fn two_sum<F: Real>(a: F, b: F) -> (F, F) {
    let s = a + b;
    let e = if a.abs() >= b.abs() {
        (a - s) + b
    } else {
        (b - s) + a
    };
    (s, e)
}

/// Error-free product `a · b = p + e` via fused multiply-add.
#[inline]
pub fn two_prod<F: Real>(a: F, b: F) -> (F, F) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neumaier_recovers_small_terms() {
        let mut s = NeumaierSum::<f64>::new();
        s += 1e200;
        s += 0.1;
        s += 0.2;
        s += 0.3;
        s += -1e200;
        assert!((0.6 - s.sum()).abs() < 1e-15);
    }

    #[test]
    fn atanh_matches_std() {
        for &t in &[0.0, 1e-12, 0.25, 0.5, -0.5, 0.999] {
            let a: f64 = atanh(t);
            assert!((a - f64::atanh(t)).abs() <= 1e-15 * a.abs().max(1.0));
        }
        // tiny arguments keep full relative precision
        let t = 1e-9_f64;
        assert!((atanh(t) / (t + t * t * t / 3.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn two_prod_is_exact() {
        let (p, e) = two_prod(0.1_f64, 3.0);
        assert_eq!(p + e, p);
        assert!(e != 0.0);
    }

    #[test]
    fn f32_instantiation() {
        let s: NeumaierSum<f32> = [0.5_f32, 0.25, 0.125].into_iter().sum();
        assert_eq!(s.sum(), 0.875);
    }
}
