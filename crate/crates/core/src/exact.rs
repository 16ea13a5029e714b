//! Exact walk probabilities as dyadic rationals, and their logarithms to
//! (near) full double precision.

use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::{atanh, two_prod, two_sum, NeumaierSum, Real};

/// `ln 2` split as a double-double.
const LN2_HI: f64 = std::f64::consts::LN_2;
const LN2_LO: f64 = 2.319_046_813_846_299_6e-17;

/// Natural log of a probability together with a bound on its absolute error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LogProb<F> {
    pub value: F,
    pub abs_err_bound: F,
}

impl<F: Real> LogProb<F> {
    pub fn new(value: F, abs_err_bound: F) -> Self {
        LogProb {
            value,
            abs_err_bound,
        }
    }

    /// Back to a probability; underflows to zero for deep tails.
    pub fn prob(&self) -> F {
        self.value.exp()
    }
}

/// A probability `numerator / 2^exp2`, kept fully reduced.
///
/// The numerator is odd, or the value is zero and stored as `0 / 2^0`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DyadicRational {
    numerator: BigUint,
    exp2: u64,
}

impl DyadicRational {
    /// Builds a reduced dyadic rational, rejecting values above one.
    pub fn new(numerator: BigUint, exp2: u64) -> Result<Self> {
        let d = Self::reduced(numerator, exp2);
        if d.numerator > BigUint::one() << d.exp2 {
            return Err(Error::domain(format!("{d} exceeds one")));
        }
        Ok(d)
    }

    pub fn zero() -> Self {
        DyadicRational {
            numerator: BigUint::zero(),
            exp2: 0,
        }
    }

    pub fn one() -> Self {
        DyadicRational {
            numerator: BigUint::one(),
            exp2: 0,
        }
    }

    fn reduced(mut numerator: BigUint, mut exp2: u64) -> Self {
        match numerator.trailing_zeros() {
            None => return Self::zero(),
            Some(tz) => {
                let shift = tz.min(exp2);
                numerator >>= shift;
                exp2 -= shift;
            }
        }
        DyadicRational { numerator, exp2 }
    }

    pub fn numerator(&self) -> &BigUint {
        &self.numerator
    }

    pub fn exp2(&self) -> u64 {
        self.exp2
    }

    pub fn is_zero(&self) -> bool {
        self.numerator.is_zero()
    }

    /// Exact sum, `None` if it would exceed one.
    pub fn checked_add(&self, rhs: &Self) -> Option<Self> {
        let e = self.exp2.max(rhs.exp2);
        let a = &self.numerator << (e - self.exp2);
        let b = &rhs.numerator << (e - rhs.exp2);
        DyadicRational::new(a + b, e).ok()
    }

    /// Nearest double (subnormal or zero in the far tail).
    pub fn to_f64(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let bits = self.numerator.bits();
        let w = bits.min(64);
        let top = (&self.numerator >> (bits - w))
            .to_u64()
            .expect("at most 64 bits");
        let e = bits as i64 - w as i64 - self.exp2 as i64;
        // two steps so that 2^e never overflows or flushes early
        let half = (e / 2) as i32;
        top as f64 * 2f64.powi(half) * 2f64.powi(e as i32 - half)
    }
}

impl fmt::Display for DyadicRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/2^{}", self.numerator, self.exp2)
    }
}

/// Exact binomial coefficient `C(m, i)`; zero outside `0 ≤ i ≤ m`.
pub fn binomial(m: u64, i: i64) -> BigUint {
    if i < 0 || i as u64 > m {
        return BigUint::zero();
    }
    let i = (i as u64).min(m - i as u64);
    let mut c = BigUint::one();
    for t in 0..i {
        // C(m, t + 1) = C(m, t) (m − t) / (t + 1), exact at every step
        c *= m - t;
        c /= t + 1;
    }
    c
}

/// The whole row `C(m, 0), …, C(m, m)`.
pub fn binomial_row(m: u64) -> Vec<BigUint> {
    let mut row = Vec::with_capacity(m as usize + 1);
    let mut c = BigUint::one();
    row.push(c.clone());
    for t in 0..m {
        c *= m - t;
        c /= t + 1;
        row.push(c.clone());
    }
    row
}

pub fn factorial(n: u64) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, j| acc * j)
}

/// `P(S_l = j)` for the simple symmetric walk, zero when `l + j` is odd or `|j| > l`.
pub fn walk_prob(l: u64, j: i64) -> DyadicRational {
    if j.unsigned_abs() > l || (l as i128 + j as i128).rem_euclid(2) != 0 {
        return DyadicRational::zero();
    }
    let idx = (l as i64 + j) / 2;
    DyadicRational::reduced(binomial(l, idx), l)
}

/// `a_{k,n} = C(2n, n + k) 2^{−2n}`.
pub fn exact_even(n: u64, k: i64) -> Result<DyadicRational> {
    check_even(n, k)?;
    Ok(DyadicRational::reduced(
        binomial(2 * n, n as i64 + k),
        2 * n,
    ))
}

/// `a*_{k,n} = C(2n − 1, n + k − 1) 2^{−2n+1}`.
pub fn exact_odd(n: u64, k: i64) -> Result<DyadicRational> {
    check_odd(n, k)?;
    Ok(DyadicRational::reduced(
        binomial(2 * n - 1, n as i64 + k - 1),
        2 * n - 1,
    ))
}

fn check_even(n: u64, k: i64) -> Result<()> {
    if n == 0 || k.unsigned_abs() > n {
        return Err(Error::domain(format!(
            "even grid needs n ≥ 1 and |k| ≤ n, got n={n}, k={k}"
        )));
    }
    Ok(())
}

fn check_odd(n: u64, k: i64) -> Result<()> {
    if n == 0 || k <= -(n as i64) || k > n as i64 {
        return Err(Error::domain(format!(
            "odd grid needs n ≥ 1 and −n < k ≤ n, got n={n}, k={k}"
        )));
    }
    Ok(())
}

/// `ln(x) = ln(m) + e·ln 2` with `m ∈ [√½, √2)` read from the top 106 bits.
fn log_mantissa(x: &BigUint) -> (f64, i64) {
    let bits = x.bits();
    let w = bits.min(106);
    let top = (x >> (bits - w)).to_u128().expect("at most 106 bits");
    let hi = top as f64;
    let lo = (top as i128 - hi as i128) as f64;
    let mut m_hi = hi * 2f64.powi(-(w as i32));
    let mut e = bits as i64;
    // recentre to [√½, √2) so that powers of two give ln m = 0 exactly
    if m_hi < std::f64::consts::FRAC_1_SQRT_2 {
        m_hi *= 2.0;
        e -= 1;
    }
    (m_hi.ln() + (lo / hi).ln_1p(), e)
}

/// `ln_m + e·ln 2` with a compensated product; returns value and error bound.
fn add_ln2_multiple(ln_m: f64, e: i64) -> LogProb<f64> {
    let ef = e as f64;
    let (p, pe) = two_prod(ef, LN2_HI);
    let tail = pe + ef * LN2_LO;
    let (s, se) = two_sum(p, ln_m);
    let value = s + (se + tail);
    LogProb::new(value, 4.0 * f64::EPSILON * value.abs() + 4e-16)
}

/// Natural log of a positive dyadic rational.
pub fn log_dyadic(d: &DyadicRational) -> Result<LogProb<f64>> {
    if d.is_zero() {
        return Err(Error::domain("logarithm of a zero probability"));
    }
    let (ln_m, bits) = log_mantissa(&d.numerator);
    Ok(add_ln2_multiple(ln_m, bits - d.exp2 as i64))
}

/// Natural log of a positive big integer.
pub fn log_biguint(x: &BigUint) -> Result<LogProb<f64>> {
    if x.is_zero() {
        return Err(Error::domain("logarithm of zero"));
    }
    let (ln_m, bits) = log_mantissa(x);
    Ok(add_ln2_multiple(ln_m, bits))
}

/// `ln(n!)` from the exact factorial.
pub fn log_factorial(n: u64) -> LogProb<f64> {
    log_biguint(&factorial(n)).expect("n! ≥ 1")
}

/// `log a_{k,n}` through the product identity
/// `log a_{0,n} − log(1 + k/n) − 2 Σ_{j<k} atanh(j/n)`.
///
/// The central term comes from the exact oracle; `|k| = n` uses `−2n ln 2`.
pub fn log_even_via_recurrence(n: u64, k: i64) -> Result<LogProb<f64>> {
    check_even(n, k)?;
    let k = k.unsigned_abs();
    if k == n {
        return Ok(add_ln2_multiple(0.0, -2 * n as i64));
    }
    let central = log_dyadic(&exact_even(n, 0)?)?;
    if k == 0 {
        return Ok(central);
    }
    let nf = n as f64;
    let mut acc = NeumaierSum::from(central.value);
    let mut mag = central.value.abs();
    let head = -(k as f64 / nf).ln_1p();
    acc += head;
    mag += head.abs();
    for j in 1..k {
        let t = -2.0 * atanh(j as f64 / nf);
        acc += t;
        mag += t.abs();
    }
    Ok(LogProb::new(
        acc.sum(),
        central.abs_err_bound + 4.0 * f64::EPSILON * mag,
    ))
}

/// `log a_{k,n}` for `k = 0..=n` by the same identity, sharing the prefix sums.
pub fn log_even_recurrence_row(n: u64) -> Result<Vec<LogProb<f64>>> {
    check_even(n, 0)?;
    let central = log_dyadic(&exact_even(n, 0)?)?;
    let nf = n as f64;
    let mut out = Vec::with_capacity(n as usize + 1);
    out.push(central);
    let mut prefix = NeumaierSum::from(central.value);
    let mut mag = central.value.abs();
    for k in 1..n {
        if k > 1 {
            let t = -2.0 * atanh((k - 1) as f64 / nf);
            prefix += t;
            mag += t.abs();
        }
        let head = -(k as f64 / nf).ln_1p();
        let v = prefix + head;
        out.push(LogProb::new(
            v.sum(),
            central.abs_err_bound + 4.0 * f64::EPSILON * (mag + head.abs()),
        ));
    }
    out.push(add_ln2_multiple(0.0, -2 * n as i64));
    Ok(out)
}
