//! Multi-precision re-evaluation used to confirm suspected violations.
//!
//! This path shares no arithmetic with the double-precision code: every
//! quantity is rebuilt from integers with [`astro_float`] at a configurable
//! working precision (128 bits by default, i.e. 75 bits beyond `f64`).

use astro_float::{BigFloat, Consts, Radix, RoundingMode};
use num_bigint::BigUint;

use crate::envelope::BoundVariant;
use crate::exact::{binomial, factorial};
use crate::grid::{GridPoint, Parity};

pub const DEFAULT_BITS: usize = 128;

const RM: RoundingMode = RoundingMode::ToEven;

pub struct Precise {
    p: usize,
    cc: Consts,
}

impl Precise {
    pub fn new(bits: usize) -> Self {
        Precise {
            p: bits,
            cc: Consts::new().expect("constant cache allocation"),
        }
    }

    pub fn bits(&self) -> usize {
        self.p
    }

    pub fn int(&self, i: i64) -> BigFloat {
        BigFloat::from_i64(i, self.p)
    }

    fn ratio(&self, a: i64, b: i64) -> BigFloat {
        self.int(a).div(&self.int(b), self.p, RM)
    }

    fn big(&mut self, x: &BigUint) -> BigFloat {
        BigFloat::parse(&x.to_string(), Radix::Dec, self.p, RM, &mut self.cc)
    }

    fn add(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.add(b, self.p, RM)
    }

    fn sub(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.sub(b, self.p, RM)
    }

    fn mul(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.mul(b, self.p, RM)
    }

    fn div(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.div(b, self.p, RM)
    }

    fn ln(&mut self, x: &BigFloat) -> BigFloat {
        x.ln(self.p, RM, &mut self.cc)
    }

    fn ln2(&mut self) -> BigFloat {
        self.cc.ln_2(self.p, RM)
    }

    fn pi(&mut self) -> BigFloat {
        self.cc.pi(self.p, RM)
    }

    /// `½·ln((1+t)/(1−t))` for `t = a/b`, built from the integers.
    fn atanh_ratio(&mut self, a: i64, b: i64) -> BigFloat {
        let q = self.ratio(b + a, b - a);
        let l = self.ln(&q);
        self.div(&l, &self.int(2))
    }

    /// `ln(numerator) − exp2·ln 2` for the exact walk probability.
    pub fn log_exact(&mut self, pt: &GridPoint) -> BigFloat {
        let (num, exp2) = match pt.parity {
            Parity::Even => (binomial(2 * pt.n, pt.n as i64 + pt.k), 2 * pt.n),
            Parity::Odd => (binomial(2 * pt.n - 1, pt.n as i64 + pt.k - 1), 2 * pt.n - 1),
        };
        let num = self.big(&num);
        let l = self.ln(&num);
        let ln2 = self.ln2();
        self.sub(&l, &self.mul(&self.int(exp2 as i64), &ln2))
    }

    /// `ln(n!)`.
    pub fn log_factorial(&mut self, n: u64) -> BigFloat {
        let f = self.big(&factorial(n));
        self.ln(&f)
    }

    /// `½ ln(c·π·n)`.
    fn half_log_pi(&mut self, c: i64, n: u64) -> BigFloat {
        let pi = self.pi();
        let arg = self.mul(&pi, &self.int(c * n as i64));
        let l = self.ln(&arg);
        self.div(&l, &self.int(2))
    }

    /// Correction exponent from the expanded closed form (even and odd).
    pub fn exponent(&mut self, pt: &GridPoint) -> BigFloat {
        let n = pt.n as i64;
        let k = pt.k;
        if pt.is_boundary() {
            // (2n ± ½) ln 2 − ½ ln(2πn)
            let twice = match pt.parity {
                Parity::Even => 4 * n + 1,
                Parity::Odd => 4 * n - 1,
            };
            let ln2 = self.ln2();
            let a = self.div(&self.mul(&self.int(twice), &ln2), &self.int(2));
            let c = self.half_log_pi(2, pt.n);
            return self.sub(&a, &c);
        }
        // n·(1 + (k ± ½)/n) = (2n + 2k ± 1)/2, n·(1 − (k − ½)/n) = (2n − 2k + 1)/2
        let up = match pt.parity {
            Parity::Even => 2 * n + 2 * k + 1,
            Parity::Odd => 2 * n + 2 * k - 1,
        };
        let down = 2 * n - 2 * k + 1;
        let lp = self.ln(&self.ratio(n + k, n));
        let lm = self.ln(&self.ratio(n - k, n));
        let s = self.add(
            &self.mul(&self.int(up), &lp),
            &self.mul(&self.int(down), &lm),
        );
        self.div(&s, &self.int(2))
    }

    pub fn log_point(&mut self, pt: &GridPoint) -> BigFloat {
        let b = self.exponent(pt);
        let c = self.half_log_pi(1, pt.n);
        self.add(&b, &c).neg()
    }

    pub fn log_gauss(&mut self, pt: &GridPoint) -> BigFloat {
        let q = self.ratio(pt.k * pt.k, pt.n as i64);
        let c = self.half_log_pi(1, pt.n);
        self.add(&q, &c).neg()
    }

    pub fn theorem_upper(&mut self, pt: &GridPoint) -> BigFloat {
        let point = self.log_point(pt);
        match pt.parity {
            Parity::Even => point,
            Parity::Odd => self.add(&point, &self.ratio(2, 3 * pt.n as i64)),
        }
    }

    pub fn theorem_lower(&mut self, pt: &GridPoint, variant: BoundVariant) -> Option<BigFloat> {
        if pt.is_boundary() {
            return None;
        }
        let n = pt.n as i64;
        let point = self.log_point(pt);
        let central = match pt.parity {
            Parity::Even => self.ratio(1, 7 * n),
            Parity::Odd => self.ratio(1, n),
        };
        let pen = self.penalty(pt.n, pt.k.abs(), variant, 3);
        Some(self.sub(&self.sub(&point, &central), &pen))
    }

    /// `ρ/(c·(1−r²)²·n^e)` with `r = k/n`, `e = 1` for `c = 3`, `e = 2` for `c = 6`.
    fn penalty(&self, n: u64, k: i64, variant: BoundVariant, c: i64) -> BigFloat {
        let n = n as i64;
        let r = self.ratio(k, n);
        let rho = match variant {
            BoundVariant::PaperVerbatim => r.powi(4, self.p, RM),
            BoundVariant::CorrectedTrapezoid => r.powi(2, self.p, RM),
        };
        let q = self.sub(&self.int(1), &r.powi(2, self.p, RM));
        let n_pow = if c == 3 { n } else { n * n };
        let den = self.mul(&self.mul(&q, &q), &self.int(c * n_pow));
        self.div(&rho, &den)
    }

    pub fn trapezoid_bound(&self, n: u64, k: i64, variant: BoundVariant) -> BigFloat {
        self.penalty(n, k, variant, 6)
    }

    /// `T_{k,n} − I(k/n)` for `0 ≤ k < n`.
    pub fn trapezoid_gap(&mut self, n: u64, k: i64) -> BigFloat {
        if k == 0 {
            return self.int(0);
        }
        let ni = n as i64;
        let mut sum = self.int(0);
        for j in 1..k {
            let t = self.atanh_ratio(j, ni);
            sum = self.add(&sum, &t);
        }
        let last = self.atanh_ratio(k, ni);
        sum = self.add(&sum, &self.div(&last, &self.int(2)));
        let t = self.div(&sum, &self.int(ni));
        // I(x) = ½(1+x)ln(1+x) + ½(1−x)ln(1−x)
        let lp = self.ln(&self.ratio(ni + k, ni));
        let lm = self.ln(&self.ratio(ni - k, ni));
        let i = self.add(
            &self.mul(&self.ratio(ni + k, 2 * ni), &lp),
            &self.mul(&self.ratio(ni - k, 2 * ni), &lm),
        );
        self.sub(&t, &i)
    }

    pub fn stirling_bounds(&mut self, n: u64) -> (BigFloat, BigFloat) {
        let nf = self.int(n as i64);
        let ln_n = self.ln(&nf);
        let c = self.half_log_pi(2, n);
        let base = self.sub(&self.add(&c, &self.mul(&nf, &ln_n)), &nf);
        let lo = self.add(&base, &self.ratio(1, 12 * n as i64 + 1));
        let hi = self.add(&base, &self.ratio(1, 12 * n as i64));
        (lo, hi)
    }

    pub fn central_bounds(&mut self, n: u64, parity: Parity) -> (BigFloat, BigFloat) {
        let c = self.half_log_pi(1, n).neg();
        let ni = n as i64;
        match parity {
            Parity::Even => (
                self.sub(&c, &self.ratio(1, 7 * ni)),
                self.sub(&c, &self.ratio(1, 9 * ni)),
            ),
            Parity::Odd => (
                self.sub(&c, &self.ratio(1, ni)),
                self.add(&c, &self.ratio(2, 3 * ni)),
            ),
        }
    }

    /// `(ln lo, ln hi)` of the window ratio interval; `None` for a non-positive `lo`.
    pub fn log_dml_bounds(&mut self, pt: &GridPoint) -> (Option<BigFloat>, BigFloat) {
        let ln_n = self.ln(&self.int(pt.n as i64));
        let t = self
            .div(&ln_n, &self.int(3))
            .neg()
            .exp(self.p, RM, &mut self.cc);
        let (a, b) = match pt.parity {
            Parity::Even => (2, 2),
            Parity::Odd => (3, 6),
        };
        let lo = self.sub(&self.int(1), &self.mul(&self.int(a), &t));
        let hi = self.add(&self.int(1), &self.mul(&self.int(b), &t));
        let ln_lo = if lo.is_positive() && !lo.is_zero() {
            Some(self.ln(&lo))
        } else {
            None
        };
        (ln_lo, self.ln(&hi))
    }

    pub fn min(&self, a: BigFloat, b: BigFloat) -> BigFloat {
        match a.cmp(&b) {
            Some(c) if c > 0 => b,
            _ => a,
        }
    }

    pub fn diff(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        self.sub(a, b)
    }

    pub fn to_f64(x: &BigFloat) -> f64 {
        x.to_string().parse().unwrap_or(f64::NAN)
    }
}

impl Default for Precise {
    fn default() -> Self {
        Precise::new(DEFAULT_BITS)
    }
}
