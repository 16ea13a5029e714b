//! Correction exponents `b_{k,n}`, `b*_{k,n}` and the point and Gaussian
//! approximations built on them.
//!
//! The even-lattice approximation is `a_{k,n} ≈ e^{−b_{k,n}} / √(πn)`, where
//!
//! ```text
//! b_{k,n} = 2n·I(k/n) + ½·log(1 − k²/n²),    I(x) = ∫₀ˣ atanh(t) dt,
//! ```
//!
//! and `b_{±n,n} = (2n + ½) log 2 − ½ log(2πn)`. The odd lattice uses
//! `b*_{k,n} = 2n·I(k/n) − atanh(k/n)` and `b*_{n,n} = (2n − ½) log 2 − ½ log(2πn)`.
//! The classical de Moivre–Laplace form replaces `b` by `k²/n`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::LogProb;
use crate::grid::{GridPoint, Parity};
use crate::scalar::{atanh, NeumaierSum, Real};

/// How an [`Exponent`] was evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Method {
    ClosedForm,
    Boundary,
    Series,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Exponent<F> {
    pub b: F,
    pub method: Method,
}

/// Truncation rule for the power series of `b` and `b*`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeriesControl {
    pub rel_tol: f64,
    pub max_terms: usize,
}

impl Default for SeriesControl {
    fn default() -> Self {
        SeriesControl {
            rel_tol: 1e-16,
            max_terms: 200,
        }
    }
}

impl SeriesControl {
    pub fn new(rel_tol: f64, max_terms: usize) -> Result<Self> {
        if !(rel_tol > 0.0) || max_terms == 0 {
            return Err(Error::domain(
                "series control needs rel_tol > 0 and max_terms ≥ 1",
            ));
        }
        Ok(SeriesControl { rel_tol, max_terms })
    }
}

/// `I(x) = ½(1+x)log(1+x) + ½(1−x)log(1−x)` for `|x| < 1`.
///
/// Evaluated as `x·atanh(x) + ½·log1p(−x²)`, which avoids the cancellation of
/// the two `±x` leading terms; below `1e−4` the Taylor polynomial is used.
pub fn integral_i<F: Real>(x: F) -> Result<F> {
    if !(x.abs() < F::one()) {
        return Err(Error::domain(format!("I(x) needs |x| < 1, got {x}")));
    }
    let x = x.abs();
    let x2 = x * x;
    if x < F::lit(1e-4) {
        // x²/2 + x⁴/12 + x⁶/30
        return Ok(x2 * (F::half() + x2 * (F::lit(1.0 / 12.0) + x2 / F::lit(30.0))));
    }
    Ok(x * atanh(x) + F::half() * (-x2).ln_1p())
}

/// Trapezoidal sum `(1/n)[½atanh(0) + Σ_{j=1}^{k−1} atanh(j/n) + ½atanh(k/n)]`.
pub fn trapezoid_t<F: Real>(n: u64, k: i64) -> Result<F> {
    if n == 0 || k < 0 || k as u64 >= n {
        return Err(Error::domain(format!(
            "trapezoid sum needs 0 ≤ k < n, got n={n}, k={k}"
        )));
    }
    if k == 0 {
        return Ok(F::zero());
    }
    let nf = F::of_u64(n);
    let mut acc = NeumaierSum::new();
    for j in 1..k {
        acc += atanh(F::of_i64(j) / nf);
    }
    acc += F::half() * atanh(F::of_i64(k) / nf);
    Ok(acc.sum() / nf)
}

/// `T_{k,n}` for every `k = 0..n`, sharing the running sum.
pub fn trapezoid_row<F: Real>(n: u64) -> Vec<F> {
    let nf = F::of_u64(n);
    let mut out = Vec::with_capacity(n as usize);
    let mut interior = NeumaierSum::new();
    for k in 0..n {
        if k == 0 {
            out.push(F::zero());
            continue;
        }
        if k > 1 {
            interior += atanh(F::of_u64(k - 1) / nf);
        }
        let t = interior + F::half() * atanh(F::of_u64(k) / nf);
        out.push(t.sum() / nf);
    }
    out
}

fn ratio<F: Real>(n: u64, k: i64) -> F {
    F::of_i64(k) / F::of_u64(n)
}

/// `½ log(2πn)`.
fn half_log_two_pi_n<F: Real>(n: u64) -> F {
    F::half() * (F::TAU() * F::of_u64(n)).ln()
}

/// `½ log(πn)`.
fn half_log_pi_n<F: Real>(n: u64) -> F {
    F::half() * (F::PI() * F::of_u64(n)).ln()
}

/// Correction exponent of the even lattice.
pub fn b_even<F: Real>(n: u64, k: i64) -> Result<Exponent<F>> {
    if n == 0 || k.unsigned_abs() > n {
        return Err(Error::domain(format!(
            "b_even needs n ≥ 1 and |k| ≤ n, got n={n}, k={k}"
        )));
    }
    if k.unsigned_abs() == n {
        let b = (F::lit(2.0) * F::of_u64(n) + F::half()) * F::LN_2() - half_log_two_pi_n::<F>(n);
        return Ok(Exponent {
            b,
            method: Method::Boundary,
        });
    }
    if k == 0 {
        return Ok(Exponent {
            b: F::zero(),
            method: Method::ClosedForm,
        });
    }
    // reflect: b_{k,n} = b_{−k,n}
    let x: F = ratio(n, k.abs());
    let b = F::lit(2.0) * F::of_u64(n) * integral_i(x)? + F::half() * (-x * x).ln_1p();
    Ok(Exponent {
        b,
        method: Method::ClosedForm,
    })
}

/// `n{(1 + (k+½)/n)·log(1 + k/n) + (1 − (k−½)/n)·log(1 − k/n)}`, the expanded
/// form of [`b_even`], for `|k| < n`.
pub fn b_even_expanded<F: Real>(n: u64, k: i64) -> Result<F> {
    if n == 0 || k.unsigned_abs() >= n {
        return Err(Error::domain(format!(
            "expanded b_even needs |k| < n, got n={n}, k={k}"
        )));
    }
    let nf = F::of_u64(n);
    let kf = F::of_i64(k);
    let x = kf / nf;
    let up = F::one() + (kf + F::half()) / nf;
    let down = F::one() - (kf - F::half()) / nf;
    Ok(nf * (up * x.ln_1p() + down * (-x).ln_1p()))
}

/// Correction exponent of the odd lattice. May be negative (e.g. `k = 1`).
pub fn b_odd<F: Real>(n: u64, k: i64) -> Result<Exponent<F>> {
    if n == 0 || k <= -(n as i64) || k > n as i64 {
        return Err(Error::domain(format!(
            "b_odd needs n ≥ 1 and −n < k ≤ n, got n={n}, k={k}"
        )));
    }
    if k == n as i64 {
        let b = (F::lit(2.0) * F::of_u64(n) - F::half()) * F::LN_2() - half_log_two_pi_n::<F>(n);
        return Ok(Exponent {
            b,
            method: Method::Boundary,
        });
    }
    if k == 0 {
        return Ok(Exponent {
            b: F::zero(),
            method: Method::ClosedForm,
        });
    }
    let x: F = ratio(n, k);
    let b = F::lit(2.0) * F::of_u64(n) * integral_i(x)? - atanh(x);
    Ok(Exponent {
        b,
        method: Method::ClosedForm,
    })
}

/// `n{(1 + (k−½)/n)·log(1 + k/n) + (1 − (k−½)/n)·log(1 − k/n)}` for `|k| < n`.
pub fn b_odd_expanded<F: Real>(n: u64, k: i64) -> Result<F> {
    if n == 0 || k.unsigned_abs() >= n {
        return Err(Error::domain(format!(
            "expanded b_odd needs |k| < n, got n={n}, k={k}"
        )));
    }
    let nf = F::of_u64(n);
    let kf = F::of_i64(k);
    let x = kf / nf;
    let shift = (kf - F::half()) / nf;
    Ok(nf * ((F::one() + shift) * x.ln_1p() + (F::one() - shift) * (-x).ln_1p()))
}

/// Sums `Σ_{j≥1} term(j)` where `bound(j) ≥ |term(j)|` drives truncation.
fn sum_series<F: Real>(
    x: F,
    ctl: SeriesControl,
    mut term: impl FnMut(usize) -> (F, F),
) -> Result<F> {
    let tol = F::lit(ctl.rel_tol);
    let floor = F::lit(1e-300);
    let mut acc = NeumaierSum::new();
    for j in 1..=ctl.max_terms {
        let (t, bound) = term(j);
        acc += t;
        let s = acc.sum().abs();
        if bound < floor || bound < tol * s {
            return Ok(acc.sum());
        }
    }
    Err(Error::NonConvergence {
        terms: ctl.max_terms,
        ratio: x.abs().to_f64().unwrap_or(f64::NAN),
    })
}

/// `b_{k,n} = Σ_{j≥1} (k/n)^{2j} (1/j)(n/(2j−1) − ½)` for `|k| < n`.
pub fn b_even_series<F: Real>(n: u64, k: i64, ctl: SeriesControl) -> Result<Exponent<F>> {
    if n == 0 || k.unsigned_abs() >= n {
        return Err(Error::domain(format!(
            "b_even series needs |k| < n, got n={n}, k={k}"
        )));
    }
    if k == 0 {
        return Ok(Exponent {
            b: F::zero(),
            method: Method::Series,
        });
    }
    let nf = F::of_u64(n);
    let x: F = ratio(n, k);
    let x2 = x * x;
    let mut pow = F::one();
    let b = sum_series(x, ctl, |j| {
        pow = pow * x2;
        let jf = F::of_u64(j as u64);
        let odd = F::lit(2.0) * jf - F::one();
        let t = pow / jf * (nf / odd - F::half());
        let bound = pow / jf * (nf / odd + F::half());
        (t, bound)
    })?;
    Ok(Exponent {
        b,
        method: Method::Series,
    })
}

/// `b*_{k,n} = Σ_{j≥1} (k/n)^{2j−1} (1/(2j−1)) (k/j − 1)` for `|k| < n`.
pub fn b_odd_series<F: Real>(n: u64, k: i64, ctl: SeriesControl) -> Result<Exponent<F>> {
    if n == 0 || k.unsigned_abs() >= n {
        return Err(Error::domain(format!(
            "b_odd series needs |k| < n, got n={n}, k={k}"
        )));
    }
    if k == 0 {
        return Ok(Exponent {
            b: F::zero(),
            method: Method::Series,
        });
    }
    let kf = F::of_i64(k);
    let x: F = ratio(n, k);
    let x2 = x * x;
    let mut pow = x / x2;
    let b = sum_series(x, ctl, |j| {
        pow = pow * x2;
        let jf = F::of_u64(j as u64);
        let odd = F::lit(2.0) * jf - F::one();
        // (k/j − 1) vanishes at j = k, so truncation looks at |k|/j + 1
        let t = pow / odd * (kf / jf - F::one());
        let bound = pow.abs() / odd * (kf.abs() / jf + F::one());
        (t, bound)
    })?;
    Ok(Exponent {
        b,
        method: Method::Series,
    })
}

/// Correction exponent for either lattice.
pub fn exponent<F: Real>(p: &GridPoint) -> Result<Exponent<F>> {
    match p.parity {
        Parity::Even => b_even(p.n, p.k),
        Parity::Odd => b_odd(p.n, p.k),
    }
}

/// `log(e^{−b} / √(πn)) = −b − ½ log(πn)`.
pub fn approx_prob<F: Real>(p: &GridPoint) -> Result<LogProb<F>> {
    let b = exponent::<F>(p)?.b;
    let c = half_log_pi_n::<F>(p.n);
    let value = -b - c;
    let err = F::lit(8.0) * F::epsilon() * (b.abs() + c.abs() + F::one());
    Ok(LogProb::new(value, err))
}

/// Classical de Moivre–Laplace: `−k²/n − ½ log(πn)`.
pub fn gaussian_prob<F: Real>(p: &GridPoint) -> Result<LogProb<F>> {
    if !p.is_valid() {
        return Err(Error::domain(format!("{p} is outside the grid")));
    }
    let k = F::of_i64(p.k);
    let q = k * k / F::of_u64(p.n);
    let c = half_log_pi_n::<F>(p.n);
    let value = -q - c;
    Ok(LogProb::new(
        value,
        F::lit(4.0) * F::epsilon() * (q + c.abs() + F::one()),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Composite Simpson quadrature of atanh on [0, x]; independent of the
    /// closed form.
    fn simpson_i(x: f64) -> f64 {
        let m = 20_000;
        let h = x / m as f64;
        let f = |t: f64| 0.5 * ((1.0 + t) / (1.0 - t)).ln();
        let mut s = f(0.0) + f(x);
        for i in 1..m {
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
        }
        s * h / 3.0
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn integral_examples() {
        assert_eq!(integral_i(0.0_f64).unwrap(), 0.0);
        // 50-digit value: 0.130812035941136959...
        assert!(close(
            integral_i(0.5).unwrap(),
            0.130_812_035_941_136_96,
            1e-15
        ));
        assert!(close(simpson_i(0.5), 0.130_812_035_941_136_96, 1e-12));
        assert_eq!(integral_i(-0.5_f64).unwrap(), integral_i(0.5).unwrap());
        assert!(integral_i(1.0_f64).is_err());
        assert!(integral_i(-1.5_f64).is_err());
    }

    #[test]
    fn integral_continuous_at_series_switch() {
        for x in [0.999_99e-4_f64, 1.000_01e-4, 3e-4] {
            let taylor = x * x / 2.0 + x.powi(4) / 12.0;
            let got = integral_i(x).unwrap();
            assert!((got - taylor).abs() < 1e-12 * taylor, "x={x}");
        }
    }

    #[test]
    fn trapezoid_examples() {
        assert_eq!(trapezoid_t::<f64>(9, 0).unwrap(), 0.0);
        for n in [2u64, 5, 100] {
            let t = trapezoid_t::<f64>(n, 1).unwrap();
            assert!(close(t, (1.0 / n as f64).atanh() / (2.0 * n as f64), 1e-17));
        }
        // (1/4)(atanh 0.25 + ½ atanh 0.5) = 0.13251647101250569...
        assert!(close(
            trapezoid_t::<f64>(4, 2).unwrap(),
            0.132_516_471_012_505_7,
            1e-15
        ));
        assert!(trapezoid_t::<f64>(4, 4).is_err());
        assert!(trapezoid_t::<f64>(4, -1).is_err());
    }

    #[test]
    fn trapezoid_row_matches() {
        let row = trapezoid_row::<f64>(50);
        for (k, t) in row.iter().enumerate() {
            assert!(close(*t, trapezoid_t::<f64>(50, k as i64).unwrap(), 1e-16));
        }
    }

    #[test]
    fn b_even_examples() {
        for n in [1u64, 7, 1000] {
            assert_eq!(b_even::<f64>(n, 0).unwrap().b, 0.0);
        }
        let b = b_even::<f64>(2, 1).unwrap();
        assert_eq!(b.method, Method::ClosedForm);
        // 3.5 ln 1.5 + 1.5 ln 0.5 = 0.379407107538657...
        assert!(close(b.b, 0.379_407_107_538_657_4, 1e-14));
        assert!(close(3.5 * 1.5f64.ln() + 1.5 * 0.5f64.ln(), b.b, 1e-14));
        assert!(close(
            4.0 * integral_i(0.5).unwrap() + 0.5 * 0.75f64.ln(),
            b.b,
            1e-14
        ));
        let edge = b_even::<f64>(1, 1).unwrap();
        assert_eq!(edge.method, Method::Boundary);
        assert!(close(edge.b, 0.813_929_418_195_190_5, 1e-14));
        assert!(close(
            (-edge.b).exp() / std::f64::consts::PI.sqrt(),
            0.25,
            1e-15
        ));
        assert!(b_even::<f64>(3, 4).is_err());
    }

    #[test]
    fn b_odd_examples() {
        assert_eq!(b_odd::<f64>(5, 0).unwrap().b, 0.0);
        // 4 I(0.5) − atanh(0.5) = −0.0260580005695070...
        let b = b_odd::<f64>(2, 1).unwrap().b;
        assert!(close(b, -0.026_058_000_569_507_01, 1e-15));
        assert!(close(
            2.0 * (1.25 * 1.5f64.ln() + 0.75 * 0.5f64.ln()),
            b,
            1e-15
        ));
        let edge = b_odd::<f64>(1, 1).unwrap();
        assert_eq!(edge.method, Method::Boundary);
        assert!(close(edge.b, 0.120_782_237_635_245_2, 1e-14));
        assert!(close(
            (-edge.b).exp() / std::f64::consts::PI.sqrt(),
            0.5,
            1e-15
        ));
        assert!(b_odd::<f64>(3, -3).is_err());
        assert!(b_odd::<f64>(3, -2).is_ok());
    }

    #[test]
    fn series_examples() {
        let ctl = SeriesControl::default();
        assert_eq!(b_even_series::<f64>(9, 0, ctl).unwrap().b, 0.0);
        let s = b_even_series::<f64>(10, 5, ctl).unwrap();
        assert_eq!(s.method, Method::Series);
        assert!(close(s.b, 2.472_399_682_596_848_7, 1e-10));
        assert!(close(s.b, b_even::<f64>(10, 5).unwrap().b, 1e-13));
        // leading term at (100, 10): (10²/100)(1 − 1/200)
        let one = b_even_series::<f64>(
            100,
            10,
            SeriesControl {
                rel_tol: 2.0,
                max_terms: 1,
            },
        );
        assert!(close(one.unwrap().b, 0.995, 1e-15));

        assert_eq!(b_odd_series::<f64>(9, 0, ctl).unwrap().b, 0.0);
        for n in [2u64, 3, 50, 300] {
            let s = b_odd_series::<f64>(n, 1, ctl).unwrap().b;
            let c = b_odd::<f64>(n, 1).unwrap().b;
            assert!(s < 0.0);
            assert!(close(s, c, 1e-14 + 1e-12 * c.abs()), "n={n}: {s} vs {c}");
        }
        assert!(close(
            b_odd_series::<f64>(2, 1, ctl).unwrap().b,
            -0.026_058_000_569_507,
            1e-8
        ));
        // j = k term vanishes; truncation must not stop there
        let s = b_odd_series::<f64>(40, 2, ctl).unwrap().b;
        assert!(close(s, b_odd::<f64>(40, 2).unwrap().b, 1e-15));
    }

    #[test]
    fn series_non_convergence() {
        let ctl = SeriesControl::default();
        assert!(matches!(
            b_even_series::<f64>(1000, 999, ctl),
            Err(Error::NonConvergence { .. })
        ));
        assert!(matches!(
            b_odd_series::<f64>(1000, 995, ctl),
            Err(Error::NonConvergence { .. })
        ));
        assert!(b_even_series::<f64>(10, 10, ctl).is_err());
        assert!(SeriesControl::new(0.0, 10).is_err());
    }

    #[test]
    fn approx_examples() {
        let p = GridPoint::even(1, 1).unwrap();
        assert!(close(
            approx_prob::<f64>(&p).unwrap().value,
            0.25f64.ln(),
            1e-15
        ));
        let p = GridPoint::even(2, 1).unwrap();
        assert!(close(
            approx_prob::<f64>(&p).unwrap().prob(),
            0.272_983_031_681_055_2,
            1e-12
        ));
        let p = GridPoint::odd(2, 1).unwrap();
        assert!(close(
            approx_prob::<f64>(&p).unwrap().prob(),
            0.409_474_547_521_582_8,
            1e-12
        ));
        let p = GridPoint::odd(7, 7).unwrap();
        assert!(close(
            approx_prob::<f64>(&p).unwrap().value,
            -13.0 * std::f64::consts::LN_2,
            1e-12
        ));
    }

    #[test]
    fn gaussian_examples() {
        let p = GridPoint::even(17, 0).unwrap();
        let c = 0.5 * (std::f64::consts::PI * 17.0).ln();
        assert!(close(gaussian_prob::<f64>(&p).unwrap().value, -c, 1e-15));
        let p = GridPoint::even(1000, 0).unwrap();
        assert!(close(
            gaussian_prob::<f64>(&p).unwrap().prob(),
            0.017_841_241_161_527_71,
            1e-15
        ));
        // tail: the Gaussian exponent is only the first term of b
        let p = GridPoint::even(100, 50).unwrap();
        let g = gaussian_prob::<f64>(&p).unwrap().value;
        let a = approx_prob::<f64>(&p).unwrap().value;
        assert!(close(g - a, 1.018_566_152_001_501_4, 1e-12));
        assert!(close((g - a).exp(), 2.769_2, 1e-3));
    }

    #[test]
    fn f32_instantiation() {
        let b = b_even::<f32>(2, 1).unwrap().b;
        assert!((b - 0.379_407_1).abs() < 1e-5);
        let p = GridPoint::odd(2, 1).unwrap();
        assert!((approx_prob::<f32>(&p).unwrap().prob() - 0.409_474_5).abs() < 1e-5);
    }

    proptest! {
        #[test]
        fn b_even_is_symmetric(n in 1u64..400, k_frac in 0.0f64..=1.0) {
            let k = (k_frac * n as f64).round() as i64;
            prop_assert_eq!(b_even::<f64>(n, k).unwrap().b, b_even::<f64>(n, -k).unwrap().b);
        }

        #[test]
        fn integral_matches_quadrature(x in -0.95f64..0.95) {
            let q = simpson_i(x.abs());
            prop_assert!((integral_i(x).unwrap() - q).abs() <= 1e-10);
            prop_assert!(integral_i(x).unwrap() >= 0.0);
        }
    }
}
