//! Certified brackets: Stirling, central term, trapezoid error, the two-sided
//! envelopes around the point approximation, and the de Moivre–Laplace window.
//!
//! All bounds are in natural-log space except the window ratios.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize, Serializer};

use crate::approx::approx_prob;
use crate::error::{Error, Result};
use crate::grid::{GridPoint, Parity};
use crate::scalar::Real;

/// Which constant the trapezoid-error term carries.
///
/// `PaperVerbatim` uses `r⁴/(6(1−r²)²n²)` as printed; `CorrectedTrapezoid`
/// uses `r²/(6(1−r²)²n²)`, which follows from `(atanh)'' ≤ 2r/(1−r²)²` over
/// `k` panels of width `1/n`. The lower envelopes inherit the same factor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BoundVariant {
    #[serde(rename = "paper")]
    PaperVerbatim,
    #[serde(rename = "corrected")]
    CorrectedTrapezoid,
}

impl BoundVariant {
    pub const ALL: [BoundVariant; 2] = [
        BoundVariant::PaperVerbatim,
        BoundVariant::CorrectedTrapezoid,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BoundVariant::PaperVerbatim => "paper",
            BoundVariant::CorrectedTrapezoid => "corrected",
        }
    }

    /// `r⁴` or `r²`.
    pub fn rho<F: Real>(self, r: F) -> F {
        match self {
            BoundVariant::PaperVerbatim => r.powi(4),
            BoundVariant::CorrectedTrapezoid => r * r,
        }
    }
}

impl fmt::Display for BoundVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BoundVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "paper" | "paperverbatim" | "paper-verbatim" => Ok(BoundVariant::PaperVerbatim),
            "corrected" | "correctedtrapezoid" | "corrected-trapezoid" => {
                Ok(BoundVariant::CorrectedTrapezoid)
            }
            other => Err(Error::domain(format!("unknown bound variant `{other}`"))),
        }
    }
}

/// A log-space lower bound; `MinusInfinity` is a tag, never a float sentinel.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LogBound<F> {
    Finite(F),
    MinusInfinity,
}

impl<F: Real> LogBound<F> {
    fn from_value(v: F) -> Self {
        if v.is_finite() {
            LogBound::Finite(v)
        } else {
            LogBound::MinusInfinity
        }
    }

    pub fn finite(&self) -> Option<F> {
        match *self {
            LogBound::Finite(v) => Some(v),
            LogBound::MinusInfinity => None,
        }
    }

    /// `self ≤ x`.
    pub fn le(&self, x: F) -> bool {
        match *self {
            LogBound::Finite(v) => v <= x,
            LogBound::MinusInfinity => true,
        }
    }
}

impl<F: Real + Serialize> Serialize for LogBound<F> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.finite().serialize(s)
    }
}

impl<F: Real> fmt::Display for LogBound<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LogBound::Finite(v) => write!(f, "{v}"),
            LogBound::MinusInfinity => f.write_str("-inf"),
        }
    }
}

/// Certified `(lower, point, upper)` triple for one grid point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(bound(serialize = "F: Real + Serialize"))]
pub struct Envelope<F> {
    pub point: GridPoint,
    pub log_lower: LogBound<F>,
    pub log_point: F,
    pub log_upper: F,
    pub variant: BoundVariant,
    /// False at the single-path extremes, where the exact value is substituted.
    pub lower_available: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(bound(serialize = "F: Real + Serialize"))]
pub struct Certificate<F> {
    pub envelope: Envelope<F>,
    /// `exp(log_upper − log_lower) − 1`.
    pub rel_err_guarantee: F,
    pub exact_in_interval: Option<bool>,
}

impl<F: Real> Certificate<F> {
    /// Records whether an oracle log-probability falls inside the envelope,
    /// allowing `slack` in log space.
    pub fn check_exact(&mut self, log_exact: F, slack: F) -> bool {
        let e = &self.envelope;
        let inside = e.log_lower.le(log_exact + slack) && log_exact <= e.log_upper + slack;
        self.exact_in_interval = Some(inside);
        inside
    }
}

fn require_n(n: u64) -> Result<()> {
    if n == 0 {
        return Err(Error::domain("n must be at least 1"));
    }
    Ok(())
}

/// `log` of `√(2πn)(n/e)^n e^{1/(12n+1)}` and `√(2πn)(n/e)^n e^{1/(12n)}`.
pub fn stirling_bounds<F: Real>(n: u64) -> Result<(F, F)> {
    require_n(n)?;
    let nf = F::of_u64(n);
    let base = F::half() * (F::TAU() * nf).ln() + nf * nf.ln() - nf;
    let twelve_n = F::lit(12.0) * nf;
    Ok((
        base + (twelve_n + F::one()).recip(),
        base + twelve_n.recip(),
    ))
}

/// Brackets for the central term `log a_{0,n}` or `log a*_{0,n}`.
pub fn central_bounds<F: Real>(n: u64, parity: Parity) -> Result<(F, F)> {
    require_n(n)?;
    let nf = F::of_u64(n);
    let c = -F::half() * (F::PI() * nf).ln();
    Ok(match parity {
        Parity::Even => (
            c - (F::lit(7.0) * nf).recip(),
            c - (F::lit(9.0) * nf).recip(),
        ),
        Parity::Odd => (c - nf.recip(), c + F::lit(2.0) / (F::lit(3.0) * nf)),
    })
}

/// Bound on `T_{k,n} − I(k/n)` for `0 ≤ k < n`, `r = k/n`.
pub fn trapezoid_error_bound<F: Real>(n: u64, k: i64, variant: BoundVariant) -> Result<F> {
    if n == 0 || k < 0 || k as u64 >= n {
        return Err(Error::domain(format!(
            "trapezoid bound needs 0 ≤ k < n, got n={n}, k={k}"
        )));
    }
    let nf = F::of_u64(n);
    let r = F::of_i64(k) / nf;
    let q = F::one() - r * r;
    Ok(variant.rho(r) / (F::lit(6.0) * q * q * nf * nf))
}

/// `ρ/(3(1−r²)²n)` with `r = |k|/n`.
fn lower_penalty<F: Real>(n: u64, k: i64, variant: BoundVariant) -> F {
    let nf = F::of_u64(n);
    let r = F::of_u64(k.unsigned_abs()) / nf;
    let q = F::one() - r * r;
    variant.rho(r) / (F::lit(3.0) * q * q * nf)
}

/// Right-hand side of the upper inequality: `log_point` (even) or
/// `log_point + 2/(3n)` (odd). Valid on the whole lattice.
pub fn theorem_upper<F: Real>(p: &GridPoint) -> Result<F> {
    let point = approx_prob::<F>(p)?.value;
    Ok(match p.parity {
        Parity::Even => point,
        Parity::Odd => point + F::lit(2.0) / (F::lit(3.0) * F::of_u64(p.n)),
    })
}

/// Right-hand side of the lower inequality with `r = |k|/n`:
/// `log_point − 1/(7n) − ρ/(3(1−r²)²n)` (even) or `log_point − 1/n − …` (odd).
/// `None` at the extremes, where it does not apply.
pub fn theorem_lower<F: Real>(p: &GridPoint, variant: BoundVariant) -> Result<Option<F>> {
    let point = approx_prob::<F>(p)?.value;
    if p.is_boundary() {
        return Ok(None);
    }
    let nf = F::of_u64(p.n);
    let central = match p.parity {
        Parity::Even => (F::lit(7.0) * nf).recip(),
        Parity::Odd => nf.recip(),
    };
    Ok(Some(
        point - central - lower_penalty::<F>(p.n, p.k, variant),
    ))
}

pub fn envelope<F: Real>(p: &GridPoint, variant: BoundVariant) -> Result<Envelope<F>> {
    let log_point = approx_prob::<F>(p)?.value;
    match theorem_lower::<F>(p, variant)? {
        Some(lower) => Ok(Envelope {
            point: *p,
            log_lower: LogBound::from_value(lower),
            log_point,
            log_upper: theorem_upper(p)?,
            variant,
            lower_available: true,
        }),
        None => {
            // single path: probability is exactly 2^{−steps}
            let exact = -F::of_u64(p.steps()) * F::LN_2();
            Ok(Envelope {
                point: *p,
                log_lower: LogBound::Finite(exact),
                log_point,
                log_upper: exact,
                variant,
                lower_available: false,
            })
        }
    }
}

/// `|k|³ ≤ n²` with `n ≥ 3` (even) or `n ≥ 4` (odd).
pub fn dml_window_contains(p: &GridPoint) -> bool {
    let min_n = match p.parity {
        Parity::Even => 3,
        Parity::Odd => 4,
    };
    let k = p.k.unsigned_abs() as u128;
    let n = p.n as u128;
    p.n >= min_n && k * k * k <= n * n
}

/// Interval for `exact / gaussian` inside the window:
/// `(1 ∓ 2n^{−1/3})` even, `(1 − 3n^{−1/3}, 1 + 6n^{−1/3})` odd.
pub fn dml_bounds<F: Real>(p: &GridPoint) -> Result<(F, F)> {
    if !dml_window_contains(p) {
        return Err(Error::Window(*p));
    }
    let t = F::of_u64(p.n).cbrt().recip();
    Ok(match p.parity {
        Parity::Even => (F::one() - F::lit(2.0) * t, F::one() + F::lit(2.0) * t),
        Parity::Odd => (F::one() - F::lit(3.0) * t, F::one() + F::lit(6.0) * t),
    })
}

pub fn certificate<F: Real>(p: &GridPoint, variant: BoundVariant) -> Result<Certificate<F>> {
    let envelope = envelope::<F>(p, variant)?;
    let rel_err_guarantee = match envelope.log_lower {
        LogBound::Finite(lo) => (envelope.log_upper - lo).exp_m1(),
        LogBound::MinusInfinity => F::infinity(),
    };
    Ok(Certificate {
        envelope,
        rel_err_guarantee,
        exact_in_interval: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{exact_even, log_dyadic, log_factorial};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn stirling_examples() {
        let (lo, hi) = stirling_bounds::<f64>(1).unwrap();
        assert!(close(lo.exp(), 0.995_870_161_462_797_3, 1e-14));
        assert!(close(hi.exp(), 1.002_274_449_182_226_7, 1e-14));
        assert!(lo < 0.0 && 0.0 < hi);
        let (lo, hi) = stirling_bounds::<f64>(2).unwrap();
        assert!(close(lo.exp(), 1.997_320_404_751_810_5, 1e-13));
        assert!(close(hi.exp(), 2.000_652_047_690_966, 1e-13));
        let (lo, hi) = stirling_bounds::<f64>(10).unwrap();
        let f = log_factorial(10).value;
        assert!(lo < f && f < hi);
        assert!(stirling_bounds::<f64>(0).is_err());
    }

    #[test]
    fn central_examples() {
        let (lo, hi) = central_bounds::<f64>(1, Parity::Even).unwrap();
        assert!(close(lo.exp(), 0.489_083_481_246_808_6, 1e-14));
        assert!(close(hi.exp(), 0.504_859_021_495_658, 1e-14));
        assert!(lo < 0.5f64.ln() && 0.5f64.ln() < hi);
        let (lo, hi) = central_bounds::<f64>(5, Parity::Even).unwrap();
        assert!(close(lo.exp(), 0.245_206_313_296_406_9, 1e-14));
        assert!(close(hi.exp(), 0.246_768_131_684_547_2, 1e-14));
        let exact = log_dyadic(&exact_even(5, 0).unwrap()).unwrap().value;
        assert!(lo < exact && exact < hi);
        let (lo, hi) = central_bounds::<f64>(1, Parity::Odd).unwrap();
        assert!(close(lo.exp(), 0.207_553_748_710_297_4, 1e-14));
        assert!(close(hi.exp(), 1.098_891_257_484_426, 1e-14));
    }

    #[test]
    fn trapezoid_bound_examples() {
        for v in BoundVariant::ALL {
            assert_eq!(trapezoid_error_bound::<f64>(7, 0, v).unwrap(), 0.0);
        }
        let p = trapezoid_error_bound::<f64>(4, 2, BoundVariant::PaperVerbatim).unwrap();
        assert!(close(p, 0.001_157_407_407_407_407_4, 1e-16));
        let c = trapezoid_error_bound::<f64>(4, 2, BoundVariant::CorrectedTrapezoid).unwrap();
        assert!(close(c, 0.004_629_629_629_629_63, 1e-16));
        assert!(trapezoid_error_bound::<f64>(4, 4, BoundVariant::PaperVerbatim).is_err());
    }

    #[test]
    fn envelope_examples() {
        let p = GridPoint::even(2, 1).unwrap();
        let e = envelope::<f64>(&p, BoundVariant::PaperVerbatim).unwrap();
        assert!(e.lower_available);
        assert!(close(e.log_upper.exp(), 0.272_983_031_681_055_2, 1e-12));
        let lo = e.log_lower.finite().unwrap();
        assert!(close(lo.exp(), 0.249_500_906_460_132_5, 1e-12));
        assert!(lo < 0.25f64.ln() && 0.25f64.ln() < e.log_upper);

        for v in BoundVariant::ALL {
            let e = envelope::<f64>(&GridPoint::even(1, 1).unwrap(), v).unwrap();
            assert!(!e.lower_available);
            assert_eq!(e.log_lower.finite().unwrap(), e.log_upper);
            assert!(close(e.log_upper.exp(), 0.25, 1e-16));
        }

        let p = GridPoint::even(10, 5).unwrap();
        let exact = (15504.0_f64 / 1_048_576.0).ln();
        let paper = envelope::<f64>(&p, BoundVariant::PaperVerbatim).unwrap();
        let lo = paper.log_lower.finite().unwrap();
        assert!(close(lo.exp(), 0.014_786_412_562_350_59, 1e-12));
        assert!(lo > exact);
        assert!(close(exact - lo, -4.368_706_036_908_166e-5, 1e-12));
        let corr = envelope::<f64>(&p, BoundVariant::CorrectedTrapezoid).unwrap();
        let lo = corr.log_lower.finite().unwrap();
        assert!(close(lo.exp(), 0.014_623_028_459_797_16, 1e-12));
        assert!(lo < exact);

        let p = GridPoint::odd(3, 3).unwrap();
        let e = envelope::<f64>(&p, BoundVariant::CorrectedTrapezoid).unwrap();
        assert!(!e.lower_available);
        assert!(close(e.log_upper, -5.0 * std::f64::consts::LN_2, 1e-14));
        let p = GridPoint::odd(3, -2).unwrap();
        let e = envelope::<f64>(&p, BoundVariant::CorrectedTrapezoid).unwrap();
        assert!(e.lower_available);
        assert!(close(e.log_upper - e.log_point, 2.0 / 9.0, 1e-15));
    }

    #[test]
    fn window_examples() {
        assert!(dml_window_contains(&GridPoint::even(3, 2).unwrap()));
        assert!(!dml_window_contains(&GridPoint::even(3, 3).unwrap()));
        assert!(!dml_window_contains(&GridPoint::odd(3, 1).unwrap()));
        assert!(!dml_window_contains(&GridPoint::even(2, 0).unwrap()));
        assert!(dml_window_contains(&GridPoint::odd(4, -2).unwrap()));

        let (lo, hi) = dml_bounds::<f64>(&GridPoint::even(1000, 37).unwrap()).unwrap();
        assert!(close(lo, 0.8, 1e-15) && close(hi, 1.2, 1e-15));
        let (lo, hi) = dml_bounds::<f64>(&GridPoint::even(3, 0).unwrap()).unwrap();
        assert!(close(lo, -0.386_722_548_701_269_4, 1e-14));
        assert!(close(hi, 2.386_722_548_701_269_4, 1e-14));
        let ratio = 20.0 / 64.0 * (3.0 * std::f64::consts::PI).sqrt();
        assert!(close(ratio, 0.959_368_788_699_833, 1e-14));
        assert!(lo < ratio && ratio < hi);
        let (lo, hi) = dml_bounds::<f64>(&GridPoint::odd(8, 0).unwrap()).unwrap();
        assert!(close(lo, -0.5, 1e-15) && close(hi, 4.0, 1e-15));
        assert!(matches!(
            dml_bounds::<f64>(&GridPoint::odd(3, 1).unwrap()),
            Err(Error::Window(_))
        ));
    }

    #[test]
    fn certificate_examples() {
        let c = certificate::<f64>(&GridPoint::even(2, 1).unwrap(), BoundVariant::PaperVerbatim)
            .unwrap();
        assert!(close(c.rel_err_guarantee, 0.094_116_392_417_495_75, 1e-14));
        for v in BoundVariant::ALL {
            let c = certificate::<f64>(&GridPoint::even(1, 1).unwrap(), v).unwrap();
            assert_eq!(c.rel_err_guarantee, 0.0);
        }
        let c = certificate::<f64>(
            &GridPoint::even(1_000_000, 0).unwrap(),
            BoundVariant::CorrectedTrapezoid,
        )
        .unwrap();
        assert!(close(c.rel_err_guarantee, 1.428_571_530_612_252e-7, 1e-15));

        let mut c = certificate::<f64>(
            &GridPoint::even(10, 5).unwrap(),
            BoundVariant::PaperVerbatim,
        )
        .unwrap();
        assert!(!c.check_exact((15504.0_f64 / 1_048_576.0).ln(), 1e-9));
        assert_eq!(c.exact_in_interval, Some(false));
    }

    #[test]
    fn guarantee_shrinks_with_n() {
        for v in BoundVariant::ALL {
            for parity in Parity::ALL {
                for (num, den) in [(0u64, 1u64), (1, 4), (1, 2)] {
                    let mut prev = f64::INFINITY;
                    for n in (4u64..=4000).step_by(4) {
                        let k = (n * num / den) as i64;
                        let p = GridPoint::new(parity, n, k).unwrap();
                        let g = certificate::<f64>(&p, v).unwrap().rel_err_guarantee;
                        assert!(g <= prev, "{p} {v}");
                        prev = g;
                    }
                }
            }
        }
    }

    #[test]
    fn variant_parsing() {
        assert_eq!(
            "paper".parse::<BoundVariant>().unwrap(),
            BoundVariant::PaperVerbatim
        );
        assert_eq!(
            "Corrected".parse::<BoundVariant>().unwrap(),
            BoundVariant::CorrectedTrapezoid
        );
        assert!("loose".parse::<BoundVariant>().is_err());
    }
}
