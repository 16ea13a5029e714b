//! Grid verification: evaluates every inequality against the exact oracle over
//! ranges of `(parity, n, k)` and writes deterministic CSV/JSON reports.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use astro_float::BigFloat;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::approx::{
    approx_prob, b_even, b_even_series, b_odd, b_odd_series, gaussian_prob, integral_i,
    trapezoid_row, SeriesControl,
};
use crate::envelope::{
    central_bounds, dml_bounds, dml_window_contains, envelope, stirling_bounds, theorem_lower,
    theorem_upper, trapezoid_error_bound, BoundVariant, LogBound,
};
use crate::error::{Error, Result};
use crate::exact::{
    binomial_row, log_dyadic, log_even_recurrence_row, log_factorial, DyadicRational, LogProb,
};
use crate::grid::{GridPoint, Parity};
use crate::precise::{Precise, DEFAULT_BITS};

/// Log-space slack for inequality checks.
pub const LOG_SLACK: f64 = 1e-9;
/// Agreement required between the recurrence and the dyadic log.
pub const COHERENCE_TOL: f64 = 1e-9;
/// Relative agreement required between closed-form and series exponents.
pub const SERIES_REL_TOL: f64 = 1e-12;
/// Absolute agreement used instead when `|b| < SERIES_SMALL_B`.
pub const SERIES_ABS_TOL: f64 = 1e-14;
pub const SERIES_SMALL_B: f64 = 1e-3;
/// Series checks run where `|k|/n` does not exceed this.
pub const SERIES_MAX_RATIO: f64 = 0.75;
pub const DEFAULT_CELL_CAP: u64 = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SuiteId {
    Thm1Upper,
    Thm1Lower,
    Thm1Window,
    Thm2Upper,
    Thm2Lower,
    Thm2Window,
    Trapezoid,
    Series,
    Stirling,
    Central,
    OracleCoherence,
}

impl SuiteId {
    pub const ALL: [SuiteId; 11] = [
        SuiteId::Thm1Upper,
        SuiteId::Thm1Lower,
        SuiteId::Thm1Window,
        SuiteId::Thm2Upper,
        SuiteId::Thm2Lower,
        SuiteId::Thm2Window,
        SuiteId::Trapezoid,
        SuiteId::Series,
        SuiteId::Stirling,
        SuiteId::Central,
        SuiteId::OracleCoherence,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SuiteId::Thm1Upper => "Thm1Upper",
            SuiteId::Thm1Lower => "Thm1Lower",
            SuiteId::Thm1Window => "Thm1Window",
            SuiteId::Thm2Upper => "Thm2Upper",
            SuiteId::Thm2Lower => "Thm2Lower",
            SuiteId::Thm2Window => "Thm2Window",
            SuiteId::Trapezoid => "Trapezoid",
            SuiteId::Series => "Series",
            SuiteId::Stirling => "Stirling",
            SuiteId::Central => "Central",
            SuiteId::OracleCoherence => "OracleCoherence",
        }
    }

    /// Suites whose PaperVerbatim outcome is reported but not asserted.
    pub fn report_only(self, variant: BoundVariant) -> bool {
        variant == BoundVariant::PaperVerbatim
            && matches!(
                self,
                SuiteId::Thm1Lower | SuiteId::Thm2Lower | SuiteId::Trapezoid
            )
    }

    /// Expands a suite name or group (`all`, `thm1`, `thm2`, `window`, ...).
    pub fn parse_group(s: &str) -> Result<Vec<SuiteId>> {
        let lower = s.to_ascii_lowercase();
        let group = match lower.as_str() {
            "all" => SuiteId::ALL.to_vec(),
            "thm1" => vec![SuiteId::Thm1Upper, SuiteId::Thm1Lower, SuiteId::Thm1Window],
            "thm2" => vec![SuiteId::Thm2Upper, SuiteId::Thm2Lower, SuiteId::Thm2Window],
            "upper" => vec![SuiteId::Thm1Upper, SuiteId::Thm2Upper],
            "lower" => vec![SuiteId::Thm1Lower, SuiteId::Thm2Lower],
            "window" => vec![SuiteId::Thm1Window, SuiteId::Thm2Window],
            "trapezoid" => vec![SuiteId::Trapezoid],
            "series" => vec![SuiteId::Series],
            "stirling" => vec![SuiteId::Stirling],
            "central" => vec![SuiteId::Central],
            "oracle" | "coherence" => vec![SuiteId::OracleCoherence],
            _ => match SuiteId::ALL
                .iter()
                .find(|id| id.as_str().eq_ignore_ascii_case(s))
            {
                Some(id) => vec![*id],
                None => return Err(Error::domain(format!("unknown suite `{s}`"))),
            },
        };
        Ok(group)
    }
}

impl fmt::Display for SuiteId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum KPolicy {
    All,
    /// `|k|³ ≤ n²`.
    Window,
    /// `|k| ≤ r_max·n`.
    Fraction(f64),
}

impl FromStr for KPolicy {
    type Err = Error;

    /// `all`, `window` or `fraction:<r>`.
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        match lower.as_str() {
            "all" => Ok(KPolicy::All),
            "window" => Ok(KPolicy::Window),
            other => match other.strip_prefix("fraction:") {
                Some(r) => r
                    .parse::<f64>()
                    .map(KPolicy::Fraction)
                    .map_err(|_| Error::domain(format!("bad fraction `{r}`"))),
                None => Err(Error::domain(format!("unknown k policy `{s}`"))),
            },
        }
    }
}

#[derive(Clone, Debug)]
pub struct SweepSpec {
    pub parities: BTreeSet<Parity>,
    pub n_min: u64,
    pub n_max: u64,
    pub k_policy: KPolicy,
    pub variants: BTreeSet<BoundVariant>,
    pub suites: BTreeSet<SuiteId>,
    pub cell_cap: u64,
    /// Worker threads; 0 picks the rayon default.
    pub workers: usize,
    pub slack: f64,
    /// Working precision of the violation re-check.
    pub escalation_bits: usize,
}

impl SweepSpec {
    /// Both parities, both variants, every suite, all `k`.
    pub fn new(n_min: u64, n_max: u64) -> Self {
        SweepSpec {
            parities: Parity::ALL.into_iter().collect(),
            n_min,
            n_max,
            k_policy: KPolicy::All,
            variants: BoundVariant::ALL.into_iter().collect(),
            suites: SuiteId::ALL.into_iter().collect(),
            cell_cap: DEFAULT_CELL_CAP,
            workers: 0,
            slack: LOG_SLACK,
            escalation_bits: DEFAULT_BITS,
        }
    }

    pub fn parities(mut self, p: impl IntoIterator<Item = Parity>) -> Self {
        self.parities = p.into_iter().collect();
        self
    }

    pub fn variants(mut self, v: impl IntoIterator<Item = BoundVariant>) -> Self {
        self.variants = v.into_iter().collect();
        self
    }

    pub fn suites(mut self, s: impl IntoIterator<Item = SuiteId>) -> Self {
        self.suites = s.into_iter().collect();
        self
    }

    pub fn k_policy(mut self, k: KPolicy) -> Self {
        self.k_policy = k;
        self
    }

    pub fn workers(mut self, w: usize) -> Self {
        self.workers = w;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_min < 1 || self.n_min > self.n_max {
            return Err(Error::domain(format!(
                "sweep needs 1 ≤ n_min ≤ n_max, got {}..{}",
                self.n_min, self.n_max
            )));
        }
        if let KPolicy::Fraction(r) = self.k_policy {
            if !(r > 0.0 && r < 1.0) {
                return Err(Error::domain(format!(
                    "fraction r_max must lie in (0, 1), got {r}"
                )));
            }
        }
        if self.parities.is_empty() || self.variants.is_empty() || self.suites.is_empty() {
            return Err(Error::domain(
                "sweep needs at least one parity, variant and suite",
            ));
        }
        if !(self.slack >= 0.0) {
            return Err(Error::domain("slack must be non-negative"));
        }
        Ok(())
    }

    /// Inclusive `k` range selected for one `(parity, n)`.
    pub fn k_range(&self, parity: Parity, n: u64) -> (i64, i64) {
        let m = match self.k_policy {
            KPolicy::All => n,
            KPolicy::Window => icbrt(n as u128 * n as u128).min(n),
            KPolicy::Fraction(r) => ((r * n as f64).floor() as u64).min(n),
        } as i64;
        match parity {
            Parity::Even => (-m, m),
            Parity::Odd => ((-m).max(1 - n as i64), m),
        }
    }

    /// Number of records the sweep would produce.
    pub fn cells(&self) -> u64 {
        let per_variant: u64 = self
            .parities
            .iter()
            .map(|&p| {
                (self.n_min..=self.n_max)
                    .map(|n| {
                        let (lo, hi) = self.k_range(p, n);
                        (hi - lo + 1) as u64
                    })
                    .sum::<u64>()
            })
            .sum();
        per_variant.saturating_mul(self.variants.len() as u64)
    }
}

/// `⌊∛x⌋`.
fn icbrt(x: u128) -> u64 {
    let mut r = (x as f64).cbrt() as u128;
    while r * r * r > x {
        r -= 1;
    }
    while (r + 1) * (r + 1) * (r + 1) <= x {
        r += 1;
    }
    r as u64
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CheckStatus {
    Pass(f64),
    Violation(f64),
    NotApplicable,
}

impl CheckStatus {
    pub fn label(&self) -> &'static str {
        match self {
            CheckStatus::Pass(_) => "pass",
            CheckStatus::Violation(_) => "violation",
            CheckStatus::NotApplicable => "na",
        }
    }

    pub fn margin(&self) -> Option<f64> {
        match *self {
            CheckStatus::Pass(m) | CheckStatus::Violation(m) => Some(m),
            CheckStatus::NotApplicable => None,
        }
    }

    pub fn is_violation(&self) -> bool {
        matches!(self, CheckStatus::Violation(_))
    }
}

/// One verified `(parity, n, k, variant)` cell. Margins are positive when the
/// claim holds.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRecord {
    pub parity: Parity,
    pub n: u64,
    pub k: i64,
    pub variant: BoundVariant,
    pub log_exact: f64,
    pub log_point: f64,
    pub log_lower: LogBound<f64>,
    pub log_upper: f64,
    pub log_gauss: f64,
    pub in_window: bool,
    pub checks: BTreeMap<SuiteId, CheckStatus>,
    /// Measured `T_{k,n} − I(k/n)` where the trapezoid suite applies.
    pub trapezoid_gap: Option<f64>,
}

impl SweepRecord {
    pub fn point(&self) -> GridPoint {
        GridPoint {
            parity: self.parity,
            n: self.n,
            k: self.k,
        }
    }
}

/// Quantities shared by every variant at one grid point.
struct PointData {
    pt: GridPoint,
    log_exact: f64,
    log_point: f64,
    log_gauss: f64,
    in_window: bool,
    upper: f64,
    recurrence: Option<LogProb<f64>>,
    trapezoid_gap: Option<f64>,
}

struct Task<'a> {
    spec: &'a SweepSpec,
    precise: Option<Precise>,
}

impl<'a> Task<'a> {
    fn precise(&mut self) -> &mut Precise {
        let bits = self.spec.escalation_bits;
        self.precise.get_or_insert_with(|| Precise::new(bits))
    }

    /// Log-space inequality: `margin ≥ −slack` passes, anything else is
    /// recomputed at high precision before it is reported.
    fn log_check(
        &mut self,
        margin: f64,
        recheck: impl FnOnce(&mut Precise) -> BigFloat,
    ) -> CheckStatus {
        self.escalate(margin, self.spec.slack, recheck)
    }

    fn escalate(
        &mut self,
        margin: f64,
        slack: f64,
        recheck: impl FnOnce(&mut Precise) -> BigFloat,
    ) -> CheckStatus {
        if margin >= -slack {
            return CheckStatus::Pass(margin);
        }
        let m = Precise::to_f64(&recheck(self.precise()));
        if m >= -slack {
            CheckStatus::Pass(m)
        } else {
            CheckStatus::Violation(m)
        }
    }

    fn run(&mut self, parity: Parity, n: u64) -> Result<Vec<SweepRecord>> {
        let spec = self.spec;
        let wants = |s: SuiteId| spec.suites.contains(&s);
        let steps = match parity {
            Parity::Even => 2 * n,
            Parity::Odd => 2 * n - 1,
        };
        let row = binomial_row(steps);
        let recurrence = if parity == Parity::Even && wants(SuiteId::OracleCoherence) {
            Some(log_even_recurrence_row(n)?)
        } else {
            None
        };
        let trapezoid = if parity == Parity::Even && wants(SuiteId::Trapezoid) {
            Some(trapezoid_row::<f64>(n))
        } else {
            None
        };

        let (k_lo, k_hi) = spec.k_range(parity, n);
        let mut out = Vec::with_capacity(((k_hi - k_lo + 1) as usize) * spec.variants.len());
        for k in k_lo..=k_hi {
            let pt = GridPoint::new(parity, n, k)?;
            let idx = match parity {
                Parity::Even => n as i64 + k,
                Parity::Odd => n as i64 + k - 1,
            } as usize;
            let exact = DyadicRational::new(row[idx].clone(), steps)?;
            let data = PointData {
                pt,
                log_exact: log_dyadic(&exact)?.value,
                log_point: approx_prob::<f64>(&pt)?.value,
                log_gauss: gaussian_prob::<f64>(&pt)?.value,
                in_window: dml_window_contains(&pt),
                upper: theorem_upper::<f64>(&pt)?,
                recurrence: recurrence.as_ref().map(|r| r[k.unsigned_abs() as usize]),
                trapezoid_gap: match &trapezoid {
                    Some(t) if k >= 0 && (k as u64) < n => {
                        Some(t[k as usize] - integral_i::<f64>(k as f64 / n as f64)?)
                    }
                    _ => None,
                },
            };
            let shared = self.shared_checks(&data)?;
            for &variant in &spec.variants {
                let mut checks = shared.clone();
                self.variant_checks(&data, variant, &mut checks)?;
                let env = envelope::<f64>(&pt, variant)?;
                out.push(SweepRecord {
                    parity,
                    n,
                    k,
                    variant,
                    log_exact: data.log_exact,
                    log_point: data.log_point,
                    log_lower: env.log_lower,
                    log_upper: env.log_upper,
                    log_gauss: data.log_gauss,
                    in_window: data.in_window,
                    checks,
                    trapezoid_gap: data.trapezoid_gap,
                });
            }
        }
        Ok(out)
    }

    /// Checks that do not depend on the bound variant.
    fn shared_checks(&mut self, d: &PointData) -> Result<BTreeMap<SuiteId, CheckStatus>> {
        let spec = self.spec;
        let pt = d.pt;
        let mut checks = BTreeMap::new();
        for &suite in &spec.suites {
            let status = match suite {
                SuiteId::Thm1Upper | SuiteId::Thm2Upper => {
                    if parity_suite(suite) != pt.parity {
                        CheckStatus::NotApplicable
                    } else {
                        self.log_check(d.upper - d.log_exact, |p| {
                            let u = p.theorem_upper(&pt);
                            let e = p.log_exact(&pt);
                            p.diff(&u, &e)
                        })
                    }
                }
                SuiteId::Thm1Window | SuiteId::Thm2Window => {
                    if parity_suite(suite) != pt.parity || !d.in_window {
                        CheckStatus::NotApplicable
                    } else {
                        let (lo, hi) = dml_bounds::<f64>(&pt)?;
                        let lr = d.log_exact - d.log_gauss;
                        let mut margin = hi.ln() - lr;
                        if lo > 0.0 {
                            margin = margin.min(lr - lo.ln());
                        }
                        self.log_check(margin, |p| {
                            let e = p.log_exact(&pt);
                            let g = p.log_gauss(&pt);
                            let lr = p.diff(&e, &g);
                            let (ln_lo, ln_hi) = p.log_dml_bounds(&pt);
                            let m = p.diff(&ln_hi, &lr);
                            match ln_lo {
                                Some(l) => {
                                    let below = p.diff(&lr, &l);
                                    p.min(m, below)
                                }
                                None => m,
                            }
                        })
                    }
                }
                SuiteId::Series => series_check(&pt)?,
                SuiteId::Stirling => {
                    if pt.parity == Parity::Even && pt.k == 0 {
                        let (lo, hi) = stirling_bounds::<f64>(pt.n)?;
                        let f = log_factorial(pt.n).value;
                        self.log_check((f - lo).min(hi - f), |p| {
                            let f = p.log_factorial(pt.n);
                            let (lo, hi) = p.stirling_bounds(pt.n);
                            let a = p.diff(&f, &lo);
                            let b = p.diff(&hi, &f);
                            p.min(a, b)
                        })
                    } else {
                        CheckStatus::NotApplicable
                    }
                }
                SuiteId::Central => {
                    if pt.k == 0 {
                        let (lo, hi) = central_bounds::<f64>(pt.n, pt.parity)?;
                        let e = d.log_exact;
                        self.log_check((e - lo).min(hi - e), |p| {
                            let e = p.log_exact(&pt);
                            let (lo, hi) = p.central_bounds(pt.n, pt.parity);
                            let a = p.diff(&e, &lo);
                            let b = p.diff(&hi, &e);
                            p.min(a, b)
                        })
                    } else {
                        CheckStatus::NotApplicable
                    }
                }
                SuiteId::OracleCoherence => match d.recurrence {
                    Some(r) => {
                        let margin = COHERENCE_TOL - (r.value - d.log_exact).abs();
                        if margin >= 0.0 {
                            CheckStatus::Pass(margin)
                        } else {
                            CheckStatus::Violation(margin)
                        }
                    }
                    None => CheckStatus::NotApplicable,
                },
                // variant dependent, filled in later
                SuiteId::Thm1Lower | SuiteId::Thm2Lower | SuiteId::Trapezoid => continue,
            };
            checks.insert(suite, status);
        }
        Ok(checks)
    }

    fn variant_checks(
        &mut self,
        d: &PointData,
        variant: BoundVariant,
        checks: &mut BTreeMap<SuiteId, CheckStatus>,
    ) -> Result<()> {
        let pt = d.pt;
        let spec = self.spec;
        for &suite in &spec.suites {
            let status = match suite {
                SuiteId::Thm1Lower | SuiteId::Thm2Lower => {
                    match theorem_lower::<f64>(&pt, variant)? {
                        Some(lower) if parity_suite(suite) == pt.parity => {
                            self.log_check(d.log_exact - lower, |p| {
                                let e = p.log_exact(&pt);
                                let l = p.theorem_lower(&pt, variant).expect("interior point");
                                p.diff(&e, &l)
                            })
                        }
                        _ => CheckStatus::NotApplicable,
                    }
                }
                SuiteId::Trapezoid => match d.trapezoid_gap {
                    Some(gap) => {
                        let bound = trapezoid_error_bound::<f64>(pt.n, pt.k, variant)?;
                        // not a log-space quantity: no slack, exact re-check
                        self.escalate(gap.min(bound - gap), 0.0, |p| {
                            let g = p.trapezoid_gap(pt.n, pt.k);
                            let b = p.trapezoid_bound(pt.n, pt.k, variant);
                            let over = p.diff(&b, &g);
                            p.min(g, over)
                        })
                    }
                    None => CheckStatus::NotApplicable,
                },
                _ => continue,
            };
            checks.insert(suite, status);
        }
        Ok(())
    }
}

fn parity_suite(s: SuiteId) -> Parity {
    match s {
        SuiteId::Thm2Upper | SuiteId::Thm2Lower | SuiteId::Thm2Window => Parity::Odd,
        _ => Parity::Even,
    }
}

/// Closed form vs power series of the correction exponent.
fn series_check(pt: &GridPoint) -> Result<CheckStatus> {
    let n = pt.n;
    let k = pt.k;
    if k.unsigned_abs() >= n || k.unsigned_abs() as f64 > SERIES_MAX_RATIO * n as f64 {
        return Ok(CheckStatus::NotApplicable);
    }
    let ctl = SeriesControl::default();
    let (closed, series) = match pt.parity {
        Parity::Even => (b_even::<f64>(n, k)?.b, b_even_series::<f64>(n, k, ctl)),
        Parity::Odd => (b_odd::<f64>(n, k)?.b, b_odd_series::<f64>(n, k, ctl)),
    };
    let series = match series {
        Ok(s) => s.b,
        Err(Error::NonConvergence { .. }) => return Ok(CheckStatus::Violation(f64::NEG_INFINITY)),
        Err(e) => return Err(e),
    };
    let tol = if closed.abs() < SERIES_SMALL_B {
        SERIES_ABS_TOL
    } else {
        SERIES_REL_TOL * closed.abs()
    };
    let margin = tol - (closed - series).abs();
    Ok(if margin >= 0.0 {
        CheckStatus::Pass(margin)
    } else {
        CheckStatus::Violation(margin)
    })
}

/// Runs the sweep; records come back in `(parity, n, k, variant)` order
/// regardless of the worker count.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRecord>> {
    spec.validate()?;
    let cells = spec.cells();
    if cells > spec.cell_cap {
        return Err(Error::Resource {
            cells,
            cap: spec.cell_cap,
        });
    }
    let tasks: Vec<(Parity, u64)> = spec
        .parities
        .iter()
        .flat_map(|&p| (spec.n_min..=spec.n_max).map(move |n| (p, n)))
        .collect();
    let eval = |&(p, n): &(Parity, u64)| {
        Task {
            spec,
            precise: None,
        }
        .run(p, n)
    };
    let chunks: Vec<Vec<SweepRecord>> = if spec.workers == 1 {
        tasks.iter().map(eval).collect::<Result<_>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(spec.workers)
            .build()
            .map_err(|e| Error::domain(format!("thread pool: {e}")))?;
        pool.install(|| tasks.par_iter().map(eval).collect::<Result<_>>())?
    };
    Ok(chunks.into_iter().flatten().collect())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteSummary {
    pub suite: SuiteId,
    pub variant: BoundVariant,
    pub report_only: bool,
    pub pass: u64,
    pub violations: u64,
    pub not_applicable: u64,
    /// Smallest margin over applicable checks.
    pub worst_margin: Option<f64>,
    pub worst_point: Option<GridPoint>,
    /// Up to [`MAX_LISTED_VIOLATIONS`] violating points in record order.
    pub first_violations: Vec<GridPoint>,
}

pub const MAX_LISTED_VIOLATIONS: usize = 64;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrapezoidExcess {
    pub variant: BoundVariant,
    /// Largest `(T − I) − bound`; positive means the bound was exceeded.
    pub max_excess: f64,
    pub point: GridPoint,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteReport {
    pub records: usize,
    pub suites: Vec<SuiteSummary>,
    /// Largest `|point/exact − 1|`.
    pub max_point_rel_err: Option<f64>,
    pub max_point_rel_err_at: Option<GridPoint>,
    pub trapezoid_excess: Vec<TrapezoidExcess>,
}

impl SuiteReport {
    pub fn suite(&self, suite: SuiteId, variant: BoundVariant) -> Option<&SuiteSummary> {
        self.suites
            .iter()
            .find(|s| s.suite == suite && s.variant == variant)
    }

    /// Violations that count against the exit status.
    pub fn asserted_violations(&self, strict_paper: bool) -> u64 {
        self.suites
            .iter()
            .filter(|s| strict_paper || !s.report_only)
            .map(|s| s.violations)
            .sum()
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "records: {}", self.records)?;
        writeln!(
            f,
            "{:<16} {:<9} {:>8} {:>8} {:>8}  {:<24} at",
            "suite", "variant", "pass", "viol", "n/a", "worst margin"
        )?;
        for s in &self.suites {
            let worst = s
                .worst_margin
                .map(|m| format!("{m:e}"))
                .unwrap_or_else(|| "-".into());
            let at = s.worst_point.map(|p| p.to_string()).unwrap_or_default();
            let tag = if s.report_only { " (report-only)" } else { "" };
            writeln!(
                f,
                "{:<16} {:<9} {:>8} {:>8} {:>8}  {:<24} {}{}",
                s.suite.as_str(),
                s.variant.as_str(),
                s.pass,
                s.violations,
                s.not_applicable,
                worst,
                at,
                tag
            )?;
        }
        if let (Some(e), Some(p)) = (self.max_point_rel_err, self.max_point_rel_err_at) {
            writeln!(f, "max point relative error: {e:e} at {p}")?;
        }
        for t in &self.trapezoid_excess {
            writeln!(
                f,
                "max trapezoid excess ({}): {:e} at {}",
                t.variant, t.max_excess, t.point
            )?;
        }
        Ok(())
    }
}

pub fn summarize(records: &[SweepRecord]) -> Result<SuiteReport> {
    if records.is_empty() {
        return Err(Error::domain("cannot summarize an empty sweep"));
    }
    let mut table: BTreeMap<(SuiteId, BoundVariant), SuiteSummary> = BTreeMap::new();
    let mut rel: Option<(f64, GridPoint)> = None;
    let mut excess: BTreeMap<BoundVariant, (f64, GridPoint)> = BTreeMap::new();

    for r in records {
        let pt = r.point();
        for (&suite, status) in &r.checks {
            let s = table
                .entry((suite, r.variant))
                .or_insert_with(|| SuiteSummary {
                    suite,
                    variant: r.variant,
                    report_only: suite.report_only(r.variant),
                    pass: 0,
                    violations: 0,
                    not_applicable: 0,
                    worst_margin: None,
                    worst_point: None,
                    first_violations: Vec::new(),
                });
            match status {
                CheckStatus::Pass(_) => s.pass += 1,
                CheckStatus::Violation(_) => {
                    s.violations += 1;
                    if s.first_violations.len() < MAX_LISTED_VIOLATIONS {
                        s.first_violations.push(pt);
                    }
                }
                CheckStatus::NotApplicable => s.not_applicable += 1,
            }
            if let Some(m) = status.margin() {
                if s.worst_margin.is_none_or(|w| m < w) {
                    s.worst_margin = Some(m);
                    s.worst_point = Some(pt);
                }
            }
        }
        let e = (r.log_point - r.log_exact).exp_m1().abs();
        if rel.is_none_or(|(w, _)| e > w) {
            rel = Some((e, pt));
        }
        if let Some(gap) = r.trapezoid_gap {
            let over = gap - trapezoid_error_bound::<f64>(r.n, r.k, r.variant)?;
            let slot = excess.entry(r.variant).or_insert((over, pt));
            if over > slot.0 {
                *slot = (over, pt);
            }
        }
    }

    Ok(SuiteReport {
        records: records.len(),
        suites: table.into_values().collect(),
        max_point_rel_err: rel.map(|r| r.0),
        max_point_rel_err_at: rel.map(|r| r.1),
        trapezoid_excess: excess
            .into_iter()
            .map(|(variant, (max_excess, point))| TrapezoidExcess {
                variant,
                max_excess,
                point,
            })
            .collect(),
    })
}

pub const CSV_HEADER: [&str; 13] = [
    "parity",
    "n",
    "k",
    "variant",
    "log_exact",
    "log_point",
    "log_lower",
    "log_upper",
    "log_gauss",
    "in_window",
    "suite",
    "status",
    "margin",
];

/// Shortest decimal that round-trips to the same double.
fn shortest(x: f64) -> String {
    if x.is_finite() {
        ryu::Buffer::new().format_finite(x).to_string()
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Writes one row per `(record, suite)` in record order.
pub fn write_csv<W: Write>(records: &[SweepRecord], w: W) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(CSV_HEADER)?;
    for r in records {
        let head = [
            r.parity.to_string(),
            r.n.to_string(),
            r.k.to_string(),
            r.variant.to_string(),
            shortest(r.log_exact),
            shortest(r.log_point),
            r.log_lower
                .finite()
                .map_or_else(|| "-inf".to_string(), shortest),
            shortest(r.log_upper),
            shortest(r.log_gauss),
            r.in_window.to_string(),
        ];
        for (suite, status) in &r.checks {
            let margin = status.margin().map(shortest).unwrap_or_default();
            out.write_record(head.iter().map(String::as_str).chain([
                suite.as_str(),
                status.label(),
                margin.as_str(),
            ]))?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn emit_csv(records: &[SweepRecord], destination: &Path) -> Result<()> {
    let io = |source| Error::Io {
        path: destination.to_path_buf(),
        source,
    };
    let file = File::create(destination).map_err(io)?;
    write_csv(records, BufWriter::new(file)).map_err(|e| io(e.into()))
}

pub fn write_json<W: Write>(report: &SuiteReport, mut w: W) -> std::io::Result<()> {
    serde_json::to_writer_pretty(&mut w, report)?;
    writeln!(w)?;
    w.flush()
}

pub fn emit_json(report: &SuiteReport, destination: &Path) -> Result<()> {
    let io = |source| Error::Io {
        path: destination.to_path_buf(),
        source,
    };
    let file = File::create(destination).map_err(io)?;
    write_json(report, BufWriter::new(file)).map_err(io)
}
