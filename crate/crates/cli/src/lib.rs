//! Argument parsing and subcommand bodies for the `symwalk` binary.
//!
//! Kept in a library so the integration tests can drive [`run`] directly.

use std::hint::black_box;
use std::io::{self, Write};
use std::path::PathBuf;
use std::time::Instant;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use symwalk::{
    approx_prob, certificate, emit_csv, emit_json, exact_even, gaussian_prob, log_dyadic,
    run_sweep, summarize, walk_prob, BoundVariant, Error, GridPoint, KPolicy, Parity, SuiteId,
    SuiteReport, SweepSpec,
};

pub const EXIT_OK: u8 = 0;
pub const EXIT_VIOLATIONS: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_IO: u8 = 3;

/// Exact, corrected-exponent and Gaussian point probabilities of the simple
/// symmetric random walk, with certified envelopes and a verification sweep.
#[derive(Debug, Parser)]
#[command(name = "symwalk", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate P(S_l = j) exactly and by both approximations
    Eval(EvalArgs),
    /// Print the certified envelope at one lattice point
    Certify(CertifyArgs),
    /// Run the verification grid and write every record
    Sweep(SweepArgs),
    /// Run the verification grid and print a pass/violation report
    Verify(VerifyArgs),
    /// Time the approximation against the exact oracle
    Bench(BenchArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ParityArg {
    Even,
    Odd,
}

impl From<ParityArg> for Parity {
    fn from(p: ParityArg) -> Self {
        match p {
            ParityArg::Even => Parity::Even,
            ParityArg::Odd => Parity::Odd,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ParitySet {
    Even,
    Odd,
    Both,
}

impl ParitySet {
    fn expand(self) -> Vec<Parity> {
        match self {
            ParitySet::Even => vec![Parity::Even],
            ParitySet::Odd => vec![Parity::Odd],
            ParitySet::Both => Parity::ALL.to_vec(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Paper,
    Corrected,
}

impl From<VariantArg> for BoundVariant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Paper => BoundVariant::PaperVerbatim,
            VariantArg::Corrected => BoundVariant::CorrectedTrapezoid,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum VariantSet {
    Paper,
    Corrected,
    Both,
}

impl VariantSet {
    fn expand(self) -> Vec<BoundVariant> {
        match self {
            VariantSet::Paper => vec![BoundVariant::PaperVerbatim],
            VariantSet::Corrected => vec![BoundVariant::CorrectedTrapezoid],
            VariantSet::Both => BoundVariant::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Number of steps l (at least 1)
    #[arg(long)]
    pub l: u64,
    /// Walk position j, with |j| <= l
    #[arg(long, allow_hyphen_values = true)]
    pub j: i64,
    /// Output format
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    /// Half-length n of the lattice (at least 1)
    #[arg(long)]
    pub n: u64,
    /// Lattice index k: |k| <= n (even) or -n < k <= n (odd)
    #[arg(long, allow_hyphen_values = true)]
    pub k: i64,
    /// Lattice parity: even is 2n steps, odd is 2n-1 steps
    #[arg(long, value_enum)]
    pub parity: ParityArg,
    /// Lower-bound variant
    #[arg(long, value_enum, default_value_t = VariantArg::Corrected)]
    pub variant: VariantArg,
    /// Output format
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

/// Grid selection shared by `sweep` and `verify`.
#[derive(Debug, Args)]
pub struct GridArgs {
    /// Lattice parities to cover
    #[arg(long, value_enum, default_value_t = ParitySet::Both)]
    pub parity: ParitySet,
    /// Smallest n
    #[arg(long, default_value_t = 1)]
    pub n_min: u64,
    /// k selection: all, window (|k|^3 <= n^2) or fraction:R (|k| <= R n)
    #[arg(long, default_value = "all", value_parser = parse_k_policy)]
    pub k_policy: KPolicy,
    /// Lower-bound variants to evaluate
    #[arg(long, value_enum, default_value_t = VariantSet::Both)]
    pub variant: VariantSet,
    /// Suite or group to run (repeatable): all, thm1, thm2, upper, lower,
    /// window, trapezoid, series, stirling, central, oracle, or a suite name
    #[arg(long = "suite", value_name = "SUITE", default_value = "all")]
    pub suites: Vec<String>,
    /// Worker threads (0 = one per core); output does not depend on it
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    /// Refuse grids with more records than this
    #[arg(long, default_value_t = symwalk::sweep::DEFAULT_CELL_CAP)]
    pub cell_cap: u64,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("out").required(true).args(["csv", "json"])))]
pub struct SweepArgs {
    #[command(flatten)]
    pub grid: GridArgs,
    /// Largest n
    #[arg(long)]
    pub n_max: u64,
    /// Write one CSV row per record and suite
    #[arg(long, value_name = "PATH")]
    pub csv: Option<PathBuf>,
    /// Write the summary report as JSON
    #[arg(long, value_name = "PATH")]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub grid: GridArgs,
    /// Largest n
    #[arg(long, default_value_t = 300)]
    pub n_max: u64,
    /// Let the report-only paper lower-bound suites affect the exit status
    #[arg(long)]
    pub strict_paper: bool,
    /// Also write the report as JSON
    #[arg(long, value_name = "PATH")]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Timed calls per measurement
    #[arg(long, default_value_t = 100)]
    pub reps: u32,
    /// Skip sizes above this n
    #[arg(long, default_value_t = 1_000_000)]
    pub n_max: u64,
}

fn parse_k_policy(s: &str) -> Result<KPolicy, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// A failed subcommand and the exit status it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Io { .. } => EXIT_IO,
            _ => EXIT_USAGE,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure {
            code: EXIT_IO,
            message: e.to_string(),
        }
    }
}

/// Runs one invocation, writing its report to `out`. Returns the exit status.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<u8, Failure> {
    match cli.command {
        Command::Eval(a) => eval(&a, out).map(|_| EXIT_OK),
        Command::Certify(a) => certify(&a, out).map(|_| EXIT_OK),
        Command::Sweep(a) => sweep(&a, out).map(|_| EXIT_OK),
        Command::Verify(a) => verify(&a, out),
        Command::Bench(a) => bench(&a, out).map(|_| EXIT_OK),
    }
}

#[derive(Serialize)]
struct EnvelopeView {
    variant: BoundVariant,
    log_lower: Option<f64>,
    log_upper: f64,
    lower: Option<f64>,
    upper: f64,
    rel_err_guarantee: f64,
    exact_inside: bool,
}

#[derive(Serialize)]
struct EvalView {
    l: u64,
    j: i64,
    parity: Option<Parity>,
    n: Option<u64>,
    k: Option<i64>,
    exact_dyadic: String,
    exact: f64,
    log_exact: Option<f64>,
    point: Option<f64>,
    log_point: Option<f64>,
    gauss: Option<f64>,
    log_gauss: Option<f64>,
    point_rel_err: Option<f64>,
    gauss_rel_err: Option<f64>,
    envelopes: Vec<EnvelopeView>,
    note: Option<String>,
}

fn eval(a: &EvalArgs, out: &mut dyn Write) -> Result<(), Failure> {
    if a.l == 0 {
        return Err(Failure::usage("--l must be at least 1"));
    }
    if a.j.unsigned_abs() > a.l {
        return Err(Failure::usage(format!(
            "|j| = {} exceeds l = {}",
            a.j.unsigned_abs(),
            a.l
        )));
    }
    let exact = walk_prob(a.l, a.j);
    let mut view = EvalView {
        l: a.l,
        j: a.j,
        parity: None,
        n: None,
        k: None,
        exact_dyadic: exact.to_string(),
        exact: exact.to_f64(),
        log_exact: None,
        point: None,
        log_point: None,
        gauss: None,
        log_gauss: None,
        point_rel_err: None,
        gauss_rel_err: None,
        envelopes: Vec::new(),
        note: None,
    };
    match GridPoint::from_walk(a.l, a.j) {
        None => view.note = Some("l + j is odd: the walk cannot be at j after l steps".into()),
        Some(p) => {
            let log_exact = log_dyadic(&exact)?.value;
            let log_point = approx_prob::<f64>(&p)?.value;
            let log_gauss = gaussian_prob::<f64>(&p)?.value;
            view.parity = Some(p.parity);
            view.n = Some(p.n);
            view.k = Some(p.k);
            view.log_exact = Some(log_exact);
            view.point = Some(log_point.exp());
            view.log_point = Some(log_point);
            view.gauss = Some(log_gauss.exp());
            view.log_gauss = Some(log_gauss);
            view.point_rel_err = Some((log_point - log_exact).exp_m1());
            view.gauss_rel_err = Some((log_gauss - log_exact).exp_m1());
            for v in BoundVariant::ALL {
                let mut c = certificate::<f64>(&p, v)?;
                let inside = c.check_exact(log_exact, symwalk::sweep::LOG_SLACK);
                let e = c.envelope;
                view.envelopes.push(EnvelopeView {
                    variant: v,
                    log_lower: e.log_lower.finite(),
                    log_upper: e.log_upper,
                    lower: e.log_lower.finite().map(f64::exp),
                    upper: e.log_upper.exp(),
                    rel_err_guarantee: c.rel_err_guarantee,
                    exact_inside: inside,
                });
            }
        }
    }
    match a.format {
        Format::Json => write_json_line(out, &view)?,
        Format::Text => render_eval(&view, out)?,
    }
    Ok(())
}

fn render_eval(v: &EvalView, out: &mut dyn Write) -> io::Result<()> {
    writeln!(out, "walk       l={} j={}", v.l, v.j)?;
    if let (Some(p), Some(n), Some(k)) = (v.parity, v.n, v.k) {
        writeln!(out, "lattice    {p} n={n} k={k}")?;
    }
    writeln!(out, "exact      {} = {}", v.exact_dyadic, v.exact)?;
    if let Some(note) = &v.note {
        writeln!(out, "note       {note}")?;
        return Ok(());
    }
    let opt = |x: Option<f64>| x.map(|x| x.to_string()).unwrap_or_default();
    writeln!(out, "log exact  {}", opt(v.log_exact))?;
    writeln!(
        out,
        "point      {}  (log {}, rel err {})",
        opt(v.point),
        opt(v.log_point),
        opt(v.point_rel_err)
    )?;
    writeln!(
        out,
        "gauss      {}  (log {}, rel err {})",
        opt(v.gauss),
        opt(v.log_gauss),
        opt(v.gauss_rel_err)
    )?;
    for e in &v.envelopes {
        writeln!(
            out,
            "envelope   {:<9} [{}, {}]  rel err guarantee {}  exact inside: {}",
            e.variant.as_str(),
            opt(e.lower),
            e.upper,
            e.rel_err_guarantee,
            if e.exact_inside { "yes" } else { "NO" }
        )?;
    }
    Ok(())
}

#[derive(Serialize)]
struct CertifyView {
    parity: Parity,
    n: u64,
    k: i64,
    variant: BoundVariant,
    log_point: f64,
    log_lower: Option<f64>,
    log_upper: f64,
    rel_err_guarantee: f64,
}

fn certify(a: &CertifyArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let p = GridPoint::new(a.parity.into(), a.n, a.k)?;
    let c = certificate::<f64>(&p, a.variant.into())?;
    let e = c.envelope;
    let view = CertifyView {
        parity: p.parity,
        n: p.n,
        k: p.k,
        variant: e.variant,
        log_point: e.log_point,
        log_lower: e.log_lower.finite(),
        log_upper: e.log_upper,
        rel_err_guarantee: c.rel_err_guarantee,
    };
    match a.format {
        Format::Json => write_json_line(out, &view)?,
        Format::Text => {
            writeln!(out, "parity             {}", view.parity)?;
            writeln!(out, "n                  {}", view.n)?;
            writeln!(out, "k                  {}", view.k)?;
            writeln!(out, "variant            {}", view.variant)?;
            writeln!(out, "log_point          {}", view.log_point)?;
            writeln!(out, "log_lower          {}", e.log_lower)?;
            writeln!(out, "log_upper          {}", view.log_upper)?;
            writeln!(out, "rel_err_guarantee  {}", view.rel_err_guarantee)?;
        }
    }
    Ok(())
}

fn write_json_line<T: Serialize>(out: &mut dyn Write, value: &T) -> io::Result<()> {
    serde_json::to_writer(&mut *out, value)?;
    writeln!(out)
}

fn build_spec(g: &GridArgs, n_max: u64) -> Result<SweepSpec, Failure> {
    let mut suites = Vec::new();
    for s in &g.suites {
        suites.extend(SuiteId::parse_group(s)?);
    }
    let mut spec = SweepSpec::new(g.n_min, n_max)
        .parities(g.parity.expand())
        .variants(g.variant.expand())
        .suites(suites)
        .k_policy(g.k_policy)
        .workers(g.workers);
    spec.cell_cap = g.cell_cap;
    spec.validate()?;
    Ok(spec)
}

fn sweep(a: &SweepArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let spec = build_spec(&a.grid, a.n_max)?;
    let records = run_sweep(&spec)?;
    let path = match (&a.csv, &a.json) {
        (Some(path), _) => {
            emit_csv(&records, path)?;
            path
        }
        (None, Some(path)) => {
            emit_json(&summarize(&records)?, path)?;
            path
        }
        (None, None) => return Err(Failure::usage("one of --csv or --json is required")),
    };
    writeln!(out, "wrote {} records to {}", records.len(), path.display())?;
    Ok(())
}

fn verify(a: &VerifyArgs, out: &mut dyn Write) -> Result<u8, Failure> {
    let spec = build_spec(&a.grid, a.n_max)?;
    let records = run_sweep(&spec)?;
    let report = summarize(&records)?;
    write!(out, "{report}")?;
    list_violations(&report, out)?;
    if let Some(path) = &a.json {
        emit_json(&report, path)?;
    }
    let asserted = report.asserted_violations(a.strict_paper);
    writeln!(out, "asserted violations: {asserted}")?;
    Ok(if asserted == 0 {
        EXIT_OK
    } else {
        EXIT_VIOLATIONS
    })
}

fn list_violations(report: &SuiteReport, out: &mut dyn Write) -> io::Result<()> {
    for s in report.suites.iter().filter(|s| s.violations > 0) {
        let points: Vec<String> = s
            .first_violations
            .iter()
            .map(|p| format!("({}, {})", p.n, p.k))
            .collect();
        let more = s.violations as usize - s.first_violations.len();
        write!(
            out,
            "violations {} {}: {}",
            s.suite,
            s.variant,
            points.join(" ")
        )?;
        if more > 0 {
            write!(out, " ... and {more} more")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Median nanoseconds per call over a few batches of `reps` calls.
fn time_per_call(reps: u32, mut f: impl FnMut()) -> f64 {
    let reps = reps.max(1);
    let mut samples: Vec<f64> = (0..5)
        .map(|_| {
            let t = Instant::now();
            for _ in 0..reps {
                f();
            }
            t.elapsed().as_nanos() as f64 / reps as f64
        })
        .collect();
    samples.sort_by(f64::total_cmp);
    samples[samples.len() / 2]
}

fn bench(a: &BenchArgs, out: &mut dyn Write) -> Result<(), Failure> {
    if a.reps == 0 {
        return Err(Failure::usage("--reps must be at least 1"));
    }
    let approx_sizes = [1_000u64, 10_000, 100_000, 1_000_000];
    let exact_sizes = [100u64, 1_000, 10_000];
    let mut approx_ns = Vec::new();
    writeln!(out, "{:<12} {:>10} {:>14}", "function", "n", "ns/op")?;
    for &n in approx_sizes.iter().filter(|&&n| n <= a.n_max) {
        let p = GridPoint::even(n, (n / 3) as i64)?;
        let ns = time_per_call(a.reps, || {
            black_box(approx_prob::<f64>(black_box(&p)).ok());
        });
        writeln!(out, "{:<12} {:>10} {:>14.1}", "approx_prob", n, ns)?;
        approx_ns.push((n, ns));
    }
    let mut exact_ns = Vec::new();
    for &n in exact_sizes.iter().filter(|&&n| n <= a.n_max) {
        let k = (n / 3) as i64;
        // the exact oracle is orders of magnitude slower; keep the run short
        let reps = (a.reps / 10).max(1);
        let ns = time_per_call(reps, || {
            black_box(exact_even(black_box(n), black_box(k)).ok());
        });
        writeln!(out, "{:<12} {:>10} {:>14.1}", "exact_even", n, ns)?;
        exact_ns.push((n, ns));
    }
    if let (Some(lo), Some(hi)) = (approx_ns.first(), approx_ns.last()) {
        writeln!(
            out,
            "approx_prob time ratio n={} / n={}: {:.2}",
            hi.0,
            lo.0,
            hi.1 / lo.1
        )?;
    }
    for &(n, e) in &exact_ns {
        let reference = approx_ns.first().map(|x| x.1).unwrap_or_else(|| {
            let p = GridPoint::even(n, (n / 3) as i64).expect("valid point");
            time_per_call(a.reps, || {
                black_box(approx_prob::<f64>(black_box(&p)).ok());
            })
        });
        writeln!(
            out,
            "speedup approx vs exact at n={n}: {:.0}x",
            e / reference
        )?;
    }
    Ok(())
}
