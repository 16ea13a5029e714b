use std::fs;

use symwalk::sweep::{CSV_HEADER, MAX_LISTED_VIOLATIONS};
use symwalk::{
    emit_csv, emit_json, run_sweep, summarize, BoundVariant, CheckStatus, Error, KPolicy, Parity,
    SuiteId, SweepSpec,
};

#[test]
fn n_one_walk() {
    let spec = SweepSpec::new(1, 1)
        .parities([Parity::Even])
        .variants([BoundVariant::CorrectedTrapezoid])
        .workers(1);
    let records = run_sweep(&spec).unwrap();
    let got: Vec<(i64, f64)> = records.iter().map(|r| (r.k, r.log_exact)).collect();
    let (q, h) = (0.25f64.ln(), 0.5f64.ln());
    assert_eq!(got.len(), 3);
    for ((k, e), (wk, we)) in got.iter().zip([(-1, q), (0, h), (1, q)]) {
        assert_eq!(*k, wk);
        assert!((e - we).abs() < 1e-15);
    }
}

#[test]
fn completeness_and_order() {
    let spec = SweepSpec::new(1, 12).workers(3);
    let records = run_sweep(&spec).unwrap();
    assert_eq!(records.len() as u64, spec.cells());
    for p in Parity::ALL {
        for n in 1..=12u64 {
            for v in BoundVariant::ALL {
                let c = records
                    .iter()
                    .filter(|r| r.parity == p && r.n == n && r.variant == v)
                    .count() as u64;
                let want = match p {
                    Parity::Even => 2 * n + 1,
                    Parity::Odd => 2 * n,
                };
                assert_eq!(c, want, "{p} n={n} {v}");
            }
        }
    }
    let keys: Vec<_> = records
        .iter()
        .map(|r| (r.parity, r.n, r.k, r.variant))
        .collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
}

#[test]
fn corrected_run_is_clean() {
    let spec = SweepSpec::new(1, 50).variants([BoundVariant::CorrectedTrapezoid]);
    let report = summarize(&run_sweep(&spec).unwrap()).unwrap();
    assert_eq!(report.asserted_violations(true), 0, "{report}");
    assert_eq!(report.suites.len(), SuiteId::ALL.len());
    for s in &report.suites {
        assert_eq!(s.violations, 0, "{:?}", s.suite);
    }
}

#[test]
fn paper_lower_is_report_only() {
    let spec = SweepSpec::new(1, 20)
        .variants([BoundVariant::PaperVerbatim])
        .suites(SuiteId::parse_group("thm1").unwrap());
    let report = summarize(&run_sweep(&spec).unwrap()).unwrap();
    let lower = report
        .suite(SuiteId::Thm1Lower, BoundVariant::PaperVerbatim)
        .unwrap();
    assert!(lower.report_only);
    assert!(lower.violations > 0);
    assert!(lower.first_violations.len() <= MAX_LISTED_VIOLATIONS);
    assert!(lower.first_violations.iter().any(|p| p.n == 10 && p.k == 5));
    assert_eq!(report.asserted_violations(false), 0);
    assert_eq!(report.asserted_violations(true), lower.violations);
}

#[test]
fn empty_odd_window() {
    let spec = SweepSpec::new(1, 3)
        .parities([Parity::Odd])
        .k_policy(KPolicy::Window)
        .suites([SuiteId::Thm2Window]);
    for r in run_sweep(&spec).unwrap() {
        assert_eq!(r.checks[&SuiteId::Thm2Window], CheckStatus::NotApplicable);
    }
}

#[test]
fn cell_cap_is_enforced() {
    let mut spec = SweepSpec::new(1, 100);
    spec.cell_cap = 1000;
    assert!(matches!(run_sweep(&spec), Err(Error::Resource { .. })));
}

#[test]
fn csv_and_json_files() {
    let dir = tempfile::tempdir().unwrap();
    let spec = SweepSpec::new(1, 1)
        .parities([Parity::Odd])
        .variants([BoundVariant::PaperVerbatim])
        .suites([SuiteId::Thm2Upper, SuiteId::Thm2Lower, SuiteId::Stirling]);
    let records = run_sweep(&spec).unwrap();
    assert_eq!(records.len(), 2);
    let csv = dir.path().join("r.csv");
    emit_csv(&records, &csv).unwrap();
    let text = fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], CSV_HEADER.join(","));
    assert_eq!(lines.len(), 1 + 2 * 3);

    let json = dir.path().join("r.json");
    emit_json(&summarize(&records).unwrap(), &json).unwrap();
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(v["records"], 2);

    let bad = dir.path().join("missing/r.csv");
    match emit_csv(&records, &bad) {
        Err(Error::Io { path, .. }) => assert_eq!(path, bad),
        other => panic!("expected an I/O error, got {other:?}"),
    }
}
