use std::process::Command;

use num_rational::Rational64;
use paraproduct_harness::config::{Experiment, SweepConfig};
use paraproduct_harness::emit::{read_json_file, write_csv, write_json_file, Report, CSV_COLUMNS};
use paraproduct_harness::fit::fit_exponent;
use paraproduct_harness::sweep::run_sweep;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_paraproduct"))
}

fn run(args: &[&str]) -> (i32, String, String) {
    let out = bin().args(args).output().expect("spawn");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

#[test]
fn ledger_at_five_eighths_reports_gap_and_epsilon_branch() {
    let (code, out, _) = run(&["ledger", "--delta", "5/8"]);
    assert_eq!(code, 0);
    assert!(out.contains("gap 5/32"), "{out}");
    assert!(out.contains("ε-loss branch"), "{out}");
}

#[test]
fn ledger_out_of_range_warns() {
    let (code, out, _) = run(&["ledger", "--delta", "3/4"]);
    assert_eq!(code, 0);
    assert!(out.contains("warning"), "{out}");
}

#[test]
fn ledger_json_mentions_threshold() {
    let (code, out, _) = run(&["--json", "ledger", "--delta", "1/2"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["branch"]["threshold"], "5/9");
}

#[test]
fn single_scale_is_a_fit_error() {
    let (code, _, err) = run(&["scaling", "--lambdas", "4"]);
    assert_eq!(code, 2, "{err}");
    assert!(err.contains("fit"), "{err}");
}

#[test]
fn unknown_subcommand_exits_two() {
    let (code, _, err) = run(&["frobnicate"]);
    assert_eq!(code, 2);
    assert!(err.to_lowercase().contains("usage"), "{err}");
}

#[test]
fn bad_delta_exits_two() {
    assert_eq!(run(&["ledger", "--delta", "1/0"]).0, 2);
    assert_eq!(run(&["kernel", "--n", "64,128", "--delta", "3/2"]).0, 2);
}

#[test]
fn non_dyadic_scale_exits_two() {
    let (code, _, err) = run(&["window", "--n", "48"]);
    assert_eq!(code, 2);
    assert!(err.contains("48"), "{err}");
}

#[test]
fn unwritable_output_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("missing").join("k.csv");
    let (code, _, _) = run(&["--out", path.to_str().unwrap(), "kernel", "--n", "64,128"]);
    assert_eq!(code, 3);
}

#[test]
fn memory_cap_names_the_scale() {
    let (code, _, err) = run(&["decoupling", "--lambdas", "4,32"]);
    assert_eq!(code, 2);
    assert!(err.contains("λ = 32"), "{err}");
}

#[test]
fn kernel_csv_has_exact_header_and_rows() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("k.csv");
    let (code, _, err) = run(&["--out", path.to_str().unwrap(), "kernel", "--n", "64,256"]);
    assert_eq!(code, 0, "{err}");
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), CSV_COLUMNS.join(","));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 8);
    assert!(rows.iter().all(|r| r.starts_with("kernel,") && r.split(',').count() == 11));
    // walltime is zero unless timing is requested
    assert!(rows.iter().all(|r| r.ends_with(",0")));
}

#[test]
fn worker_count_does_not_change_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for workers in ["1", "3"] {
        let path = dir.path().join(format!("s{workers}.csv"));
        let status = bin()
            .env("PARAPRODUCT_WORKERS", workers)
            .args(["--out", path.to_str().unwrap(), "scaling", "--lambdas", "4,8", "--trials", "2"])
            .status()
            .unwrap();
        assert!(status.success());
        files.push(std::fs::read(&path).unwrap());
    }
    assert_eq!(files[0], files[1]);
}

#[test]
fn empty_sweep_writes_header_only() {
    let mut buf = Vec::new();
    write_csv(&[], &mut buf).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap(), format!("{}\n", CSV_COLUMNS.join(",")));
}

#[test]
fn json_round_trips() {
    let mut cfg = SweepConfig::new(Experiment::Hessian, vec![64, 128], Rational64::new(1, 2));
    cfg.samples = 200;
    cfg.trials = 2;
    let records = run_sweep(&cfg, 2).unwrap();
    let report = Report::new(&cfg, records).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("h.json");
    write_json_file(&report, &path).unwrap();
    let back = read_json_file(&path).unwrap();
    assert_eq!(back, report);
    assert_eq!(back.header.config.delta, Rational64::new(1, 2));
}

#[test]
fn scaling_records_carry_predicted_exponent() {
    let cfg = SweepConfig::new(Experiment::Scaling, vec![4], Rational64::new(1, 2));
    let records = run_sweep(&cfg, 1).unwrap();
    assert_eq!(records.len(), 1);
    assert_eq!(records[0].predicted_exponent, -0.5);
    assert_eq!(records[0].predicted_text, "-2 + 3δ");
}

#[test]
fn config_rejects_bad_sweeps() {
    let d = Rational64::new(1, 2);
    assert!(SweepConfig::new(Experiment::Scaling, vec![], d).validate().is_err());
    assert!(SweepConfig::new(Experiment::Scaling, vec![6], d).validate().is_err());
    let mut c = SweepConfig::new(Experiment::LocalL4, vec![8], d);
    c.grid_rule = 5.0;
    assert!(c.validate().is_err());
    let mut c = SweepConfig::new(Experiment::Scaling, vec![8], d);
    c.trials = 0;
    assert!(c.validate().is_err());
}

#[test]
fn fits_recover_exact_laws() {
    let pts: Vec<(f64, f64)> = [4.0f64, 8.0, 16.0, 32.0].iter().map(|&l| (l, l.powi(-2))).collect();
    assert!((fit_exponent(&pts).unwrap().slope + 2.0).abs() < 1e-10);
    let flat: Vec<(f64, f64)> = [4.0, 8.0].iter().map(|&l| (l, 3.0)).collect();
    assert!(fit_exponent(&flat).unwrap().slope.abs() < 1e-12);
}
