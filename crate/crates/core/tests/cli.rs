use std::fs;
use std::process::{Command, Output};

use fock1d::report::{read_tabulation, tabulate};
use fock1d::{Parity, QuantumNumber};

fn fock1d(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fock1d")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn small_report_passes_and_exits_zero() {
    let out = fock1d(&["report", "--n", "2", "--parity", "odd", "--p0", "1", "--nodes", "64"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["status"], "PASS");
    assert_eq!(v["counts"]["must_pass_failed"], 0);
    assert_eq!(v["config_echo"]["n_max"], 2);
}

#[test]
fn even_parity_report_exits_one() {
    let out = fock1d(&["report", "--n", "2", "--parity", "even", "--p0", "1", "--nodes", "64"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["status"], "FAIL");
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        &["spectrum", "--nodes", "7"][..],
        &["report", "--p0"],
        &["report", "--p0", "0"],
        &["verify", "--n", "0"],
        &["chebyshev", "--tol", "-1"],
        &["frobnicate"],
    ] {
        assert_eq!(fock1d(args).status.code(), Some(2), "args {args:?}");
    }
}

#[test]
fn report_writes_same_bytes_to_file_and_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let args = ["report", "--n", "2", "--parity", "odd", "--p0", "1", "--nodes", "64"];
    let to_stdout = fock1d(&args);
    let mut with_out = args.to_vec();
    with_out.extend(["--out", path.to_str().unwrap()]);
    let to_file = fock1d(&with_out);
    assert_eq!(to_file.status.code(), Some(0));
    assert_eq!(fs::read(&path).unwrap(), to_stdout.stdout);
}

#[test]
fn report_csv_has_one_row_per_entry() {
    let args = ["report", "--n", "2", "--parity", "odd", "--p0", "1", "--nodes", "64"];
    let entries = {
        let v = json(&fock1d(&args));
        v["sections"].as_array().unwrap().iter().map(|s| s["entries"].as_array().unwrap().len()).sum::<usize>()
    };
    let mut csv_args = args.to_vec();
    csv_args.extend(["--format", "csv"]);
    let out = fock1d(&csv_args);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(!text.contains('\r'));
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    assert_eq!(reader.records().count(), entries);
}

#[test]
fn tabulate_round_trips_through_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tab.csv");
    let out = fock1d(&["tabulate", "--n", "3", "--parity", "odd", "--p0", "2", "--nodes", "17", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let rows = read_tabulation(fs::File::open(&path).unwrap()).unwrap();
    let expected = tabulate(QuantumNumber::new(3).unwrap(), Parity::Odd, 2.0, 17).unwrap();
    assert_eq!(rows, expected);
}

#[test]
fn spectrum_lists_inverse_integer_levels() {
    let out = fock1d(&["spectrum", "--p0", "1", "--nodes", "64", "--n", "4"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let levels = v["levels"].as_array().expect("levels array");
    assert!(levels.len() >= 4);
    for (k, level) in levels.iter().take(4).enumerate() {
        let mu = level["eigenvalue"].as_f64().unwrap();
        assert!((mu - 1.0 / (k + 1) as f64).abs() < 1e-10, "level {k}: {mu}");
    }
}

#[test]
fn verify_reports_constant_ratio_for_unit_p0_sines() {
    let out = fock1d(&["verify", "--n", "2", "--parity", "odd", "--p0", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let out = fock1d(&["verify", "--n", "2", "--parity", "even", "--p0", "1"]);
    assert_eq!(out.status.code(), Some(1));
}
