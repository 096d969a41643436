mod common;

use std::path::Path;
use std::process::{Command, Output};

use limit_bounds::certificates::MajorantBound;
use limit_bounds::regularizer::fmt12;
use limit_bounds::report::BoundsReport;
use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_limit-bounds")).args(args).output().expect("binary runs")
}

fn solve_into(input: &str, dir: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["solve", input, "--out-dir", dir.to_str().unwrap()];
    args.extend_from_slice(extra);
    run(&args)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// `psi` column of a path.csv.
fn psi_column(path: &Path) -> Vec<f64> {
    let mut reader = csv::Reader::from_path(path).unwrap();
    let headers = reader.headers().unwrap().clone();
    assert_eq!(headers.iter().collect::<Vec<_>>(), ["alpha", "psi", "lambda_alpha", "kkt_residual", "iterations"]);
    reader.records().map(|r| r.unwrap()[1].parse().unwrap()).collect()
}

#[test]
fn t1_bounds_meet_at_two() {
    let dir = TempDir::new().unwrap();
    let out = solve_into(common::data("t1.json").to_str().unwrap(), dir.path(), &[]);
    assert!(out.status.success(), "{}", stderr(&out));
    let r = BoundsReport::read_json(&dir.path().join("bounds.json")).unwrap();
    assert!((r.lower.unwrap() - 2.0).abs() < 1e-5);
    assert!((r.upper.to_f64() - 2.0).abs() < 1e-9);
    assert!(dir.path().join("path.csv").exists() && dir.path().join("path.dat").exists());
}

#[test]
fn delamination_bounds_within_one_percent() {
    let dir = TempDir::new().unwrap();
    let out = solve_into(common::data("delamination.json").to_str().unwrap(), dir.path(), &[]);
    assert!(out.status.success(), "{}", stderr(&out));
    let r = BoundsReport::read_json(&dir.path().join("bounds.json")).unwrap();
    let (l, u) = (r.lower.unwrap(), r.upper.to_f64());
    assert!(l <= 2.0 + 1e-6 && l >= 1.98, "lower {l}");
    assert!(u >= 2.0 - 1e-6 && u <= 2.02, "upper {u}");
    let model: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("model.json")).unwrap()).unwrap();
    assert_eq!(model["closed_form"], 2.0);
}

#[test]
fn overlapping_blocks_are_an_input_error() {
    let dir = TempDir::new().unwrap();
    let out = solve_into(common::data("overlap.json").to_str().unwrap(), dir.path(), &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("blocks 0 and 1"), "{}", stderr(&out));
}

#[test]
fn missing_input_is_an_input_error() {
    let dir = TempDir::new().unwrap();
    let out = solve_into("does-not-exist.json", dir.path(), &[]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn outputs_are_bit_identical_across_runs() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let input = common::data("t2.json");
    for d in [&a, &b] {
        assert!(solve_into(input.to_str().unwrap(), d.path(), &[]).status.success());
    }
    for f in ["bounds.json", "path.csv", "path.dat"] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        let y = std::fs::read(b.path().join(f)).unwrap();
        assert!(x == y, "{f} differs between runs");
    }
}

#[test]
fn certificate_revalidates_from_bounds_json() {
    let dir = TempDir::new().unwrap();
    let out = solve_into(common::data("delamination.json").to_str().unwrap(), dir.path(), &[]);
    assert!(out.status.success());
    let r = BoundsReport::read_json(&dir.path().join("bounds.json")).unwrap();
    let m = r.majorant.expect("certificate");
    let (MajorantBound::Value(stored), MajorantBound::Value(again)) = (m.bound, m.recompute()) else {
        panic!("inadmissible certificate");
    };
    assert_eq!(fmt12(stored), fmt12(again));
    assert_eq!(r.upper.to_f64(), stored);
    assert!(m.problem_hash.is_some());
}

#[test]
fn continuum_constant_replaces_the_estimate() {
    let dir = TempDir::new().unwrap();
    let out = solve_into(common::data("t2.json").to_str().unwrap(), dir.path(), &["--continuum-Cstar", "1.5"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let r = BoundsReport::read_json(&dir.path().join("bounds.json")).unwrap();
    assert_eq!(r.majorant.unwrap().c_star.value, 1.5);
    assert!(!stderr(&out).contains("discrete estimate"));

    let out = solve_into(common::data("t2.json").to_str().unwrap(), dir.path(), &["--continuum-Cstar", "-1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn oracle_passes_on_t1_and_t2() {
    for f in ["t1.json", "t2.json", "t2_padded.json"] {
        let out = run(&["oracle", common::data(f).to_str().unwrap()]);
        assert!(out.status.success(), "{f}: {}", stderr(&out));
        assert!(String::from_utf8_lossy(&out.stdout).contains("oracle suite passed"));
    }
}

#[test]
fn oracle_rejects_five_unknowns() {
    let out = run(&["oracle", common::data("five.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("oracle dimension cap"), "{}", stderr(&out));
}

#[test]
fn sweep_of_t1_is_monotone() {
    let dir = TempDir::new().unwrap();
    let input = common::data("t1.json");
    let args = ["sweep", input.to_str().unwrap(), "--alpha0", "1", "--growth", "2", "--steps", "11"];
    let out = run(&[&args[..], &["--out-dir", dir.path().to_str().unwrap()]].concat());
    assert!(out.status.success(), "{}", stderr(&out));
    let psi = psi_column(&dir.path().join("path.csv"));
    assert_eq!(psi.len(), 11);
    assert!(psi.windows(2).all(|w| w[1] >= w[0] - 1e-12));
    assert!(*psi.last().unwrap() >= 1.99);
}

#[test]
fn von_mises_sweep_reports_a_lower_bound() {
    let dir = TempDir::new().unwrap();
    let out =
        run(&["sweep", common::data("von_mises.json").to_str().unwrap(), "--out-dir", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("lower bound:"), "{stdout}");
    assert!(!stderr(&out).contains("ψ decreased"), "{}", stderr(&out));
    let psi = psi_column(&dir.path().join("path.csv"));
    assert!(psi.iter().all(|v| v.is_finite() && *v > 0.0));
}

#[test]
fn empty_schedule_is_an_input_error() {
    let dir = TempDir::new().unwrap();
    let input = common::data("t1.json");
    for cmd in ["sweep", "solve"] {
        let out = run(&[cmd, input.to_str().unwrap(), "--steps", "0", "--out-dir", dir.path().to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(2), "{cmd}");
        assert!(stderr(&out).contains("empty schedule"), "{}", stderr(&out));
    }
}

#[test]
fn parallel_sweep_matches_sequential_lower_bound() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let input = common::data("t2.json");
    assert!(solve_into(input.to_str().unwrap(), a.path(), &[]).status.success());
    assert!(solve_into(input.to_str().unwrap(), b.path(), &["--parallel-sweep"]).status.success());
    let ra = BoundsReport::read_json(&a.path().join("bounds.json")).unwrap();
    let rb = BoundsReport::read_json(&b.path().join("bounds.json")).unwrap();
    assert!((ra.lower.unwrap() - rb.lower.unwrap()).abs() < 1e-9);
}
