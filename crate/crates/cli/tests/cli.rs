use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use bnqd_cli::AnalysisReport;

fn bnqd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bnqd")).args(args).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// A small step data set, deterministic without any RNG.
fn write_step(dir: &Path) -> PathBuf {
    let mut s = String::from("x,y\n");
    for i in 0..30 {
        let x = -1.0 + 2.0 * i as f64 / 29.0;
        let wiggle = ((i * 7919) % 13) as f64 / 13.0 - 0.5;
        let y = 0.4 * x + if x >= 0.0 { 2.0 } else { 0.0 } + 0.3 * wiggle;
        s.push_str(&format!("{x},{y}\n"));
    }
    let path = dir.join("step.csv");
    std::fs::write(&path, s).unwrap();
    path
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("analysis.toml");
    std::fs::write(&path, body).unwrap();
    path
}

fn strip_wall_time(json: &str) -> String {
    json.lines().filter(|l| !l.trim_start().starts_with("\"wall_time\"")).collect::<Vec<_>>().join("\n")
}

#[test]
fn version_subcommand() {
    let o = bnqd(&["version"]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("bnqd "));
}

#[test]
fn analyze_is_deterministic_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    write_step(dir.path());
    let cfg = write_config(
        dir.path(),
        "data = \"step.csv\"\nthreshold = 0.0\nkernels = [\"linear\", \"exp\"]\nseed = 11\nrestarts = 2\n\
         output = \"report.json\"\ncurves-output = \"curves.csv\"\ndensity-output = \"density.csv\"\nmc-samples = 500\n",
    );
    let cfg = cfg.to_str().unwrap();
    let report_path = dir.path().join("report.json");

    let o = bnqd(&["analyze", "--config", cfg]);
    assert!(o.status.success(), "{}", stderr(&o));
    let first = std::fs::read_to_string(&report_path).unwrap();
    let curves = std::fs::read_to_string(dir.path().join("curves.csv")).unwrap();
    let density = std::fs::read_to_string(dir.path().join("density.csv")).unwrap();

    let o = bnqd(&["analyze", "--config", cfg]);
    assert!(o.status.success(), "{}", stderr(&o));
    let second = std::fs::read_to_string(&report_path).unwrap();
    assert_eq!(strip_wall_time(&first), strip_wall_time(&second));
    assert_eq!(curves, std::fs::read_to_string(dir.path().join("curves.csv")).unwrap());
    assert_eq!(density, std::fs::read_to_string(dir.path().join("density.csv")).unwrap());

    let report: AnalysisReport = serde_json::from_str(&first).unwrap();
    assert_eq!(serde_json::from_str::<AnalysisReport>(&report.to_json()).unwrap(), report);
    assert!(first.trim_end().trim_end_matches('}').trim_end().trim_end_matches('}').contains("\"wall_time\""));
    assert_eq!(report.kernels.len(), 2);
    assert_eq!(report.n, 30);
    assert!(report.totals.log_bf10 > 0.0);
    for k in &report.kernels {
        assert!((k.log_bf10 - (k.discontinuous.log_ml - k.continuous.log_ml)).abs() < 1e-12);
    }

    assert_eq!(density.lines().count(), 501);
    // 200 grid points for m0, plus both sides extended to the threshold
    assert_eq!(curves.lines().count(), 1 + 2 * (200 + 202));
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    write_step(dir.path());
    let cfg = write_config(dir.path(), "data = \"step.csv\"\nthreshold = 0.0\nkernels = [\"se\"]\nrestarts = 1\n");
    let out = dir.path().join("flagged.json");
    let o = bnqd(&[
        "analyze",
        "--config",
        cfg.to_str().unwrap(),
        "--kernels",
        "linear",
        "--seed",
        "5",
        "--output",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: AnalysisReport = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(report.kernels[0].kernel, "linear");
    assert_eq!(report.provenance.seed, 5);
    assert_eq!(report.provenance.config.restarts, 1);
}

#[test]
fn threshold_outside_the_data_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_step(dir.path());
    let out = dir.path().join("r.json");
    let o = bnqd(&[
        "analyze",
        "--data",
        data.to_str().unwrap(),
        "--threshold",
        "5",
        "--output",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("empty side"), "{}", stderr(&o));
    assert!(!out.exists());
}

#[test]
fn data_errors_exit_with_code_3() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "x,y\n0.1,2\n0.2,\"3,14\"\n").unwrap();
    let o = bnqd(&["analyze", "--data", bad.to_str().unwrap(), "--threshold", "0.15"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("row 2"), "{}", stderr(&o));

    let o = bnqd(&["analyze", "--data", bad.to_str().unwrap(), "--threshold", "0", "--y-column", "z"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("'z'"));

    let missing = dir.path().join("nope.csv");
    let o = bnqd(&["analyze", "--data", missing.to_str().unwrap(), "--threshold", "0"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn config_errors_exit_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "data = \"step.csv\"\ntreshold = 0.0\n");
    let o = bnqd(&["analyze", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("treshold"));

    let o = bnqd(&["analyze", "--data", "x.csv"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("threshold"));

    let o = bnqd(&["analyze", "--bogus-flag"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn failed_write_leaves_no_partial_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_step(dir.path());
    let curves = dir.path().join("curves.csv");
    let report = dir.path().join("missing_dir/report.json");
    let o = bnqd(&[
        "analyze",
        "--data",
        data.to_str().unwrap(),
        "--threshold",
        "0",
        "--kernels",
        "linear",
        "--restarts",
        "1",
        "--curves-output",
        curves.to_str().unwrap(),
        "--output",
        report.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(!curves.exists());
    let leftovers: Vec<_> = std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(leftovers, vec![std::ffi::OsString::from("step.csv")]);
}

#[test]
fn simulate_single_cell() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("sim.csv");
    let json = dir.path().join("sim.json");
    let o = bnqd(&[
        "simulate",
        "--latents",
        "linear",
        "--d-values",
        "1",
        "--n",
        "30",
        "--repetitions",
        "1",
        "--kernels",
        "exp",
        "--restarts",
        "1",
        "--output-csv",
        csv.to_str().unwrap(),
        "--output-json",
        json.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let table = std::fs::read_to_string(csv).unwrap();
    // header + (exp, total) × 5 metrics
    assert_eq!(table.lines().count(), 1 + 2 * 5);
    assert!(table.lines().any(|l| l.starts_with("linear,1,1,exp,log_bf10,")));
    let report: bnqd_cli::SimulationReport = serde_json::from_str(&std::fs::read_to_string(json).unwrap()).unwrap();
    assert_eq!(report.summary.repetitions, 1);
    assert!(report.summary.failures.is_empty());
}

#[test]
fn simulate_rejects_unknown_latents() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.csv");
    let o = bnqd(&["simulate", "--latents", "zigzag", "--output-csv", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("zigzag") && err.contains("linear, quad, cubic"), "{err}");
    assert!(!out.exists());
}

#[test]
fn boundary_analysis_writes_a_profile() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = String::from("lon,lat,v\n");
    for i in 0..8 {
        for j in 0..8 {
            let (x, y) = (-1.0 + i as f64 * 2.0 / 7.0, -1.0 + j as f64 * 2.0 / 7.0 + 0.01);
            let v = 0.2 * x + if y < 0.0 { 1.0 } else { 0.0 } + 0.05 * (((i * 31 + j * 17) % 7) as f64 - 3.0);
            s.push_str(&format!("{x},{y},{v}\n"));
        }
    }
    std::fs::write(dir.path().join("grid.csv"), s).unwrap();
    std::fs::write(dir.path().join("border.txt"), "-1.5 0\n1.5 0\n").unwrap();
    let cfg = write_config(
        dir.path(),
        "data = \"grid.csv\"\nx-columns = [\"lon\", \"lat\"]\ny-column = \"v\"\nboundary = \"border.txt\"\n\
         kernels = [\"linear\"]\nrestarts = 1\nprofile-count = 7\noutput = \"r.json\"\nprofile-output = \"p.csv\"\n",
    );
    let o = bnqd(&["analyze", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: AnalysisReport =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    assert_eq!(report.effect_point, vec![0.0, 0.0]);
    assert_eq!(report.n_intervention, 32);
    let profile = report.profiles.unwrap();
    assert_eq!(profile[0].points.len(), 7);
    assert_eq!(std::fs::read_to_string(dir.path().join("p.csv")).unwrap().lines().count(), 8);
}
