//! End-to-end checks of the command-line surface: file round trips,
//! determinism, and exit codes.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bicure"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

fn design_json(dir: &Path, seed: u64, censored: bool) -> PathBuf {
    let censoring = if censored {
        r#"{ "kind": "uniform", "lo": 0.0, "hi": 6.0 }"#
    } else {
        r#"{ "kind": "none" }"#
    };
    let path = dir.join(format!("design_{seed}_{censored}.json"));
    write(
        &path,
        &format!(
            r#"{{
  "params": {{
    "copula": {{ "family": "gumbel", "theta": 2.0 }},
    "frailty": {{ "variance": 0.5 }},
    "cure": {{ "margins": {{ "p1": 0.6, "p2": 0.4 }} }},
    "regime": {{ "kind": "gt1", "r": 2.0 }},
    "margin1": {{ "shape": 1.0, "rate": 1.5 }},
    "margin2": {{ "shape": 1.0, "rate": 2.0 }}
  }},
  "n": 60,
  "censoring": {censoring},
  "covariates": "none",
  "seed": {seed}
}}"#
        ),
    );
    path
}

#[test]
fn simulate_is_deterministic_and_sized() {
    let dir = tempfile::tempdir().unwrap();
    let design = design_json(dir.path(), 7, true);
    let out1 = dir.path().join("a.csv");
    let out2 = dir.path().join("b.csv");
    assert!(run(&[
        "simulate",
        "--design",
        design.to_str().unwrap(),
        "--out",
        out1.to_str().unwrap(),
        "--n",
        "5"
    ])
    .status
    .success());
    assert!(run(&[
        "simulate",
        "--design",
        design.to_str().unwrap(),
        "--out",
        out2.to_str().unwrap(),
        "--n",
        "5"
    ])
    .status
    .success());
    let a = std::fs::read(&out1).unwrap();
    let b = std::fs::read(&out2).unwrap();
    assert_eq!(a, b, "same seed must give byte-identical files");
    let text = String::from_utf8(a).unwrap();
    assert_eq!(text.lines().count(), 6, "header plus five data rows");
    assert!(text.starts_with("id,t1,t2,d1,d2\n"));
}

#[test]
fn uncensored_simulation_uses_inf_token() {
    let dir = tempfile::tempdir().unwrap();
    let design = design_json(dir.path(), 11, false);
    let out = dir.path().join("truth.csv");
    assert!(run(&[
        "simulate",
        "--design",
        design.to_str().unwrap(),
        "--out",
        out.to_str().unwrap()
    ])
    .status
    .success());
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("id,t1,t2\n"));
    assert!(text.contains("inf"), "cured subjects appear as the literal token");
}

#[test]
fn empty_csv_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("empty.csv");
    write(&data, "");
    let out = run(&["fit", "--data", data.to_str().unwrap(), "--model", "indep", "--regime", "eq1"]);
    assert_eq!(out.status.code(), Some(3), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn invalid_design_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let design = dir.path().join("bad.json");
    write(&design, "{ \"not\": \"a design\" }");
    let out = run(&[
        "simulate",
        "--design",
        design.to_str().unwrap(),
        "--out",
        dir.path().join("x.csv").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn fit_and_curves_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let design = design_json(dir.path(), 21, true);
    let data = dir.path().join("data.csv");
    assert!(run(&[
        "simulate",
        "--design",
        design.to_str().unwrap(),
        "--out",
        data.to_str().unwrap(),
        "--n",
        "250"
    ])
    .status
    .success());
    let report = dir.path().join("fit.json");
    let out = run(&[
        "fit",
        "--data",
        data.to_str().unwrap(),
        "--model",
        "gumbel",
        "--regime",
        "gt1",
        "--starts",
        "3",
        "--out",
        report.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("loglik"));

    let curves = dir.path().join("curves.csv");
    assert!(run(&[
        "curves",
        "--fit-report",
        report.to_str().unwrap(),
        "--grid",
        "0:8:33",
        "--out",
        curves.to_str().unwrap(),
    ])
    .status
    .success());
    let text = std::fs::read_to_string(&curves).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "t,surv1,surv2,cure1,cure2");
    let first: Vec<f64> =
        lines.next().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(first[0], 0.0);
    assert_eq!(first[1], 1.0);
    assert_eq!(first[2], 1.0);
    // monotone nonincreasing survival columns
    let mut prev = (f64::INFINITY, f64::INFINITY);
    for line in text.lines().skip(1) {
        let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert!(v[1] <= prev.0 + 1e-12 && v[2] <= prev.1 + 1e-12);
        prev = (v[1], v[2]);
    }

    // dependence report from the fitted parameters
    let dep = run(&["dep", "--fit-report", report.to_str().unwrap()]);
    assert!(dep.status.success());
    assert!(String::from_utf8(dep.stdout).unwrap().contains("tau_b"));
}

#[test]
fn study_writes_json_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("study.json");
    write(
        &spec,
        r#"{
  "study": "rank_validation",
  "design": {
    "params": {
      "copula": { "family": "gumbel", "theta": 1.0 },
      "frailty": { "variance": 1.0 },
      "cure": { "margins": { "p1": 0.4, "p2": 0.2 } },
      "regime": { "kind": "gt1", "r": 2.0 },
      "margin1": { "shape": 1.0, "rate": 1.5 },
      "margin2": { "shape": 1.0, "rate": 2.0 }
    },
    "n": 200,
    "censoring": { "kind": "none" },
    "covariates": "none",
    "seed": 5
  },
  "replications": 10,
  "alpha": 0.05
}"#,
    );
    let prefix = dir.path().join("rank");
    let out = run(&[
        "study",
        "--spec",
        spec.to_str().unwrap(),
        "--out",
        prefix.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let json = std::fs::read_to_string(dir.path().join("rank.json")).unwrap();
    assert!(json.contains("rank_validation"));
    let csv = std::fs::read_to_string(dir.path().join("rank.csv")).unwrap();
    assert!(csv.starts_with("coefficient,"));
}

#[test]
fn prep_retinopathy_pairs_eyes() {
    let dir = tempfile::tempdir().unwrap();
    let raw = dir.path().join("diabetic.csv");
    write(
        &raw,
        "id,laser,age,eye,trt,risk,time,status\n\
         5,argon,28,left,1,9,46.23,0\n\
         5,argon,28,right,0,9,46.23,0\n\
         14,xenon,12,left,0,8,42.5,0\n\
         14,xenon,12,right,1,6,31.3,1\n",
    );
    let out = dir.path().join("paired.csv");
    let res = run(&["prep-retinopathy", "--raw", raw.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(res.status.success(), "stderr: {}", String::from_utf8_lossy(&res.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("id,t1,t2,d1,d2,x1_age,x1_score,x2_age,x2_score\n"));
    assert_eq!(text.lines().count(), 3);
    // margin 1 is the treated eye: patient 14's treated time 31.3 with event
    let row: Vec<&str> = text.lines().nth(2).unwrap().split(',').collect();
    assert_eq!(row[1], "31.3");
    assert_eq!(row[3], "1");
    // age standardized to zero mean over the two patients
    let age1: f64 = text.lines().nth(1).unwrap().split(',').nth(5).unwrap().parse().unwrap();
    let age2: f64 = row[5].parse().unwrap();
    assert!((age1 + age2).abs() < 1e-10);
}
