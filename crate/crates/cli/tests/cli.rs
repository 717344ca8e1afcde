use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_finsler");

struct Run {
    code: i32,
    out: PathBuf,
    _dir: tempfile::TempDir,
}

impl Run {
    fn manifest(&self) -> Value {
        self.json("manifest.json")
    }

    fn json(&self, name: &str) -> Value {
        serde_json::from_str(&fs::read_to_string(self.out.join(name)).unwrap()).unwrap()
    }

    fn text(&self, name: &str) -> String {
        fs::read_to_string(self.out.join(name)).unwrap()
    }
}

fn run(cmd: &str, config: &str, extra: &[&str]) -> Run {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("config.json");
    fs::write(&cfg, config).unwrap();
    let out = dir.path().join("out");
    let status = Command::new(BIN)
        .arg(cmd)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .args(extra)
        .output()
        .unwrap();
    Run {
        code: status.status.code().unwrap(),
        out,
        _dir: dir,
    }
}

fn csv_rows(text: &str) -> Vec<Vec<f64>> {
    text.lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

#[test]
fn randers_beyond_unit_drift_is_a_config_error_with_manifest() {
    let r = run(
        "norm-check",
        r#"{"norm":{"family":"randers","params":{"t":[1.2,0.0]},"dim":2}}"#,
        &[],
    );
    assert_eq!(r.code, 2);
    let m = r.manifest();
    assert_eq!(m["status"], "config_error");
    assert_eq!(m["exit_code"], 2);
    assert!(m["error"].as_str().unwrap().contains("1.2"));
    assert_eq!(m["all_checks_passed"], false);
}

#[test]
fn valid_norm_passes_every_check() {
    let r = run(
        "norm-check",
        r#"{"norm":{"family":"lambda_mu","params":{"lambda":1,"mu":1},"dim":2},"samples":300}"#,
        &["--seed", "7"],
    );
    assert_eq!(r.code, 0);
    let m = r.manifest();
    assert_eq!(m["overrides"]["seed"], 7);
    assert!(m["checks"].as_array().unwrap().len() >= 5);
    assert_eq!(r.json("report.json")["all_passed"], true);
}

#[test]
fn linear_growth_fails_keller_osserman_but_exits_zero() {
    let r = run(
        "ko-check",
        r#"{"p":2,"nonlinearity":{"kind":"power","q":1}}"#,
        &[],
    );
    assert_eq!(r.code, 0);
    assert_eq!(r.json("report.json")["ko_holds"], false);
    assert!(!r.out.join("psi.csv").exists());
}

#[test]
fn ko_check_tabulates_psi_in_closed_form() {
    let r = run(
        "ko-check",
        r#"{"p":2,"nonlinearity":{"kind":"power","q":3},"psi_at":[1,4]}"#,
        &[],
    );
    assert_eq!(r.code, 0);
    // Ψ(t) = √2 / t for f = t³, p = 2
    for row in csv_rows(&r.text("psi.csv")) {
        let want = 2f64.sqrt() / row[0];
        assert!((row[1] - want).abs() <= 1e-6 * want, "{row:?}");
    }
}

#[test]
fn solve_1d_psi_ratio_tends_to_one_at_the_boundary() {
    let cfg = r#"{"interval":[0,1],"p":2,"nonlinearity":{"kind":"power","q":3},"points":999}"#;
    let r = run("solve-1d", cfg, &[]);
    assert_eq!(r.code, 0);
    assert_eq!(
        r.text("solution.csv").lines().next(),
        Some("x,u,delta,psi_ratio")
    );
    let rows = csv_rows(&r.text("solution.csv"));
    assert_eq!(rows.len(), 999);
    let near: Vec<&Vec<f64>> = rows.iter().filter(|row| row[2] <= 2e-3).collect();
    assert!(!near.is_empty());
    for row in near {
        assert!((row[3] - 1.0).abs() <= 1e-3, "{row:?}");
    }
    // symmetric about the midpoint
    assert!((rows[0][1] - rows[998][1]).abs() <= 1e-9 * rows[0][1]);
}

#[test]
fn outputs_are_byte_reproducible() {
    let cfg = r#"{"interval":[-1,2],"gamma":1.5,"p":3,"nonlinearity":{"kind":"power","q":4}}"#;
    let (a, b) = (run("solve-1d", cfg, &[]), run("solve-1d", cfg, &[]));
    assert_eq!(a.text("solution.csv"), b.text("solution.csv"));
    assert_eq!(a.text("report.json"), b.text("report.json"));
    assert_eq!(a.manifest()["input_sha256"], b.manifest()["input_sha256"]);

    let cfg = r#"{"domain":{"shape":"rectangle","min":[0,0],"max":[1,1]},"norm":{"family":"euclidean","dim":2},"p":2,"nonlinearity":{"kind":"power","q":3},"boundary_value":5}"#;
    let (a, b) = (
        run("solve-2d", cfg, &["--grid", "0.0625"]),
        run("solve-2d", cfg, &["--grid", "0.0625"]),
    );
    assert_eq!(a.code, 0);
    assert_eq!(a.text("field.csv"), b.text("field.csv"));
}

#[test]
fn unknown_fields_are_rejected_with_manifest() {
    let r = run(
        "ko-check",
        r#"{"p":2,"nonlinearity":{"kind":"power","q":3},"bogus":1}"#,
        &[],
    );
    assert_eq!(r.code, 2);
    let m = r.manifest();
    assert!(m["error"].as_str().unwrap().contains("bogus"));
    assert_eq!(m["outputs"], serde_json::json!(["manifest.json"]));
}

#[test]
fn malformed_json_and_missing_file_are_config_errors() {
    assert_eq!(run("solve-1d", "{", &[]).code, 2);
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let status = Command::new(BIN)
        .args(["ko-check", "--config"])
        .arg(Path::new("/nonexistent/cfg.json"))
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
    let m: Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["input_sha256"], Value::Null);
}

#[test]
fn missing_keller_osserman_is_a_solver_failure() {
    let r = run(
        "solve-1d",
        r#"{"interval":[0,1],"p":2,"nonlinearity":{"kind":"power","q":1}}"#,
        &[],
    );
    assert_eq!(r.code, 1);
    assert_eq!(r.manifest()["status"], "solver_error");
}

#[test]
fn radial_annulus_profile_blows_up_at_the_inner_sphere() {
    let cfg = r#"{"geometry":"annulus","r1":0.5,"r2":1,"norm":{"family":"euclidean","dim":2},"p":2,"nonlinearity":{"kind":"power","q":3}}"#;
    let r = run("solve-radial", cfg, &[]);
    assert_eq!(r.code, 0);
    let text = r.text("profile.csv");
    assert_eq!(text.lines().next(), Some("t,w,psi_ratio"));
    let rows: Vec<Vec<f64>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert!(rows[0][1] > rows.last().unwrap()[1]);
    assert!(rows
        .iter()
        .any(|row| row[0] - 0.5 > 1e-4 && row[0] - 0.5 < 1e-3 && (row[2] - 1.0).abs() < 0.05));
}

#[test]
fn finite_ball_solution_respects_its_boundary_value() {
    let r = run(
        "solve-radial",
        r#"{"geometry":"ball","r":1,"dim":3,"p":2,"nonlinearity":{"kind":"power","q":3},"k":4}"#,
        &[],
    );
    assert_eq!(r.code, 0);
    let rows: Vec<Vec<f64>> = r
        .text("profile.csv")
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert!((rows.last().unwrap()[1] - 4.0).abs() < 1e-12);
    assert!(rows.iter().all(|row| row[1] <= 4.0 + 1e-12));
}

#[test]
fn planar_large_solution_reports_the_k_cap() {
    let cfg = r#"{"domain":{"shape":"disk","r":1},"norm":{"family":"euclidean","dim":2},"p":2,"nonlinearity":{"kind":"power","q":3}}"#;
    let ok = run("solve-2d", cfg, &["--grid", "0.0625"]);
    assert_eq!(ok.code, 0, "{}", ok.manifest());
    let rep = ok.json("report.json");
    assert_eq!(rep["monotonicity_violation"], 0.0);
    // a cap at the first rung stops the schedule there and says so
    let low = run("solve-2d", cfg, &["--grid", "0.0625", "--k-max", "1"]);
    assert_eq!(low.code, 0, "{}", low.manifest());
    assert_eq!(low.manifest()["overrides"]["k_max"], 1.0);
    let rep = low.json("report.json");
    assert_eq!(rep["k_steps"], serde_json::json!([1.0]));
    assert_eq!(rep["capped"], true);
    assert!(rep["max_value"].as_f64().unwrap() <= 1.0 + 1e-9);
}

#[test]
fn eps_schedule_flag_is_parsed_and_validated() {
    let cfg = r#"{"domain":{"shape":"disk","r":1},"norm":{"family":"euclidean","dim":2},"p":3,"nonlinearity":{"kind":"power","q":4},"boundary_value":3}"#;
    let r = run(
        "solve-2d",
        cfg,
        &["--grid", "0.0625", "--eps-schedule", "1e-2,1e-4,0"],
    );
    assert_eq!(r.code, 0, "{}", r.manifest());
    assert_eq!(
        r.manifest()["overrides"]["eps_schedule"],
        serde_json::json!([1e-2, 1e-4, 0.0])
    );
    assert_eq!(run("solve-2d", cfg, &["--eps-schedule", "-1"]).code, 2);
}

#[test]
fn asymptotics_rejects_dirichlet_data() {
    let cfg = r#"{"domain":{"shape":"disk","r":1},"norm":{"family":"euclidean","dim":2},"p":2,"nonlinearity":{"kind":"power","q":3},"boundary_value":3}"#;
    assert_eq!(run("asymptotics", cfg, &[]).code, 2);
}
