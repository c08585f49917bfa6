use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};

fn vacuum() -> Value {
    json!({
        "physics": {"Lambda": 3.0, "m": 1.0, "rho": 0.0},
        "initial": {"E0": 1.0, "W0": 0.0, "Z0": 0.0, "Phi0": 0.0, "psi0": 0.0, "f0": "zero"},
        "grid": {"u_max": 4.0, "n": 9},
        "solve": {"dt": 0.01, "T": 8.0, "picard_tol": 1e-10, "picard_max_iters": 40,
                  "sobolev": {"m": 3, "d": 3.0}, "storage_stride": 10}
    })
}

/// Small collisional run on a coarse grid.
fn collisional() -> Value {
    json!({
        "physics": {"Lambda": 3.0, "m": 0.5, "rho": 0.01},
        "initial": {"E0": 1.0, "W0": -0.05, "Z0": 0.1, "Phi0": 0.5, "psi0": 0.1,
                    "f0": {"gaussian": {"sobolev_norm": 1e-3, "width": 0.9}}},
        "grid": {"u_max": 4.0, "n": 9},
        "collision": {"kernel": {"name": "gaussian", "amplitude": 1.0}},
        "solve": {"dt": 0.01, "T": 0.05, "picard_tol": 1e-10, "picard_max_iters": 30,
                  "sobolev": {"m": 3, "d": 3.0}}
    })
}

fn write(dir: &Path, name: &str, v: &Value) -> std::path::PathBuf {
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string_pretty(v).unwrap()).unwrap();
    path
}

fn embsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_embsim")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn report_value(report: &str, section: &str, key: &str) -> f64 {
    let line = report
        .lines()
        .skip_while(|l| !l.starts_with(section))
        .find(|l| l.contains(key))
        .unwrap_or_else(|| panic!("no {key} in {section}:\n{report}"));
    let rest = &line[line.find(key).unwrap() + key.len()..];
    rest.trim_start_matches([' ', '='])
        .split([',', ' '])
        .next()
        .unwrap()
        .parse()
        .unwrap()
}

#[test]
fn vacuum_de_sitter_approaches_limit() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "vacuum.json", &vacuum());
    let out = dir.path().join("out");
    let o = embsim(&["simulate", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report = fs::read_to_string(out.join("report.txt")).unwrap();
    assert_eq!(String::from_utf8(o.stdout.clone()).unwrap(), report);
    assert!(report.contains("hamiltonian residual at t = 0: 0e0"));
    let u = report_value(&report, "final state", "U");
    assert!((u - 1.0).abs() < 1e-9, "{u}");
    assert!(report.contains("verdict: PASS"));
    let csv = fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert!(csv.starts_with("t,E,U,W,Z,Phi,psi,"));
    assert_eq!(csv.lines().count(), 1 + 81);
}

#[test]
fn output_stride_thins_csv() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = vacuum();
    v["output"] = json!({"directory": dir.path().join("thin"), "stride": 4});
    let cfg = write(dir.path(), "vacuum.json", &v);
    assert_eq!(code(&embsim(&["simulate", cfg.to_str().unwrap()])), 0);
    let csv = fs::read_to_string(dir.path().join("thin/trajectory.csv")).unwrap();
    // records 0, 4, ..., 80
    assert_eq!(csv.lines().count(), 1 + 21);
}

#[test]
fn malformed_config_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(&path, "{\n  \"physics\": {\"Lambda\": 3.0,}\n}\n").unwrap();
    let o = embsim(&["simulate", path.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
    let o = embsim(&["simulate", dir.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(code(&o), 2);
}

#[test]
fn invalid_values_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = vacuum();
    v["initial"]["W0"] = json!(1.0);
    let o = embsim(&["simulate", write(dir.path(), "w.json", &v).to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("W0"));
    let mut v = vacuum();
    v["physics"]["rho"] = json!(0.5);
    let o = embsim(&["simulate", write(dir.path(), "psi.json", &v).to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("psi0"));
}

#[test]
fn validity_horizon_has_its_own_status() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = vacuum();
    v["physics"]["rho"] = json!(1.0);
    v["initial"]["Phi0"] = json!(0.1);
    v["initial"]["psi0"] = json!(0.05);
    v["solve"]["dt"] = json!(1e-3);
    v["solve"]["T"] = json!(1.0);
    let cfg = write(dir.path(), "drain.json", &v);
    let out = dir.path().join("out");
    let o = embsim(&["simulate", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    let report = fs::read_to_string(out.join("report.txt")).unwrap();
    assert!(report.contains("verdict: VALIDITY HORIZON"), "{report}");
    assert!(out.join("trajectory.csv").exists());
}

#[test]
fn picard_mode_reports_contraction() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = collisional();
    v["mode"] = json!("picard");
    let cfg = write(dir.path(), "picard.json", &v);
    let out = dir.path().join("out");
    let o = embsim(&["simulate", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    let report = fs::read_to_string(out.join("report.txt")).unwrap();
    assert_eq!(code(&o), 0, "{report}");
    assert!(report.contains("fixed-point contraction"));
    assert!(report.contains("converged: true"));
}

#[test]
fn verify_suites_pass() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = collisional();
    v["checks"] = json!({"kinematic_samples": 300, "jacobian_samples": 50, "moser_pairs": 2});
    let cfg = write(dir.path(), "verify.json", &v);
    let o = embsim(&["verify", "collision", cfg.to_str().unwrap()]);
    let text = String::from_utf8(o.stdout.clone()).unwrap();
    assert_eq!(code(&o), 0, "{text}");
    for key in [
        "kinematics over 300 samples",
        "jacobian identity over 50 samples",
        "bilinear bound over 2 pairs",
    ] {
        assert!(text.contains(key), "{text}");
    }
    let o = embsim(&["verify", "energy", cfg.to_str().unwrap()]);
    let text = String::from_utf8(o.stdout.clone()).unwrap();
    assert_eq!(code(&o), 0, "{text}");
    assert!(text.contains("feasible: delta1"));
}

#[test]
fn sweep_runs_each_value() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = vacuum();
    v["solve"]["T"] = json!(1.0);
    let cfg = write(dir.path(), "vacuum.json", &v);
    let out = dir.path().join("sweep");
    let o = embsim(&[
        "sweep",
        cfg.to_str().unwrap(),
        "--param",
        "physics.Lambda",
        "--values",
        "1,3,12",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for (lambda, want) in [("1", 1.0f64 / 3.0), ("3", 1.0), ("12", 4.0)] {
        let report = fs::read_to_string(out.join(format!("physics.Lambda={lambda}/report.txt"))).unwrap();
        assert!(report.contains(&format!("Lambda = {lambda},")), "{report}");
        let limit = report_value(&report, "final state", "sqrt(Lambda/3)");
        assert!((limit - want.sqrt()).abs() < 1e-12);
    }
    let summary = fs::read_to_string(out.join("sweep.txt")).unwrap();
    assert_eq!(summary.lines().count(), 3);
    let o = embsim(&[
        "sweep",
        cfg.to_str().unwrap(),
        "--param",
        "physics.nothing.deep",
        "--values",
        "1",
    ]);
    assert_eq!(code(&o), 2);
}

#[test]
fn identical_configs_give_identical_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", &collisional());
    let mut csv = Vec::new();
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        assert_eq!(
            code(&embsim(&[
                "simulate",
                cfg.to_str().unwrap(),
                "--out",
                out.to_str().unwrap()
            ])),
            0
        );
        csv.push(fs::read(out.join("trajectory.csv")).unwrap());
    }
    assert_eq!(csv[0], csv[1]);
}

#[test]
fn shipped_configs_load() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut count = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "json") {
            let cfg = flrw_kinetic::load_config(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            cfg.initial_data().unwrap();
            count += 1;
        }
    }
    assert!(count >= 3);
}
