use serde_json::Value;
use std::path::PathBuf;
use std::process::{Command, Output};

fn horoflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_horoflow")).args(args).output().expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("horoflow-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn reports(out: &Output) -> Vec<Value> {
    serde_json::from_slice::<Vec<Value>>(&out.stdout).expect("JSON report on stdout")
}

fn strip_timing(mut v: Vec<Value>) -> Vec<Value> {
    for r in &mut v {
        r.as_object_mut().unwrap().remove("wall_time_ms");
    }
    v
}

#[test]
fn intersections_pass_and_list_v_rows() {
    let out = horoflow(&["verify", "intersections"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = reports(&out);
    let v_rows: Vec<&Value> = r.iter().filter(|c| c["name"].as_str().unwrap().starts_with("intersections.V[")).collect();
    assert_eq!(v_rows.len(), 3);
    for row in v_rows {
        assert!((row["computed"].as_f64().unwrap() - 2.0 * std::f64::consts::PI).abs() < 1e-8);
    }
    for c in &r {
        assert!(!c["reference"].as_str().unwrap().is_empty());
        for key in ["computed", "expected", "expected_source", "tolerance", "status", "quantities", "wall_time_ms"] {
            assert!(c.get(key).is_some(), "missing {key}");
        }
    }
}

#[test]
fn euclidean_map_f_is_a_translation() {
    let out = horoflow(&["verify", "map-f", "--model", "e3", "--samples", "20000"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(reports(&out).iter().all(|c| c["status"] == "pass"));
}

#[test]
fn outside_image_is_a_discrepancy_not_a_failure() {
    let out = horoflow(&["verify", "map-f", "--model", "h2", "--probe-outside-image", "--samples", "20000"]);
    assert_eq!(out.status.code(), Some(0));
    let r = reports(&out);
    let probe = r.iter().find(|c| c["name"] == "map-f.outside-image").expect("probe ran");
    assert_eq!(probe["status"], "paper-discrepancy");
    assert!(probe["computed"].as_f64().unwrap() <= 0.01);
}

#[test]
fn numerical_failure_exits_one() {
    let path = scratch("strict.json");
    std::fs::write(&path, r#"{"tolerances": {"hessian": 1e-30}}"#).unwrap();
    let out = horoflow(&["verify", "busemann", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let r = reports(&out);
    assert_eq!(r.iter().find(|c| c["name"] == "busemann.hessian-fd").unwrap()["status"], "fail");
}

#[test]
fn usage_and_config_errors_exit_two() {
    assert_eq!(horoflow(&["verify", "nope"]).status.code(), Some(2));
    assert_eq!(horoflow(&["verify", "all", "--model", "k3"]).status.code(), Some(2));
    assert_eq!(horoflow(&["verify", "all", "--model", "h1"]).status.code(), Some(2));
    assert_eq!(horoflow(&["sweep", "--s", "0:1"]).status.code(), Some(2));
    assert_eq!(horoflow(&["sweep", "--model", "e3"]).status.code(), Some(2));
    assert_eq!(horoflow(&["frobnicate"]).status.code(), Some(2));
    let path = scratch("bad.json");
    std::fs::write(&path, r#"{"samples": 1}"#).unwrap();
    assert_eq!(horoflow(&["verify", "coarea", "--config", path.to_str().unwrap()]).status.code(), Some(2));
    std::fs::write(&path, r#"{"unknown_key": 1}"#).unwrap();
    assert_eq!(horoflow(&["verify", "coarea", "--config", path.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn flags_override_config_file() {
    let path = scratch("h2.json");
    std::fs::write(&path, r#"{"model": "h2", "samples": 5000}"#).unwrap();
    let out = horoflow(&["verify", "busemann", "--config", path.to_str().unwrap(), "--model", "e2"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(reports(&out).iter().any(|c| c["name"] == "busemann.visibility-unbounded"));
}

#[test]
fn example_is_deterministic() {
    let a = horoflow(&["example", "poincare"]);
    let b = horoflow(&["example", "poincare"]);
    assert_eq!(a.status.code(), Some(0));
    let (ra, rb) = (strip_timing(reports(&a)), strip_timing(reports(&b)));
    assert_eq!(serde_json::to_string(&ra).unwrap(), serde_json::to_string(&rb).unwrap());
    let length = ra.iter().find(|c| c["name"] == "example.length").unwrap();
    assert!((length["computed"].as_f64().unwrap() - 4.71238898038469).abs() < 1e-9);
}

#[test]
fn seeded_runs_repeat() {
    let args = ["verify", "coarea", "--seed", "11", "--samples", "20000"];
    let (a, b) = (horoflow(&args), horoflow(&args));
    assert_eq!(strip_timing(reports(&a)), strip_timing(reports(&b)));
}

#[test]
fn sweep_csv_layout() {
    let path = scratch("sweep.csv");
    let out = horoflow(&["sweep", "--s", "0.5:2:3", "--t", "-3:3:5", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 16);
    assert_eq!(lines[0], "s,t,vol,V,W,bound,beta_max");
    let rows: Vec<Vec<f64>> = lines[1..].iter().map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    for group in rows.chunks(5) {
        let v0 = group[0][3];
        assert!(group.iter().all(|r| (r[3] - v0).abs() <= 1e-8 && r[0] == group[0][0]));
    }
    for t_idx in 0..5 {
        let vols: Vec<f64> = rows.iter().skip(t_idx).step_by(5).map(|r| r[2]).collect();
        assert!(vols.windows(2).all(|w| w[1] >= w[0]));
    }
}

#[test]
fn thread_cap_does_not_change_output() {
    let run = |threads: &str| {
        let out = Command::new(env!("CARGO_BIN_EXE_horoflow"))
            .args(["sweep", "--s", "0.2:1:4", "--t", "-1:1:3"])
            .env("HOROFLOW_THREADS", threads)
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0));
        out.stdout
    };
    assert_eq!(run("1"), run("4"));
    let bad = Command::new(env!("CARGO_BIN_EXE_horoflow")).args(["example", "poincare"]).env("HOROFLOW_THREADS", "0").output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
}
