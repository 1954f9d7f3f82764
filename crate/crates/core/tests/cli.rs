use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn ptcoupler(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ptcoupler")).args(args).output().unwrap()
}

fn json_stdout(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn spectrum_reports_real_and_complex_constants() {
    let v = json_stdout(&ptcoupler(&["spectrum", "--gamma", "0.5"]));
    assert!((v["b_plus"].as_f64().unwrap() - 1.75f64.sqrt()).abs() < 1e-12);
    assert_eq!(v["broken"], Value::Bool(false));

    let v = json_stdout(&ptcoupler(&["spectrum", "--gamma", "2"]));
    let b = v["b_plus"].as_array().unwrap();
    assert_eq!(b[0].as_f64().unwrap(), 0.0);
    assert!((b[1].as_f64().unwrap() - 2f64.sqrt()).abs() < 1e-12);
    assert_eq!(v["broken"], Value::Bool(true));
}

#[test]
fn exit_codes() {
    let out = ptcoupler(&["mode", "--gamma", "0.5", "--b", "0.5"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("does not exist"));

    assert_eq!(ptcoupler(&["spectrum", "--gamma", "abc"]).status.code(), Some(2));
    assert_eq!(ptcoupler(&["frobnicate"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let never = dir.path().join("never");
    assert_eq!(ptcoupler(&["figure", "9", "--out", never.to_str().unwrap()]).status.code(), Some(2));
    assert!(!never.exists());
    assert_eq!(ptcoupler(&["continue", "--gamma", "0.5", "--from", "2", "--to", "3"]).status.code(), Some(2));
    assert_eq!(ptcoupler(&["spectrum", "--gamma", "-1"]).status.code(), Some(2));
    let out = ptcoupler(&["stability", "--gamma", "1.6", "--b", "2"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("broken"));
    assert_eq!(ptcoupler(&["--help"]).status.code(), Some(0));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("job.json");
    fs::write(&cfg, r#"{"gamma": 0.5, "alpha": 1}"#).unwrap();
    let c = cfg.to_str().unwrap();

    let v = json_stdout(&ptcoupler(&["--config", c, "spectrum"]));
    assert!((v["b_plus"].as_f64().unwrap() - 1.75f64.sqrt()).abs() < 1e-12);
    let v = json_stdout(&ptcoupler(&["--config", c, "spectrum", "--gamma", "0.8"]));
    assert!((v["b_plus"].as_f64().unwrap() - 1.36f64.sqrt()).abs() < 1e-12);

    fs::write(&cfg, r#"{"gamma": 0.5, "colour": "red"}"#).unwrap();
    assert_eq!(ptcoupler(&["--config", c, "spectrum"]).status.code(), Some(2));
}

#[test]
fn continue_writes_branch_csv_with_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("branch.csv");
    let o = ptcoupler(&[
        "continue", "--gamma", "0.5", "--family", "circular", "--sign", "-", "--from", "2", "--to", "3", "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = pt_coupler::io::read_branch_csv(&out).unwrap();
    assert!(rows.len() > 10);
    assert!(rows.iter().all(|(_, r)| r.stable == Some(true)));
    assert!((rows.last().unwrap().1.param - 3.0).abs() < 1e-12);
    let side = read_json(&out.with_extension("json"));
    assert_eq!(side["termination"], "boundary");
    assert_eq!(side["config"]["gamma"], 0.5);
    assert!(side["config"].get("out").is_none());
}

#[test]
fn evolve_writes_trace_and_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("trace.csv");
    let o = ptcoupler(&["evolve", "--gamma", "0.5", "--b", "3", "--z-max", "5", "--seed", "3", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("z,i1,i2,i3,i4,U"));
    assert_eq!(lines.count(), 51);
    let side = read_json(&out.with_extension("json"));
    assert_eq!(side["status"]["kind"], "completed");
    assert!(side["power_law_defect"].as_f64().unwrap() < 1e-6);
    assert_eq!(side["config"]["seed"], 3);
    assert_eq!(side["config"]["eps"], 1e-3);
    assert_eq!(side["config"]["rtol"], 1e-10);
}

#[test]
fn ghost_branch_ends_near_sqrt6() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ghost.csv");
    let o = ptcoupler(&["ghost", "--b", "2", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let side = read_json(&out.with_extension("json"));
    for b in side["branches"].as_array().unwrap() {
        assert!((b["gamma_end"].as_f64().unwrap() - 6f64.sqrt()).abs() < 0.01);
    }
}

fn figure_bytes(n: &str, threads: &str) -> Vec<(String, Vec<u8>)> {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_ptcoupler"))
        .args(["figure", n, "--out", dir.path().to_str().unwrap()])
        .env("RAYON_NUM_THREADS", threads)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mut files: Vec<_> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn figure_output_is_deterministic() {
    for n in ["2", "3", "5"] {
        let a = figure_bytes(n, "1");
        let b = figure_bytes(n, "4");
        assert!(!a.is_empty());
        assert_eq!(a, b, "figure {n} differs between runs");
    }
    let names: Vec<String> = figure_bytes("3", "2").into_iter().map(|f| f.0).collect();
    assert_eq!(names, ["fig3.json", "fig3_branches.csv", "fig3_ghosts.csv"]);
}
