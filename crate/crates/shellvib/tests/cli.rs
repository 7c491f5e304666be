use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use shellvib::obj::load_obj;

fn shellvib(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_shellvib"))
        .args(args)
        .current_dir(dir)
        .env_remove("SHELLVIB_THREADS")
        .output()
        .expect("binary runs")
}

fn stderr_json(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    serde_json::from_str(text.trim()).unwrap_or_else(|e| panic!("stderr is not JSON ({e}): {text}"))
}

const SMALL_MODAL: &str = r#"{
  "mesh": { "sphere": { "radius": 0.1, "level": 2 } },
  "thickness": 0.002,
  "material": "barium_titanate",
  "electric": "unelectroded",
  "analysis": { "modal": { "num_modes": 8 } },
  "output": { "sampling": 3 }
}"#;

#[test]
fn unknown_config_field_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = SMALL_MODAL.replace("\"thickness\"", "\"thicknes\"");
    fs::write(dir.path().join("c.json"), cfg).unwrap();
    let out = shellvib(&["run", "c.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_json(&out);
    assert_eq!(err["error"]["kind"], "ConfigError");
    assert!(err["error"]["message"].as_str().unwrap().contains("thicknes"));
}

#[test]
fn nested_unknown_field_and_range_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    for cfg in [
        SMALL_MODAL.replace("\"num_modes\": 8", "\"num_modes\": 8, \"modes\": 3"),
        SMALL_MODAL.replace("\"thickness\": 0.002", "\"thickness\": -1"),
        SMALL_MODAL.replace("\"num_modes\": 8", "\"num_modes\": 100000"),
    ] {
        fs::write(dir.path().join("c.json"), cfg).unwrap();
        let out = shellvib(&["run", "c.json"], dir.path());
        assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
        stderr_json(&out);
    }
}

#[test]
fn missing_inputs_fail_with_error_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = shellvib(&["run", "absent.json"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_json(&out)["error"]["kind"], "Io");

    fs::write(dir.path().join("c.json"), r#"{"mesh": {"obj": "absent.obj"}, "thickness": 0.01,
        "material": {"isotropic": {"young": 1e9, "poisson": 0.3, "density": 1000}},
        "analysis": {"modal": {"num_modes": 3}}}"#)
        .unwrap();
    let out = shellvib(&["run", "c.json"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_json(&out)["error"]["kind"], "Io");

    fs::write(dir.path().join("tri.obj"), "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n").unwrap();
    fs::write(dir.path().join("c.json"), r#"{"mesh": {"obj": "tri.obj"}, "thickness": 0.01,
        "material": {"isotropic": {"young": 1e9, "poisson": 0.3, "density": 1000}},
        "analysis": {"modal": {"num_modes": 3}}}"#)
        .unwrap();
    let out = shellvib(&["run", "c.json"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_json(&out)["error"]["kind"], "ObjParse");
}

#[test]
fn mesh_gen_writes_benchmark_meshes() {
    let dir = tempfile::tempdir().unwrap();
    let out = shellvib(&["mesh-gen", "--sphere", "0.1", "2", "--out", "sphere.obj"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let sphere = load_obj(dir.path().join("sphere.obj")).unwrap();
    assert_eq!(sphere.num_faces(), 96);
    assert!(sphere.is_closed());
    for v in sphere.vertices() {
        assert!((v.norm() - 0.1).abs() < 0.01);
    }

    let out = shellvib(&["mesh-gen", "--roof", "0.5", "0.25", "40", "8", "--out", "roof.obj"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let roof = load_obj(dir.path().join("roof.obj")).unwrap();
    assert_eq!(roof.num_faces(), 64);
    assert!(!roof.is_closed());

    let out = shellvib(&["mesh-gen", "--sphere", "0.1", "--out", "x.obj"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let out = shellvib(&["mesh-gen", "--sphere", "0.1", "1", "--out", "x.obj"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_json(&out)["error"]["kind"], "BadGeometry");
}

fn run_in(dir: &Path, extra: &[&str], threads_env: Option<&str>) -> (Vec<u8>, Vec<u8>, Vec<u8>) {
    fs::write(dir.join("c.json"), SMALL_MODAL).unwrap();
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_shellvib"));
    cmd.arg("run").arg("c.json").args(extra).current_dir(dir).env_remove("SHELLVIB_THREADS");
    if let Some(t) = threads_env {
        cmd.env("SHELLVIB_THREADS", t);
    }
    let out = cmd.output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let read = |name: &str| fs::read(dir.join(name)).unwrap();
    (read("report.json"), read("results.csv"), read("result.vtk"))
}

#[test]
fn reports_are_byte_identical_for_equal_thread_counts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let c = tempfile::tempdir().unwrap();
    let first = run_in(a.path(), &["--threads", "2"], None);
    let second = run_in(b.path(), &["--threads", "2"], None);
    let from_env = run_in(c.path(), &[], Some("2"));
    assert!(first == second, "two runs differ");
    assert!(first == from_env, "SHELLVIB_THREADS run differs from --threads");

    let report: Value = serde_json::from_slice(&first.0).unwrap();
    assert_eq!(report["config"]["thickness"], 0.002);
    assert_eq!(report["mesh"]["elements"], 96);
    assert_eq!(report["modal"]["num_rigid"], 6);
    let csv = String::from_utf8(first.1).unwrap();
    assert_eq!(csv.lines().next(), Some("mode_index,frequency_hz,rigid_flag,residual"));
    assert_eq!(csv.lines().count(), 9);
}

#[test]
fn bad_thread_settings_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.json"), SMALL_MODAL).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_shellvib"))
        .args(["run", "c.json"])
        .current_dir(dir.path())
        .env("SHELLVIB_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = shellvib(&["run", "c.json", "--threads", "0"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}
