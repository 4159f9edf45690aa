use std::fs;
use std::path::Path;
use std::process::Command;

use serde_json::Value;
use torus_pam::io::FieldFile;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_torus-pam"))
}

fn run_in(dir: &Path, args: &[&str]) -> (i32, String) {
    let out = bin()
        .arg("--output-dir")
        .arg(dir)
        .args(args)
        .output()
        .expect("spawn torus-pam");
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stdout).into_owned())
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn kernel_eval_succeeds_and_writes_manifest() {
    let d = tempfile::tempdir().unwrap();
    let (code, _) = run_in(d.path(), &["--seed", "9", "kernel-eval", "--t-list", "0.5", "--points", "1"]);
    assert_eq!(code, 0);
    let m = manifest(d.path());
    assert_eq!(m["schema"], "torus-pam-manifest/1");
    assert_eq!(m["command"], "kernel-eval");
    assert_eq!(m["seed"], 9);
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let d = tempfile::tempdir().unwrap();
    let (code, _) = run_in(d.path(), &["kernel-eval", "--no-such-flag"]);
    assert_eq!(code, 1);
}

#[test]
fn domain_error_exits_one_after_manifest() {
    let d = tempfile::tempdir().unwrap();
    let (code, _) = run_in(d.path(), &["kernel-eval", "--t-list=-1"]);
    assert_eq!(code, 1);
    assert!(d.path().join("manifest.json").exists());
}

#[test]
fn failed_verification_exits_two() {
    // the stated lower constant is violated at t = eps
    let d = tempfile::tempdir().unwrap();
    let (code, stdout) = run_in(d.path(), &["bridge-verify", "--eps", "1", "--n-samples", "2000"]);
    assert_eq!(code, 2, "{stdout}");
    assert_eq!(manifest(d.path())["command"], "bridge-verify");
    assert!(d.path().join("bridge.json").exists());
}

#[test]
fn simulate_is_deterministic_per_seed() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let c = tempfile::tempdir().unwrap();
    let args = ["simulate", "--grid-n", "16", "--mode-k", "4", "--dt", "0.01", "--t-end", "0.1"];
    for (dir, seed) in [(&a, "5"), (&b, "5"), (&c, "6")] {
        let mut v = vec!["--seed", seed];
        v.extend(args);
        assert_eq!(run_in(dir.path(), &v).0, 0);
    }
    let last = |d: &tempfile::TempDir| fs::read(d.path().join("field_00001.bin")).unwrap();
    assert_eq!(last(&a), last(&b));
    assert_ne!(last(&a), last(&c));
    let f = FieldFile::decode(&last(&a)).unwrap();
    assert_eq!((f.d, f.n, f.seed), (1, 16, 5));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("run.json");
    fs::write(&cfg, r#"{"command": "kernel-eval", "params": {"t_list": [0.25], "points": [0.5, 1.0]}}"#).unwrap();
    let out = d.path().join("o1");
    let (code, _) = run_in(&out, &["--config", cfg.to_str().unwrap(), "kernel-eval"]);
    assert_eq!(code, 0);
    assert_eq!(manifest(&out)["args"]["t_list"], "0.25");
    assert_eq!(manifest(&out)["args"]["points"], "0.5,1.0");
    let out2 = d.path().join("o2");
    let (code, _) = run_in(&out2, &["--config", cfg.to_str().unwrap(), "kernel-eval", "--t-list", "2"]);
    assert_eq!(code, 0);
    assert_eq!(manifest(&out2)["args"]["t_list"], "2");
}

#[test]
fn config_for_another_command_is_rejected() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("run.json");
    fs::write(&cfg, r#"{"command": "gamma0", "params": {}}"#).unwrap();
    let (code, _) = run_in(&d.path().join("o"), &["--config", cfg.to_str().unwrap(), "kernel-eval"]);
    assert_eq!(code, 1);
}

#[test]
fn json_tables_on_request() {
    let d = tempfile::tempdir().unwrap();
    let (code, _) = run_in(d.path(), &["--format", "json", "moments-table", "--t-max", "1", "--n-t", "20", "--n-max", "2"]);
    assert_eq!(code, 0);
    let t: Value = serde_json::from_str(&fs::read_to_string(d.path().join("h_table.json")).unwrap()).unwrap();
    assert_eq!(t["rows"].as_array().unwrap().len(), 21);
}

#[test]
fn run_config_fuzz_seeds_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus/parse_run_config");
    for e in fs::read_dir(dir).unwrap() {
        let text = fs::read_to_string(e.unwrap().path()).unwrap();
        let cfg = torus_pam_cli::config::parse_run_config(&text).unwrap();
        assert!(cfg.to_args().unwrap().iter().all(|a| a.starts_with("--")));
    }
}
