use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use jtr::formats::snapshot;

fn jtr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jtr")).args(args).env_remove("JTR_SEED").output().unwrap()
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

/// Copy of the bundled default scenario shortened to `duration` seconds.
fn short_config(dir: &Path, duration: f64) -> PathBuf {
    let text = std::fs::read_to_string(configs().join("sec6_default.json")).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["duration"] = duration.into();
    let path = dir.join("short.json");
    std::fs::write(&path, serde_json::to_string_pretty(&v).unwrap()).unwrap();
    path
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn missing_config_exits_2_with_manifest_and_no_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = jtr(&["simulate", "--config", s(&tmp.path().join("nope.json")), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
    let m = manifest(&out);
    assert_eq!(m["exit_code"], 2);
    assert!(m["error"].as_str().unwrap().contains("nope.json"));
    let names: Vec<_> = std::fs::read_dir(&out).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(names, vec!["manifest.json"]);
}

#[test]
fn malformed_and_invalid_configs_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.json");
    std::fs::write(&bad, "{ \"seed\": 1, ").unwrap();
    let o = jtr(&["simulate", "--config", s(&bad), "--out", s(&tmp.path().join("a"))]);
    assert_eq!(o.status.code(), Some(2));
    std::fs::write(&bad, r#"{"dt": -0.1}"#).unwrap();
    let o = jtr(&["compare", "--config", s(&bad), "--out", s(&tmp.path().join("b")), "--trials", "1"]);
    assert_eq!(o.status.code(), Some(2));
    std::fs::write(&bad, r#"{"unknown_key": 3}"#).unwrap();
    let o = jtr(&["simulate", "--config", s(&bad), "--out", s(&tmp.path().join("c"))]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn usage_errors_exit_2() {
    let o = jtr(&["simulate", "--bogus"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(jtr(&["--help"]).status.code(), Some(0));
}

#[test]
fn unwritable_output_exits_1() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = short_config(tmp.path(), 1.0);
    let blocker = tmp.path().join("file");
    std::fs::write(&blocker, "").unwrap();
    let o = jtr(&["simulate", "--config", s(&cfg), "--out", s(&blocker.join("sub"))]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn simulate_is_deterministic_per_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = short_config(tmp.path(), 3.0);
    let run = |name: &str, seed: &str| {
        let out = tmp.path().join(name);
        let o = jtr(&["simulate", "--config", s(&cfg), "--out", s(&out), "--algo", "all", "--seed", seed]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        (std::fs::read(out.join("tracks.csv")).unwrap(), std::fs::read(out.join("registration.csv")).unwrap())
    };
    let a = run("a", "7");
    let b = run("b", "7");
    let c = run("c", "8");
    assert_eq!(a, b);
    assert_ne!(a.0, c.0);
    let text = String::from_utf8(a.0).unwrap();
    assert!(text.starts_with("# jtr tracks.csv schema v1\nalgo,t,id,truth_id,"));
    for algo in ["fmap", "sep", "dense"] {
        assert!(text.lines().any(|l| l.starts_with(&format!("{algo},"))));
    }
}

#[test]
fn seed_flag_beats_environment_beats_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = short_config(tmp.path(), 0.5);
    let run = |name: &str, env: Option<&str>, flag: Option<&str>| {
        let out = tmp.path().join(name);
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_jtr"));
        cmd.args(["simulate", "--config", s(&cfg), "--out", s(&out)]).env_remove("JTR_SEED");
        if let Some(e) = env {
            cmd.env("JTR_SEED", e);
        }
        if let Some(f) = flag {
            cmd.args(["--seed", f]);
        }
        assert!(cmd.output().unwrap().status.success());
        manifest(&out)["seed"].as_u64().unwrap()
    };
    assert_eq!(run("cfg", None, None), 1);
    assert_eq!(run("env", Some("42"), None), 42);
    assert_eq!(run("flag", Some("42"), Some("9")), 9);
}

#[test]
fn dump_info_writes_a_readable_snapshot() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = short_config(tmp.path(), 2.0);
    let out = tmp.path().join("out");
    let o = jtr(&["simulate", "--config", s(&cfg), "--out", s(&out), "--dump-info"]);
    assert!(o.status.success());
    let snap = snapshot::read_snapshot(&std::fs::read_to_string(out.join("fmap_snapshot.txt")).unwrap()).unwrap();
    let info = snapshot::read_info(&std::fs::read_to_string(out.join("fmap_info.txt")).unwrap()).unwrap();
    assert_eq!(snap.info(), &info);
    assert_eq!(snap.layout().sensors(), 2);
    assert!(snap.layout().tracks() > 0);
    let outputs = manifest(&out)["outputs"].clone();
    assert_eq!(outputs.as_array().unwrap().len(), 4);
}

#[test]
fn replay_reads_simulated_detections() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = short_config(tmp.path(), 5.0);
    let det = tmp.path().join("det.csv");
    let o = jtr(&[
        "simulate",
        "--config",
        s(&cfg),
        "--out",
        s(&tmp.path().join("sim")),
        "--detections-out",
        s(&det),
    ]);
    assert!(o.status.success());
    let out = tmp.path().join("replay");
    let o = jtr(&["replay", s(&det), "--config", s(&cfg), "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let counts = std::fs::read_to_string(out.join("track_count.csv")).unwrap();
    assert_eq!(counts.lines().count(), 2 + 51);
    let last: usize = counts.lines().last().unwrap().rsplit(',').next().unwrap().parse().unwrap();
    assert_eq!(last, 10);

    // Same detections, same result as the simulation's own fmap run.
    let sim_reg = std::fs::read_to_string(tmp.path().join("sim/registration.csv")).unwrap();
    let rep_reg = std::fs::read_to_string(out.join("registration.csv")).unwrap();
    assert_eq!(sim_reg, rep_reg);
}

#[test]
fn replay_rejects_malformed_detections_with_line_numbers() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = short_config(tmp.path(), 1.0);
    let det = tmp.path().join("det.csv");
    std::fs::write(&det, "t,sensor_id,r,rdot,theta_deg\n0,0,10,0,1\n0,0,10,zero,1\n").unwrap();
    let out = tmp.path().join("out");
    let o = jtr(&["replay", s(&det), "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
    assert!(!out.join("registration.csv").exists());
    assert_eq!(manifest(&out)["exit_code"], 2);

    let o = jtr(&["replay", s(&tmp.path().join("absent.csv")), "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn replay_of_an_empty_file_writes_headers_only() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = short_config(tmp.path(), 1.0);
    let det = tmp.path().join("empty.csv");
    std::fs::write(&det, "").unwrap();
    let out = tmp.path().join("out");
    let o = jtr(&["replay", s(&det), "--config", s(&cfg), "--out", s(&out)]);
    assert!(o.status.success());
    assert_eq!(std::fs::read_to_string(out.join("track_count.csv")).unwrap().lines().count(), 2);
}

#[test]
fn benchmark_writes_one_row_per_sample() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("bench");
    let o = jtr(&["benchmark", "--out", s(&out), "--n", "2,4", "--trials", "3", "--warmup", "1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(out.join("timing.csv")).unwrap();
    assert_eq!(text.lines().count(), 2 + 3 * 2 * 3);
    let o = jtr(&["benchmark", "--out", s(&out), "--n", "4,2"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn compare_does_not_depend_on_thread_count() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = short_config(tmp.path(), 2.0);
    let run = |name: &str, jobs: &str| {
        let out = tmp.path().join(name);
        let o = jtr(&["compare", "--config", s(&cfg), "--out", s(&out), "--trials", "4", "--jobs", jobs]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        (std::fs::read(out.join("metrics.csv")).unwrap(), std::fs::read(out.join("final_registration.csv")).unwrap())
    };
    assert_eq!(run("one", "1"), run("three", "3"));
}
