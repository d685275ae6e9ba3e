use std::path::Path;
use std::process::{Command, Output};

fn relflock(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_relflock")).args(args).output().expect("binary runs")
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn write_short_config(dir: &Path) -> std::path::PathBuf {
    let out = dir.join("preset");
    let run = relflock(&["scenario", "flocking", "--seed", "3", "--out", out.to_str().unwrap()]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let text = std::fs::read_to_string(out.join("config.toml")).unwrap();
    let short = text.replace("t_end = 100.0", "t_end = 1.0");
    assert_ne!(short, text);
    let path = dir.join("flocking.toml");
    std::fs::write(&path, short).unwrap();
    path
}

#[test]
fn scenario_writes_all_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let run = relflock(&["scenario", "collision", "--out", out.to_str().unwrap()]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    for file in ["config.toml", "trajectory.csv", "diagnostics.jsonl", "summary.json"] {
        assert!(out.join(file).exists(), "{file}");
    }
    let summary = json(&out.join("summary.json"));
    assert_eq!(summary["termination"]["status"], "collision_detected");
    let stdout: serde_json::Value = serde_json::from_slice(&run.stdout).unwrap();
    assert_eq!(stdout, summary);
}

#[test]
fn simulate_from_config_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_short_config(dir.path());
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let run = relflock(&["simulate", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    }
    let csv = |p: &Path| std::fs::read(p.join("trajectory.csv")).unwrap();
    assert_eq!(csv(&a), csv(&b));
    assert_eq!(json(&a.join("summary.json"))["t_final"], 1.0);
}

#[test]
fn check_prints_admissibility() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_short_config(dir.path());
    let run = relflock(&["check", "--config", config.to_str().unwrap()]);
    assert!(run.status.success());
    let report: serde_json::Value = serde_json::from_slice(&run.stdout).unwrap();
    assert_eq!(report["flocking_hypotheses_ok"], true);
    assert!(report["r_lower"].as_f64().unwrap() < report["r_upper"].as_f64().unwrap());
}

#[test]
fn sweep_writes_json() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("sweep.toml");
    std::fs::write(
        &config,
        r#"
[model]
c = "inf"
kappa0 = 1.0
kappa1 = 1.0
kappa2 = 4.0

[model.kernel]
kind = "cucker_smale"
beta = 0.5

[stepper]
scheme = "rk4"
dt = 0.01
t_end = 5.0

[scenario]
kind = "limit_sweep"
cs = [10.0, 20.0, 40.0]

[scenario.base]
kind = "manifold"
n = 2
spread = 0.0
speed = 0.0
target = 1.5
positions = [[0.0, 0.0], [1.2, 0.3]]
momenta = [[0.5, 0.2], [-0.5, -0.2]]

[scenario.base.backend]
kind = "euclidean"
dim = 2
"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    let run =
        relflock(&["sweep-c", "--config", config.to_str().unwrap(), "--t-end", "1", "--out", out.to_str().unwrap()]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let result = json(&out.join("sweep.json"));
    assert_eq!(result["cs"], serde_json::json!([10.0, 20.0, 40.0]));
    assert_eq!(result["strictly_decreasing"], true);

    let explicit = relflock(&[
        "sweep-c",
        "--config",
        config.to_str().unwrap(),
        "--c",
        "5,10,20",
        "--t-end",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(explicit.status.success());
    assert_eq!(json(&out.join("sweep.json"))["cs"], serde_json::json!([5.0, 10.0, 20.0]));
}

#[test]
fn errors_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.toml");
    let run = relflock(&["check", "--config", missing.to_str().unwrap()]);
    assert!(!run.status.success());
    assert!(!run.stderr.is_empty());

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "seed = 1\n").unwrap();
    assert!(!relflock(&["simulate", "--config", bad.to_str().unwrap(), "--out", dir.path().to_str().unwrap()])
        .status
        .success());

    let config = write_short_config(dir.path());
    let run = relflock(&["sweep-c", "--config", config.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(!run.status.success());
    assert!(!relflock(&["scenario", "heart", "--out", dir.path().to_str().unwrap()]).status.success());
}
