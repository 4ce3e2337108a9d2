use std::path::Path;
use std::process::{Command, Output};

fn bin(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_modspace-nls"))
        .args(args)
        .env("MODSPACE_NLS_OUTPUT_DIR", out)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

const DECAY: &str = r#"{
    "name": "flat",
    "experiment": {"kind": "decay", "norm": "lebesgue", "p": 2,
        "times": {"start": 1, "end": 4, "count": 4, "spacing": "linear"}},
    "grid": {"d": 1, "n": 512, "length": 512},
    "dispersion": {"alpha": 1, "gamma": 0.1},
    "data": {"kind": "gaussian", "width": 1}
}"#;

const ZERO: &str = r#"{
    "name": "zero",
    "experiment": {"kind": "existence", "nonlinearity": {"kind": "power", "m": 5},
        "t_max": 2, "nodes": 5, "tol": 1e-10, "max_iter": 5},
    "grid": {"d": 1, "n": 64, "length": 32},
    "dispersion": {"alpha": 1, "gamma": 0.1},
    "data": {"kind": "zero"}
}"#;

#[test]
fn decay_run_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", DECAY);
    let out = bin(&["run", &cfg], dir.path());
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let run = dir.path().join("flat");
    for f in [
        "decay.csv",
        "summary.json",
        "timings.json",
        "decay_raw.dat",
        "decay_compensated.dat",
    ] {
        assert!(run.join(f).exists(), "missing {f}");
    }
    let csv = std::fs::read_to_string(run.join("decay.csv")).unwrap();
    assert!(csv.starts_with(
        "# schema: modspace-nls/decay/v1\nt,raw_norm,compensated_ratio,margin_mass,valid\n"
    ));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(run.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["verdict"], "flat");
    assert_eq!(summary["config"]["name"], "flat");
}

#[test]
fn missing_alpha_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", &DECAY.replace(r#""alpha": 1, "#, ""));
    let out = bin(&["run", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("alpha"), "{err}");
    assert_eq!(bin(&["validate", &cfg], dir.path()).status.code(), Some(2));
}

#[test]
fn overrides_and_validate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", DECAY);
    assert_eq!(bin(&["validate", &cfg], dir.path()).status.code(), Some(0));
    let out = bin(
        &["run", &cfg, "name=renamed", "experiment.count=oops"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    let out = bin(&["run", &cfg, "name=renamed"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert!(dir.path().join("renamed/summary.json").exists());
}

#[test]
fn box_breach_is_rejected_before_running() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", DECAY);
    let out = bin(&["run", &cfg, "experiment.times.end=400"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("grid.length"));
}

#[test]
fn margin_breach_is_an_invalid_experiment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", DECAY);
    let out = bin(
        &[
            "run",
            &cfg,
            "experiment.enforce_box_rule=false",
            "experiment.times.start=100",
            "experiment.times.end=400",
        ],
        dir.path(),
    );
    assert_eq!(
        out.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn zero_data_converges_in_one_iteration() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", ZERO);
    let out = bin(&["run", &cfg], dir.path());
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let summary: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("zero/summary.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(summary["verdict"], "converged_in_ball");
    assert_eq!(summary["summary"]["iterations"], 1);
    assert_eq!(summary["summary"]["solution_norm"], 0.0);
}

#[test]
fn divergence_exit_code_depends_on_permission() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", ZERO);
    let bad = [
        "data={\"kind\":\"gaussian\",\"width\":1,\"amplitude\":20}",
        "experiment.nonlinearity.m=1",
        "experiment.allow_subcritical=true",
        "experiment.radius=1e300",
    ];
    let mut args = vec!["run", &cfg];
    args.extend(bad);
    let out = bin(&args, dir.path());
    assert_eq!(
        out.status.code(),
        Some(4),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let summary = std::fs::read_to_string(dir.path().join("zero/picard_residual.dat")).unwrap();
    assert!(!summary.is_empty());
    args.push("experiment.allow_divergence=true");
    assert_eq!(bin(&args, dir.path()).status.code(), Some(0));
}

#[test]
fn subcritical_power_is_rejected_without_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", ZERO);
    let out = bin(&["run", &cfg, "experiment.nonlinearity.m=4"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("m0"));
}

#[test]
fn hypothesis_violating_embedding_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"name": "e", "experiment": {"kind": "embedding",
            "from": {"p": 4, "q": 1, "s": 0}, "to": {"p": 2, "q": 1, "s": 0},
            "samples": 2, "radius": 2},
            "grid": {"d": 1, "n": 64, "length": 32}}"#,
    );
    let out = bin(&["validate", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("experiment.to"));
}

#[test]
fn constants_subcommand_prints_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin(
        &[
            "constants",
            "--d",
            "1",
            "--gamma-zero",
            "false",
            "--m",
            "5",
            "--p",
            "inf",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["mu"], 0.25);
    assert!((report["m0"].as_f64().unwrap() - (3.0 + 41f64.sqrt()) / 2.0).abs() < 1e-12);
}
