use std::path::Path;
use std::process::Command;

fn treequipart() -> Command {
    Command::new(env!("CARGO_BIN_EXE_treequipart"))
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn run_writes_identical_files_for_equal_seeds() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "coin.json",
        r#"{"kind":"iid","d":3,"p":[0.5,0.5]}"#,
    );
    let spec = write(
        dir.path(),
        "spec.json",
        r#"{"model":"coin.json","mode":"horoshell","d":3,"n_range":[1,3],"replicas":5,"output":"out.csv"}"#,
    );
    for name in ["a.csv", "b.csv"] {
        let status = treequipart()
            .args(["run", "--spec"])
            .arg(&spec)
            .args(["--seed", "9", "--out"])
            .arg(dir.path().join(name))
            .status()
            .unwrap();
        assert!(status.success());
    }
    let a = std::fs::read_to_string(dir.path().join("a.csv")).unwrap();
    assert_eq!(
        a,
        std::fs::read_to_string(dir.path().join("b.csv")).unwrap()
    );
    for line in a.lines().skip(1).filter(|l| l.starts_with("horoshell")) {
        let value: f64 = line.split(',').nth(4).unwrap().parse().unwrap();
        assert_eq!(value, std::f64::consts::LN_2);
    }

    assert!(treequipart()
        .args(["run", "--spec"])
        .arg(&spec)
        .status()
        .unwrap()
        .success());
    assert!(dir.path().join("out.csv").exists());
}

#[test]
fn run_emits_json_on_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(
        dir.path(),
        "spec.json",
        r#"{"model":{"kind":"ising","d":3,"beta":0.2},"mode":"metric-spheres","d":3,"n_range":[1,2],"replicas":3}"#,
    );
    let out = treequipart()
        .args(["run", "--format", "json", "--spec"])
        .arg(&spec)
        .output()
        .unwrap();
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["rows"][1]["set_size"], 24);
    assert!(report.get("wall_time").is_none());
}

#[test]
fn verify_suite_exit_codes() {
    let out = treequipart()
        .args(["verify", "--suite", "group"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().all(|l| l.starts_with("PASS")));
    let bad = treequipart()
        .args(["verify", "--suite", "nonsense"])
        .status()
        .unwrap();
    assert_eq!(bad.code(), Some(2));
}

#[test]
fn psi_maximal_and_decompose_commands() {
    let dir = tempfile::tempdir().unwrap();
    let model = write(
        dir.path(),
        "ising.json",
        r#"{"kind":"ising","d":3,"beta":0.2}"#,
    );
    let psi = treequipart()
        .args(["psi", "--block-n-max", "1", "--model"])
        .arg(&model)
        .output()
        .unwrap();
    assert!(psi.status.success());
    assert!(String::from_utf8(psi.stdout)
        .unwrap()
        .starts_with("kind,n,j,distance"));

    let maximal = treequipart()
        .args([
            "maximal",
            "--replicas",
            "200",
            "--prefix",
            "1213",
            "--model",
        ])
        .arg(&model)
        .output()
        .unwrap();
    assert!(maximal.status.success());

    let decompose = treequipart()
        .args([
            "decompose",
            "--replicas",
            "5",
            "--n-max",
            "2",
            "--format",
            "json",
            "--model",
        ])
        .arg(&model)
        .output()
        .unwrap();
    assert!(decompose.status.success());
    let report: serde_json::Value = serde_json::from_slice(&decompose.stdout).unwrap();
    assert_eq!(report["rows"].as_array().unwrap().len(), 10);
}

#[test]
fn missing_spec_is_an_error() {
    let status = treequipart()
        .args(["run", "--spec", "/nonexistent.json"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}
