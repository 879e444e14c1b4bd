use std::path::Path;
use std::process::{Command, Output};

fn kel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kel")).args(args).output().unwrap()
}

fn kel_threads(threads: &str, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kel"))
        .env("KEL_THREADS", threads)
        .args(args)
        .output()
        .unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("config.json");
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(kel(&[]).status.code(), Some(1));
    assert_eq!(kel(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(kel(&["energy", "--functional", "nope", "--curve", "{}"]).status.code(), Some(1));
    assert_eq!(kel(&["--help"]).status.code(), Some(0));
}

#[test]
fn oracle_reports_four() {
    let out = kel(&["oracle", "circle-energy"]);
    assert!(out.status.success());
    let v = json(&out)["value"].as_f64().unwrap();
    assert!((v - 4.0).abs() < 1e-10, "{v}");
}

#[test]
fn circle_energy_on_the_grid() {
    let out = kel(&[
        "energy",
        "--functional",
        "ohara",
        "--curve",
        r#"{"kind":"circle","length":6.283185307179586}"#,
        "-N",
        "512",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out)["value"].as_f64().unwrap();
    assert!((v - 4.0).abs() < 1e-3, "{v}");
}

#[test]
fn random_energy_is_reproducible() {
    let args = [
        "energy",
        "--functional",
        "ohara-random",
        "--curve",
        r#"{"kind":"circle","length":1.0}"#,
        "--n",
        "256",
        "--seed",
        "5",
    ];
    let a = json(&kel(&args));
    let b = json(&kel(&args));
    assert_eq!(a["value"], b["value"]);
    assert_eq!(a["seed"], 5);
    assert_eq!(kel(&args[..5]).status.code(), Some(1), "missing --n");
}

#[test]
fn polygon_functionals() {
    let square = r#"{"kind":"regular_polygon","m":4}"#;
    let kk = json(&kel(&["energy", "--functional", "kim-kusner", "--curve", square]));
    assert!((kk["value"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    let simon = json(&kel(&["energy", "--functional", "simon", "--curve", square]));
    assert_eq!(simon["value"].as_f64().unwrap(), 4.0);
    let circle = r#"{"kind":"circle"}"#;
    assert_eq!(kel(&["energy", "--functional", "cos", "--curve", circle]).status.code(), Some(1));
}

#[test]
fn experiment_writes_csv_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let out = kel(&["experiment", "ngon-min", "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(out_dir.join("ngon-min.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("experiment,param,seed,stat,value,runtime_s"));
    let sidecar: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("ngon-min.json")).unwrap()).unwrap();
    assert_eq!(sidecar["passed"], true);
    assert!(sidecar["checks"].as_array().unwrap().len() >= 4);
}

#[test]
fn experiment_errors_and_failures() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let out_arg = out_dir.to_str().unwrap();
    assert_eq!(kel(&["experiment", "nonsense", "--out", out_arg]).status.code(), Some(1));

    let bad = write_config(dir.path(), r#"{"seeds": [], "unknown_field": 1}"#);
    assert_eq!(kel(&["experiment", "mc-convergence", "--config", &bad, "--out", out_arg]).status.code(), Some(1));

    // a constant offset never converges, so the energy stage is skipped
    let offset = write_config(
        dir.path(),
        r#"{"n_grid": [64, 128, 256, 512], "seeds": [0, 1, 2], "sequence_offset": {"kind": "constant", "value": 0.1}}"#,
    );
    let out = kel(&["experiment", "gamma-sequence", "--config", &offset, "--out", out_arg]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    let sidecar: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("gamma-sequence.json")).unwrap()).unwrap();
    assert!(sidecar["aborted"].is_string());
    assert_eq!(sidecar["passed"], false);
}

#[test]
fn thread_count_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        r#"{"density": {"kind": "cosine", "c": 0.5}, "n_grid": [128, 256, 512], "seeds": [0, 1, 2, 3, 4, 5]}"#,
    );
    let mut csvs = Vec::new();
    for threads in ["1", "4"] {
        let out_dir = dir.path().join(format!("t{threads}"));
        for name in ["mc-convergence", "transport-rates"] {
            let out = kel_threads(threads, &["experiment", name, "--config", &config, "--out", out_dir.to_str().unwrap()]);
            assert!(out.status.code().is_some_and(|c| c != 1), "{}", String::from_utf8_lossy(&out.stderr));
            csvs.push(std::fs::read(out_dir.join(format!("{name}.csv"))).unwrap());
        }
    }
    assert_eq!(csvs[0], csvs[2]);
    assert_eq!(csvs[1], csvs[3]);
    assert_eq!(kel_threads("0", &["oracle", "circle-energy"]).status.code(), Some(1));
}
