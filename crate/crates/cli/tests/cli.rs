use std::path::Path;
use std::process::{Command, Output};

fn fluidcap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fluidcap")).args(args).output().expect("binary runs")
}

fn gen(dir: &Path, extra: &[&str]) -> String {
    let path = dir.join("scenario.json");
    let p = path.to_str().unwrap().to_string();
    let mut args = vec!["gen", "--seed", "3", "--out", &p];
    args.extend_from_slice(extra);
    let out = fluidcap(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    p
}

#[test]
fn gen_then_solve() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = gen(dir.path(), &["--U", "2", "--M", "8"]);
    for alg in ["alg1", "fixed", "es", "siwf-es"] {
        let out = fluidcap(&["solve", "--scenario", &scenario, "--algorithm", alg, "--K", "20"]);
        assert!(out.status.success(), "{alg}: {}", String::from_utf8_lossy(&out.stderr));
        let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        assert_eq!(v["algorithm"], alg);
        assert!(v["capacity_bits"].as_f64().unwrap() > 0.0);
        assert_eq!(v["positions"].as_array().unwrap().len(), 2);
    }
}

#[test]
fn gen_to_stdout_is_deterministic() {
    let a = fluidcap(&["gen", "--seed", "9", "--L", "2"]);
    let b = fluidcap(&["gen", "--seed", "9", "--L", "2"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["M"], 16);
    assert_eq!(v["users"][0]["paths"].as_array().unwrap().len(), 2);
}

#[test]
fn bounds_are_ordered() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = gen(dir.path(), &["--U", "2"]);
    let value = |kind: &str| -> f64 {
        let out = fluidcap(&["bound", "--scenario", &scenario, "--kind", kind]);
        assert!(out.status.success());
        String::from_utf8(out.stdout).unwrap().lines().next().unwrap().parse().unwrap()
    };
    let (ub, approx) = (value("ub"), value("approx"));
    assert!(approx <= ub + 1e-9);
    let out = fluidcap(&["bound", "--scenario", &scenario, "--kind", "c0"]);
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 2);
}

#[test]
fn sweep_writes_csv_and_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("r.csv");
    let o = out_path.to_str().unwrap();
    let args = [
        "sweep", "--param", "M", "--values", "4,8", "--trials", "2", "--algorithms", "alg1,fixed", "--seed", "1",
        "--out", o, "--format", "csv",
    ];
    let first = fluidcap(&args);
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    let a = std::fs::read_to_string(&out_path).unwrap();
    assert!(a.starts_with("seed,M,U,N,L,W_lambda,snr_db,algorithm,capacity_bits,"));
    assert_eq!(a.lines().count(), 1 + 8 + 4);
    assert!(dir.path().join("r.csv.meta.json").exists());
    assert!(fluidcap(&args).status.success());
    assert_eq!(std::fs::read_to_string(&out_path).unwrap(), a);
}

#[test]
fn sweep_json() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("r.json");
    let o = out_path.to_str().unwrap();
    let out = fluidcap(&[
        "sweep", "--param", "snr_db", "--values", "0,10", "--trials", "1", "--algorithms", "fixed", "--out", o,
        "--format", "json",
    ]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 2);
    assert_eq!(v["aggregates"].as_array().unwrap().len(), 2);
    assert_eq!(v["metadata"]["swept_parameter"], "snr_db");
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = gen(dir.path(), &["--N", "2"]);
    let cases: [&[&str]; 5] = [
        &["solve", "--scenario", &scenario, "--algorithm", "alg7"],
        &["solve", "--scenario", &scenario, "--algorithm", "alg1"],
        &["solve", "--scenario", &scenario, "--algorithm", "alg3", "--tau", "-1"],
        &["sweep", "--param", "K", "--values", "1", "--algorithms", "fixed", "--out", "x.csv"],
        &["gen", "--L", "0"],
    ];
    for args in cases {
        assert_eq!(fluidcap(args).status.code(), Some(2), "{args:?}");
    }
    assert_eq!(fluidcap(&["frobnicate"]).status.code(), Some(2));
}
