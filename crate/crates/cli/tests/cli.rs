use std::fs;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_harmonic-lab"))
}

const LINE: &str = r#"{"metric":{"kind":"euclidean","dim":1,"p":2},
    "locations":[{"coords":[0]},{"coords":[1]},{"coords":[4]}],
    "prediction":{"coords":[1]},"delta":1.0}"#;

#[test]
fn paper_examples_pass() {
    let out = bin().arg("paper-examples").output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn find_pne_and_verify_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("inst.json");
    fs::write(&inst, LINE).unwrap();

    let out = bin().arg("find-pne").arg(&inst).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let eq = &v["equilibria"].as_array().unwrap()[0];
    assert!(v["poa"].as_f64().unwrap() >= 1.0);

    let prof = dir.path().join("y.json");
    fs::write(&prof, serde_json::json!({ "y": eq["y"] }).to_string()).unwrap();
    let out = bin().arg("verify").arg(&inst).arg(&prof).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));

    let out = bin().arg("opt").arg(&inst).output().unwrap();
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["opt"]["value"].as_f64().unwrap() - 4.0).abs() < 1e-9);
}

#[test]
fn sweep_is_reproducible_and_bad_input_exits_two() {
    let run = || {
        bin()
            .args(["sweep", "robustness", "--space", "circle", "--n", "3,4", "--trials", "4", "--seed", "9"])
            .output()
            .unwrap()
    };
    let a = run();
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, run().stdout);

    let out = bin().args(["opt", "/nonexistent.json"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}
