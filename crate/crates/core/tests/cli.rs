//! End-to-end runs of the `kikuchi` binary: file formats, JSON reports, and
//! exit codes.

use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_kikuchi"))
}

fn run_json(args: &[&str]) -> serde_json::Value {
    let out = bin().args(args).output().expect("binary runs");
    assert!(
        out.status.success(),
        "command {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    serde_json::from_str(text.lines().next().expect("one JSON line")).expect("valid JSON")
}

#[test]
fn generate_detect_recover_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("inst.kikt");
    let inst_s = inst.to_str().unwrap();

    let gen = run_json(&[
        "generate",
        "--kind",
        "spiked",
        "--n",
        "10",
        "--p",
        "4",
        "--lambda",
        "1.5",
        "--seed",
        "11",
        "--with-spike",
        "--out",
        inst_s,
    ]);
    assert_eq!(gen["entries"], 210);

    let det = run_json(&["detect", "--input", inst_s, "--ell", "2"]);
    assert_eq!(det["verdict"], "planted");
    assert_eq!(det["tested_lambda"], 1.5);

    let rec = run_json(&["recover", "--input", inst_s, "--ell", "2"]);
    let corr = rec["corr_with_truth"].as_f64().unwrap();
    assert!(corr > 0.9, "corr {corr}");
    assert_eq!(rec["x_hat"].as_array().unwrap().len(), 10);
}

#[test]
fn refute_and_certify_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let formula = dir.path().join("f.xor");
    let formula_s = formula.to_str().unwrap();
    run_json(&[
        "generate", "--kind", "xor", "--n", "12", "--k", "2", "--m", "300", "--seed", "4",
        "--out", formula_s,
    ]);
    let ref_out = run_json(&[
        "refute-xor",
        "--input",
        formula_s,
        "--ell",
        "1",
        "--beta",
        "0.9",
    ]);
    assert!(ref_out["bound"].as_f64().unwrap() >= 150.0);
    assert_eq!(ref_out["m"], 300);

    let tensor = dir.path().join("y.kikd");
    let tensor_s = tensor.to_str().unwrap();
    run_json(&[
        "generate", "--kind", "pm1", "--n", "6", "--p", "3", "--seed", "2", "--out", tensor_s,
    ]);
    let cert = run_json(&["certify-odd", "--input", tensor_s, "--ell", "2"]);
    assert!(cert["bound"].as_f64().unwrap() >= (6.0f64).sqrt());
    assert_eq!(cert["lifted_dim"], 36);
}

#[test]
fn spectrum_csv() {
    let out = bin()
        .args(["spectrum", "--n", "6", "--ell", "2", "--p", "4"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text, "m,mu,dim\n0,6,1\n1,-3,5\n2,1,9\n");
}

#[test]
fn sweep_runs_from_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    let csv = dir.path().join("out.csv");
    std::fs::write(
        &config,
        format!(
            r#"{{"schema": 1, "task": "detect",
                "grid": {{"n": [10], "p": [4], "ell": [2], "lambda": [0.0, 2.0]}},
                "trials": 2, "master_seed": 5, "test_lambda": 2.0,
                "out": "{}"}}"#,
            csv.to_str().unwrap().replace('\\', "/")
        ),
    )
    .unwrap();
    let out = bin()
        .args(["sweep", "--config", config.to_str().unwrap(), "--summary"])
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("# config-hash: "));
    assert_eq!(text.lines().count(), 2 + 4); // comment + header + 4 rows
    let summary = String::from_utf8(out.stdout).unwrap();
    assert_eq!(summary.lines().count(), 2); // one aggregate per cell
}

#[test]
fn exit_codes() {
    // Invalid parameters (ell out of range) exit 2.
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("i.kikt");
    run_json(&[
        "generate", "--kind", "spiked", "--n", "8", "--p", "4", "--seed", "1", "--out",
        inst.to_str().unwrap(),
    ]);
    let bad_ell = bin()
        .args(["detect", "--input", inst.to_str().unwrap(), "--ell", "7"])
        .output()
        .unwrap();
    assert_eq!(bad_ell.status.code(), Some(2));

    // Capacity violations exit 3.
    let huge = bin()
        .args([
            "generate", "--kind", "pm1", "--n", "60", "--p", "5", "--seed", "1", "--out",
            dir.path().join("x.kikd").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(huge.status.code(), Some(3));

    // Malformed input files exit 2.
    let junk = dir.path().join("junk.kikt");
    std::fs::write(&junk, b"not a tensor").unwrap();
    let bad_file = bin()
        .args(["detect", "--input", junk.to_str().unwrap(), "--ell", "2"])
        .output()
        .unwrap();
    assert_eq!(bad_file.status.code(), Some(2));
}
