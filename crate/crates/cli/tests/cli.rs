//! End-to-end runs of the `atsp` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

use atsp_cli::formats::{decode_binary, encode_binary, read_matrix, Format};
use atsp_core::{DenseMatrix, MatrixData};

fn atsp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_atsp"))
        .args(args)
        .env_remove("ATSP_THREADS")
        .output()
        .expect("binary runs")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn assert_clean_failure(out: &Output, code: i32) {
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert_eq!(out.status.code(), Some(code), "stderr: {stderr}");
    assert!(!stderr.contains("panicked"), "{stderr}");
}

fn gen(dir: &TempDir, name: &str, n: usize, d: usize, r: f64, seed: u64) -> PathBuf {
    let path = dir.path().join(name);
    let (n, d, r, seed) = (n.to_string(), d.to_string(), r.to_string(), seed.to_string());
    let out = atsp(&[
        "gen",
        "--n",
        &n,
        "--d",
        &d,
        "--r",
        &r,
        "--seed",
        &seed,
        "-o",
        path_str(&path),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    path
}

fn json(bytes: &[u8]) -> Value {
    serde_json::from_slice(bytes).expect("valid JSON")
}

fn schema() -> jsonschema::Validator {
    let text = include_str!("../schema/report.schema.json");
    jsonschema::validator_for(&serde_json::from_str(text).unwrap()).expect("schema compiles")
}

fn assert_schema_valid(report: &Value) {
    let v = schema();
    let errors: Vec<String> = v
        .iter_errors(report)
        .map(|e| format!("{e} at {}", e.instance_path()))
        .collect();
    assert!(errors.is_empty(), "{errors:?}");
}

fn without_timings(mut v: Value) -> Value {
    v.as_object_mut().unwrap().remove("timings_ms");
    v
}

fn naive_gram_inf(x: &DenseMatrix) -> f64 {
    let (n, d) = x.shape();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let mut s = 0.0;
            for k in 0..d {
                s += x[(i, k)] * x[(j, k)];
            }
            worst = worst.max(s.abs());
        }
    }
    worst
}

fn read_dense(path: &Path) -> DenseMatrix {
    decode_binary(&fs::read(path).unwrap(), path).unwrap()
}

#[test]
fn gen_is_deterministic_and_hits_radius() {
    let dir = TempDir::new().unwrap();
    let a = gen(&dir, "a.bin", 4, 256, 0.05, 7);
    let b = gen(&dir, "b.bin", 4, 256, 0.05, 7);
    let c = gen(&dir, "c.bin", 4, 256, 0.05, 8);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_ne!(fs::read(&a).unwrap(), fs::read(&c).unwrap());
    assert!((naive_gram_inf(&read_dense(&a)) - 0.05).abs() <= 1e-9);

    let csv = dir.path().join("a.csv");
    let out = atsp(&["gen", "--n", "4", "--d", "256", "--seed", "7", "-o", path_str(&csv)]);
    assert!(out.status.success());
    let from_csv = read_matrix(&csv, Format::Csv).unwrap().to_dense();
    assert_eq!(from_csv, read_dense(&a));
}

#[test]
fn gen_rejects_bad_shapes() {
    let dir = TempDir::new().unwrap();
    let p = dir.path().join("x.bin");
    assert_clean_failure(&atsp(&["gen", "--n", "8", "--d", "4", "-o", path_str(&p)]), 1);
    assert_clean_failure(
        &atsp(&["gen", "--n", "2", "--d", "4", "--r", "0.2", "-o", path_str(&p)]),
        1,
    );
    assert_clean_failure(
        &atsp(&["gen", "--n", "2", "--d", "4", "--density", "0", "-o", path_str(&p)]),
        1,
    );
}

#[test]
fn sparsify_randomized_report() {
    let dir = TempDir::new().unwrap();
    let x_path = gen(&dir, "x.bin", 32, 8192, 0.05, 1);
    let y_path = dir.path().join("y.bin");
    let out = atsp(&[
        "sparsify",
        path_str(&x_path),
        "-o",
        path_str(&y_path),
        "--method",
        "rand",
        "--eps",
        "0.5",
        "--delta",
        "0.05",
        "--seed",
        "3",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&out.stdout);
    assert_schema_valid(&report);

    let expected_m = (4.0 * 4.0 * 32.0 * (32.0f64 / 0.05).ln()).ceil() as u64;
    assert_eq!(report["output"]["m"], expected_m);
    assert_eq!(report["attention"]["m"], expected_m);
    assert_eq!(report["input"]["n"], 32);
    assert_eq!(report["input"]["d"], 8192);
    assert_eq!(report["output"]["method"], "randomized");

    let x = read_dense(&x_path);
    let y = read_dense(&y_path);
    assert_eq!(y.shape(), (32, expected_m as usize));
    let idx = report["output"]["selected_indices"].as_array().unwrap();
    let w = report["output"]["weights"].as_array().unwrap();
    for (t, (j, w)) in idx.iter().zip(w).enumerate() {
        let (j, w) = (j.as_u64().unwrap() as usize, w.as_f64().unwrap());
        for i in 0..32 {
            assert!((y[(i, t)] - w * x[(i, j)]).abs() <= 1e-12);
        }
    }
}

#[test]
fn sparsify_deterministic_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let x_path = gen(&dir, "x.bin", 32, 8192, 0.05, 1);
    let run = |name: &str, threads: &str| {
        let y = dir.path().join(name);
        let out = atsp(&[
            "--threads",
            threads,
            "sparsify",
            path_str(&x_path),
            "-o",
            path_str(&y),
            "--method",
            "det",
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        (json(&out.stdout), fs::read(&y).unwrap(), y)
    };
    let (r1, y1, y1_path) = run("y1.bin", "1");
    let (r2, y2, _) = run("y2.bin", "2");
    assert_schema_valid(&r1);
    assert!(r1["output"]["m"].as_u64().unwrap() <= 9 * 4 * 32);
    assert_eq!(r1["attention"]["sandwich_holds"], true);
    assert_eq!(y1, y2);
    assert_eq!(
        without_timings(r1.clone())["output"],
        without_timings(r2.clone())["output"]
    );
    assert_eq!(without_timings(r1)["attention"], without_timings(r2)["attention"]);

    let out = atsp(&["verify", path_str(&x_path), path_str(&y1_path)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rep = json(&out.stdout);
    assert_schema_valid(&rep);
    assert_eq!(rep["attention"]["bounds_applicable"], true);
}

#[test]
fn deterministic_report_identical_across_runs() {
    let dir = TempDir::new().unwrap();
    let x_path = gen(&dir, "x.bin", 8, 512, 0.05, 2);
    let y_path = dir.path().join("y.bin");
    let run = || {
        let out = atsp(&[
            "sparsify",
            path_str(&x_path),
            "-o",
            path_str(&y_path),
            "--method",
            "det",
        ]);
        assert!(out.status.success());
        without_timings(json(&out.stdout))
    };
    assert_eq!(
        serde_json::to_string(&run()).unwrap(),
        serde_json::to_string(&run()).unwrap()
    );
}

#[test]
fn single_row_has_zero_attention_error() {
    let dir = TempDir::new().unwrap();
    let x = dir.path().join("x.csv");
    fs::write(&x, "0.1,0.05,-0.02\n").unwrap();
    for method in ["rand", "det"] {
        let y = dir.path().join(format!("y_{method}.bin"));
        let out = atsp(&["sparsify", path_str(&x), "-o", path_str(&y), "--method", method]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let report = json(&out.stdout);
        assert_eq!(report["attention"]["attention_inf_err"].as_f64(), Some(0.0));
    }
}

#[test]
fn ingests_matrix_market_and_zero_csv() {
    let dir = TempDir::new().unwrap();
    let mm = dir.path().join("x.mtx");
    fs::write(
        &mm,
        "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 0.1\n2 2 0.1\n",
    )
    .unwrap();
    let y = dir.path().join("y.bin");
    let out = atsp(&[
        "sparsify",
        path_str(&mm),
        "--format",
        "mm",
        "-o",
        path_str(&y),
        "--method",
        "det",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&out.stdout);
    assert_eq!(report["input"]["nnz"], 2);
    assert_eq!(report["output"]["m"], 2);

    let csv = dir.path().join("z.csv");
    fs::write(&csv, "0,0\n0,0").unwrap();
    let out = atsp(&["sparsify", path_str(&csv), "-o", path_str(&y)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&out.stdout);
    assert_eq!(report["input"]["nnz"], 0);
    assert_eq!(report["output"]["m"], 1);
    assert_eq!(report["attention"]["attention_inf_err"].as_f64(), Some(0.0));
    assert_eq!(read_dense(&y), DenseMatrix::zeros(2, 1));
}

#[test]
fn binary_round_trip_through_the_binary() {
    let dir = TempDir::new().unwrap();
    let x_path = gen(&dir, "x.bin", 3, 40, 0.05, 9);
    let bytes = fs::read(&x_path).unwrap();
    let decoded = read_matrix(&x_path, Format::Binary).unwrap();
    assert!(matches!(decoded, MatrixData::Dense(_)));
    assert_eq!(encode_binary(&decoded.to_dense()), bytes);
}

#[test]
fn radius_violation_exits_two() {
    let dir = TempDir::new().unwrap();
    let x_path = gen(&dir, "x.bin", 4, 64, 0.05, 4);
    let y = dir.path().join("y.bin");
    let out = atsp(&["sparsify", path_str(&x_path), "-o", path_str(&y), "--r", "0.01"]);
    assert_clean_failure(&out, 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("radius check failed"));
    assert!(!y.exists());

    let out = atsp(&[
        "sparsify",
        path_str(&x_path),
        "-o",
        path_str(&y),
        "--r",
        "0.01",
        "--no-validate-radius",
    ]);
    assert_eq!(out.status.code(), Some(0));

    let big = dir.path().join("big.csv");
    fs::write(&big, "1,0,0\n0,1,0\n").unwrap();
    assert_clean_failure(&atsp(&["sparsify", path_str(&big), "-o", path_str(&y)]), 2);
}

#[test]
fn verify_identity_compression_passes() {
    let dir = TempDir::new().unwrap();
    let x_path = gen(&dir, "x.bin", 6, 50, 0.05, 5);
    let out = atsp(&["verify", path_str(&x_path), path_str(&x_path)]);
    assert_eq!(out.status.code(), Some(0));
    let report = json(&out.stdout);
    assert_schema_valid(&report);
    for key in ["exp_rel_err", "rowsum_rel_err", "attention_inf_err"] {
        assert_eq!(report["attention"][key].as_f64(), Some(0.0), "{key}");
    }
}

#[test]
fn verify_corrupted_output_exit_matches_violations() {
    let dir = TempDir::new().unwrap();
    let x_path = gen(&dir, "x.bin", 8, 512, 0.05, 6);
    let y_path = dir.path().join("y.bin");
    let out = atsp(&[
        "sparsify",
        path_str(&x_path),
        "-o",
        path_str(&y_path),
        "--method",
        "det",
    ]);
    assert!(out.status.success());
    let mut y = read_dense(&y_path);
    let m = y.cols();
    for col in [0, m / 2, m - 1] {
        let mut bad = y.clone();
        for i in 0..bad.rows() {
            bad[(i, col)] = 0.0;
        }
        let bad_path = dir.path().join(format!("bad{col}.bin"));
        fs::write(&bad_path, encode_binary(&bad)).unwrap();
        let report_path = dir.path().join(format!("bad{col}.json"));
        let out = atsp(&[
            "verify",
            path_str(&x_path),
            path_str(&bad_path),
            "--report",
            path_str(&report_path),
        ]);
        let report = json(&fs::read(&report_path).unwrap());
        assert_schema_valid(&report);
        let a = &report["attention"];
        let violated = a["bounds_applicable"] == true
            && (a["entry_bound_ok"] == false
                || a["exp_ok"] == false
                || a["rowsum_ok"] == false
                || a["attention_ok"] == false);
        assert_eq!(out.status.code(), Some(if violated { 3 } else { 0 }));
    }

    // Inflating Y by 3x breaks the sandwich, so no bound applies.
    y.as_mut_slice().iter_mut().for_each(|v| *v *= 3.0);
    let big_path = dir.path().join("big.bin");
    fs::write(&big_path, encode_binary(&y)).unwrap();
    let out = atsp(&["verify", path_str(&x_path), path_str(&big_path)]);
    let report = json(&out.stdout);
    assert_eq!(report["attention"]["sandwich_holds"], false);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn verify_rejects_mismatched_rows() {
    let dir = TempDir::new().unwrap();
    let a = gen(&dir, "a.bin", 3, 40, 0.05, 1);
    let b = gen(&dir, "b.bin", 4, 40, 0.05, 1);
    assert_clean_failure(&atsp(&["verify", path_str(&a), path_str(&b)]), 1);
}

#[test]
fn trials_write_one_output_per_seed() {
    let dir = TempDir::new().unwrap();
    let x_path = gen(&dir, "x.bin", 4, 256, 0.05, 3);
    let y = dir.path().join("y.bin");
    let out = atsp(&["sparsify", path_str(&x_path), "-o", path_str(&y), "--trials", "3"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let reports = json(&out.stdout);
    let reports = reports.as_array().unwrap();
    assert_eq!(reports.len(), 3);
    let seeds: Vec<_> = reports.iter().map(|r| r["output"]["seed"].as_u64().unwrap()).collect();
    assert!(seeds[0] != seeds[1] && seeds[1] != seeds[2]);
    for (t, report) in reports.iter().enumerate() {
        let p = dir.path().join(format!("y.{t}.bin"));
        assert_eq!(read_dense(&p).cols() as u64, report["output"]["m"].as_u64().unwrap());
    }
}

#[test]
fn bench_singleton_and_det_vs_rand() {
    let dir = TempDir::new().unwrap();
    let sweep = dir.path().join("s.toml");
    let csv_path = dir.path().join("out.csv");
    fs::write(&sweep, "n = [4]\nd = [128]\n").unwrap();
    let out = atsp(&["bench", path_str(&sweep), "-o", path_str(&csv_path)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut rd = csv::Reader::from_path(&csv_path).unwrap();
    assert_eq!(rd.records().count(), 1);

    fs::write(&sweep, "n = [16]\nd = [2048]\nmethods = [\"rand\", \"det\"]\n").unwrap();
    let out = atsp(&["bench", path_str(&sweep), "-o", path_str(&csv_path)]);
    assert!(out.status.success());
    let mut rd = csv::Reader::from_path(&csv_path).unwrap();
    let headers = rd.headers().unwrap().clone();
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let (method_col, m_col, status_col) = (col("method"), col("m"), col("status"));
    let mut m = std::collections::HashMap::new();
    for rec in rd.records() {
        let rec = rec.unwrap();
        assert_eq!(&rec[status_col], "ok");
        m.insert(rec[method_col].to_string(), rec[m_col].parse::<usize>().unwrap());
    }
    assert!(m["det"] <= m["rand"], "{m:?}");
}

#[test]
fn bench_reports_bad_sweeps() {
    let dir = TempDir::new().unwrap();
    let sweep = dir.path().join("s.toml");
    let csv_path = dir.path().join("out.csv");
    fs::write(&sweep, "n = [4]\nd = [128]\nunknown = 3\n").unwrap();
    assert_clean_failure(&atsp(&["bench", path_str(&sweep), "-o", path_str(&csv_path)]), 1);

    // An infeasible cell is recorded, not fatal.
    fs::write(&sweep, "n = [8]\nd = [4]\n").unwrap();
    let out = atsp(&["bench", path_str(&sweep), "-o", path_str(&csv_path)]);
    assert!(out.status.success());
    let text = fs::read_to_string(&csv_path).unwrap();
    assert!(text.contains("error"), "{text}");
}

#[test]
fn leverage_scores_sum_to_rank() {
    let dir = TempDir::new().unwrap();
    let x_path = gen(&dir, "x.bin", 5, 60, 0.05, 2);
    let out = atsp(&["leverage", path_str(&x_path), "--exact"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let scores: Vec<f64> = text
        .lines()
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(scores.len(), 60);
    assert!((scores.iter().sum::<f64>() - 5.0).abs() < 1e-8);

    let out = atsp(&["leverage", path_str(&x_path), "--seed", "4"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 60);
}

#[test]
fn malformed_inputs_fail_cleanly() {
    let dir = TempDir::new().unwrap();
    let good = gen(&dir, "good.bin", 2, 8, 0.05, 1);
    let bytes = fs::read(&good).unwrap();
    let cases: Vec<(&str, Vec<u8>)> = vec![
        ("empty.bin", vec![]),
        ("magic.bin", b"XXXX\x01\0\0\0".to_vec()),
        ("short.bin", bytes[..bytes.len() - 3].to_vec()),
        ("long.bin", [bytes.clone(), vec![0u8; 8]].concat()),
        ("huge.bin", {
            let mut b = bytes[..24].to_vec();
            b[8..16].copy_from_slice(&u64::MAX.to_le_bytes());
            b
        }),
        ("ragged.csv", b"1,2\n3\n".to_vec()),
        ("word.csv", b"0.1,abc\n".to_vec()),
        ("nan.csv", b"0.1,NaN\n".to_vec()),
        ("empty.csv", b"".to_vec()),
        (
            "header.mtx",
            b"%%MatrixMarket matrix array real general\n2 2\n".to_vec(),
        ),
        (
            "range.mtx",
            b"%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 0.5\n".to_vec(),
        ),
        (
            "count.mtx",
            b"%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 0.5\n".to_vec(),
        ),
        ("utf8.csv", vec![0xff, 0xfe, b',', b'1']),
    ];
    let y = dir.path().join("y.bin");
    for (name, content) in cases {
        let p = dir.path().join(name);
        fs::write(&p, content).unwrap();
        let out = atsp(&["sparsify", path_str(&p), "-o", path_str(&y)]);
        assert_clean_failure(&out, 1);
        assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"), "{name}");
        let out = atsp(&["verify", path_str(&good), path_str(&p)]);
        assert_clean_failure(&out, 1);
    }
    assert_clean_failure(&atsp(&["sparsify", "/nonexistent/x.bin", "-o", path_str(&y)]), 1);
}

#[test]
fn usage_errors_exit_one() {
    assert_clean_failure(&atsp(&[]), 1);
    assert_clean_failure(&atsp(&["frobnicate"]), 1);
    assert_clean_failure(&atsp(&["sparsify", "x.bin", "-o", "y.bin", "--method", "qr"]), 1);
    assert_clean_failure(&atsp(&["sparsify", "x.bin", "-o", "y.bin", "--eps", "1.5"]), 1);
    assert_eq!(atsp(&["--help"]).status.code(), Some(0));
    assert_eq!(atsp(&["--version"]).status.code(), Some(0));

    let dir = TempDir::new().unwrap();
    let x = gen(&dir, "x.bin", 2, 8, 0.05, 1);
    let y = dir.path().join("y.bin");
    for (flag, value) in [
        ("--eps", "0"),
        ("--delta", "0.5"),
        ("--eps-sigma", "1"),
        ("--c-bss", "1"),
    ] {
        let out = atsp(&[
            "sparsify",
            path_str(&x),
            "-o",
            path_str(&y),
            "--method",
            "det",
            flag,
            value,
        ]);
        assert_clean_failure(&out, 1);
    }
}

#[test]
fn thread_count_from_environment() {
    let dir = TempDir::new().unwrap();
    let x = gen(&dir, "x.bin", 2, 8, 0.05, 1);
    let y = dir.path().join("y.bin");
    let out = Command::new(env!("CARGO_BIN_EXE_atsp"))
        .args(["sparsify", path_str(&x), "-o", path_str(&y)])
        .env("ATSP_THREADS", "0")
        .output()
        .unwrap();
    assert_clean_failure(&out, 1);
    let out = Command::new(env!("CARGO_BIN_EXE_atsp"))
        .args(["sparsify", path_str(&x), "-o", path_str(&y)])
        .env("ATSP_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
}
