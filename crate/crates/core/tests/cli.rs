use std::path::Path;
use std::process::{Command, Output};

use polyveil::cli::{emit_table, write_csv};
use polyveil::dp::Table;
use polyveil::linalg::{BitVector, Permutation};
use polyveil::protocol::{client_mask_full, ClientRandomness, ProtocolParams, Variant};
use serde_json::Value;
use tempfile::tempdir;

const FIXTURE: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/worked_example.json");

fn polyveil(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polyveil")).args(args).output().unwrap()
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_str(&stdout(out)).unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines().map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn help_lists_every_subcommand() {
    let text = stdout(&polyveil(&["--help"]));
    for cmd in ["run", "attack", "oracle", "dp", "verify"] {
        assert!(text.lines().any(|l| l.trim_start().starts_with(cmd)), "missing {cmd}");
    }
    assert!(polyveil(&["--version"]).status.success());
}

#[test]
fn worked_run_recovers_four() {
    let out = polyveil(&["--quiet", "run", "--variant", "full", "--n", "2", "--k", "3", "--alpha-star", "0.3", "--config", FIXTURE]);
    let v = json(&out);
    assert_eq!(v["recovered_s"], 4);
    assert_eq!(v["ground_truth_s"], 4);
    assert_eq!(v["params"]["K"], 2);
}

#[test]
fn run_writes_to_out_file() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("t.json");
    let out = polyveil(&[
        "--quiet", "--seed", "5", "--out", path.to_str().unwrap(), "run", "--variant", "two-layer-compressed", "--n", "8",
        "--k", "4", "--K", "3", "--alpha-star", "0.03",
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["recovered_s"], v["ground_truth_s"]);
}

#[test]
fn output_is_byte_identical_across_reruns() {
    let args = ["--quiet", "--seed", "9", "run", "--variant", "two-layer", "--n", "4", "--k", "3", "--K", "3", "--alpha-star", "0.1"];
    assert_eq!(stdout(&polyveil(&args)), stdout(&polyveil(&args)));
    let args = ["--quiet", "--seed", "9", "attack", "gaussian-map", "--n", "4", "--K", "3", "--alpha-star", "0.1", "--trials", "5"];
    assert_eq!(stdout(&polyveil(&args)), stdout(&polyveil(&args)));
}

#[test]
fn usage_errors_exit_two() {
    let out = polyveil(&["run", "--variant", "full", "--k", "3"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error[usage]"));

    let dir = tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{").unwrap();
    let out = polyveil(&["oracle", "permanent", "--input", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    let out = polyveil(&["dp", "--framework", "be", "--n", "100", "--K", "10", "--alpha-star", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn dp_fdp_reference_row() {
    let rows = csv_rows(&stdout(&polyveil(&["--quiet", "dp", "--framework", "fdp", "--n", "100", "--K", "9"])));
    assert_eq!(rows[0], ["K", "mu", "delta", "epsilon"]);
    let eps: f64 = rows[1][3].parse().unwrap();
    assert!((eps - 7.8).abs() < 0.05);
}

#[test]
fn dp_shuffle_grid_has_three_rows() {
    let text = stdout(&polyveil(&[
        "--quiet", "dp", "--framework", "shuffle", "--n", "100", "--K", "9", "--epsilon0", "8", "--grid", "100,1000,10000",
    ]));
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 4);
    let eps: Vec<f64> = rows[1..].iter().map(|r| r[3].parse().unwrap()).collect();
    for (got, want) in eps.iter().zip([0.885, 0.372, 0.133]) {
        assert!((got - want).abs() < 0.005);
    }
    assert!(!text.contains('\r'));
}

#[test]
fn attack_csv_columns() {
    let rows = csv_rows(&stdout(&polyveil(&[
        "--quiet", "--seed", "3", "attack", "deshuffle", "--n", "8", "--k", "5", "--K", "2", "--alpha-star", "0.03125", "--trials", "10",
    ])));
    assert_eq!(rows[0], ["trial", "success", "score", "passing_assignments", "mode"]);
    assert_eq!(rows.len(), 11);
    assert!(rows[1..].iter().all(|r| (r[1] == "1") == (r[3] == "1")));

    let rows = csv_rows(&stdout(&polyveil(&[
        "--quiet", "--seed", "3", "attack", "mc-density", "--n", "2", "--K", "2", "--alpha-star", "0.3", "--trials", "2", "--samples", "100",
    ])));
    assert_eq!(rows[0], ["trial", "success", "score", "hit_count", "samples", "wilson_low", "wilson_high"]);
}

#[test]
fn oracle_permanent_and_census() {
    let dir = tempdir().unwrap();
    let block = dir.path().join("block.json");
    std::fs::write(&block, r#"{"m":4,"rows":[[1,1,0,0],[1,1,0,0],[0,0,1,1],[0,0,1,1]]}"#).unwrap();
    let v = json(&polyveil(&["--quiet", "oracle", "permanent", "--input", block.to_str().unwrap()]));
    assert_eq!(v["permanent"], 4.0);
    let v = json(&polyveil(&["--quiet", "oracle", "support", "--input", block.to_str().unwrap()]));
    assert_eq!(v.to_string().matches("support").count() >= 1, true);

    let decoys = vec![
        Permutation::from_one_based(&[3, 4, 1, 2]).unwrap(),
        Permutation::from_one_based(&[4, 3, 2, 1]).unwrap(),
    ];
    let r = ClientRandomness::injected(2, 0.3, decoys, vec![0.4, 0.3]).unwrap();
    let params = ProtocolParams::new(Variant::TwoLayerFull, 2, 1, 2, 0.3);
    let d = client_mask_full(0, &BitVector::from_u8(&[1, 0]).unwrap(), &params, &r).unwrap().d.unwrap();
    let path = dir.path().join("d.json");
    std::fs::write(&path, serde_json::to_string(&d).unwrap()).unwrap();
    let v = json(&polyveil(&["--quiet", "oracle", "census", "--input", path.to_str().unwrap(), "--alpha-star", "0.3"]));
    let text = v.to_string();
    assert!(text.contains("count"), "{text}");
}

#[test]
fn verify_kinds_report_pass() {
    let v = json(&polyveil(&["--quiet", "--seed", "2", "verify", "concentration", "--n", "10", "--K", "5,20", "--trials", "2000"]));
    assert_eq!(v["check"], "concentration");
    assert_eq!(v["pass"], true);
    for kind in ["simulator", "indistinguishability"] {
        let v = json(&polyveil(&[
            "--quiet", "--seed", "2", "verify", kind, "--n", "4", "--k", "4", "--K", "5", "--alpha-star", "0.2", "--trials", "2000",
        ]));
        assert_eq!(v["check"], kind);
        assert_eq!(v["pass"], true, "{v}");
    }
}

#[test]
fn emit_table_writes_header_for_empty_rows() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("empty.csv");
    let table = Table { headers: vec!["K".into(), "epsilon".into()], rows: vec![] };
    emit_table(&table, Some(Path::new(&path))).unwrap();
    assert_eq!(std::fs::read_to_string(&path).unwrap(), "K,epsilon\n");

    let mut buf = Vec::new();
    write_csv(&mut buf, &["a".to_string(), "b".to_string()], &[vec!["1".to_string(), "x".to_string()]]).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap(), "a,b\n1,x\n");
}
