use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn colorbal(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_colorbal"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn report(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is one JSON report")
}

#[test]
fn gen_balance_verify_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("inst.json");
    let rep = dir.path().join("report.json");
    let gen = colorbal(&[
        "gen",
        "--kind",
        "dirichlet-mixture",
        "--d",
        "6",
        "--n",
        "12",
        "--seed",
        "11",
        "--out",
        path(&inst),
        "--norm",
        "linf",
    ]);
    assert!(
        gen.status.success(),
        "{}",
        String::from_utf8_lossy(&gen.stderr)
    );

    let out = colorbal(&[
        "balance",
        "--input",
        path(&inst),
        "--norm",
        "linf",
        "--mode",
        "practical",
        "--seed",
        "11",
        "--out",
        path(&rep),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let r = report(&out);
    assert!(r["achieved"].as_f64().unwrap() <= r["bound"].as_f64().unwrap());
    assert_eq!(r["mode"], "practical");
    assert_eq!(fs::read(&rep).unwrap(), out.stdout);

    let v = colorbal(&["verify", "--input", path(&inst), "--selection", path(&rep)]);
    assert!(v.status.success());
    let v = report(&v);
    assert_eq!(v["achieved"], r["achieved"]);
    assert!(v["oracle"].as_f64().unwrap() <= v["achieved"].as_f64().unwrap());
}

#[test]
fn balance_output_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("inst.json");
    assert!(colorbal(&[
        "gen",
        "--kind",
        "unit-sphere",
        "--d",
        "4",
        "--n",
        "9",
        "--seed",
        "3",
        "--out",
        path(&inst),
        "--norm",
        "linf"
    ])
    .status
    .success());
    let args = [
        "balance",
        "--input",
        path(&inst),
        "--norm",
        "linf",
        "--mode",
        "practical",
        "--seed",
        "5",
    ];
    let first = colorbal(&args);
    for _ in 0..3 {
        assert_eq!(colorbal(&args).stdout, first.stdout);
    }
}

#[test]
fn sharp_instance_and_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("sharp.json");
    assert!(colorbal(&[
        "gen",
        "--kind",
        "sharp-signed",
        "--d",
        "4",
        "--n",
        "4",
        "--seed",
        "0",
        "--out",
        path(&inst)
    ])
    .status
    .success());
    let r = report(&colorbal(&[
        "balance",
        "--input",
        path(&inst),
        "--norm",
        "l2",
        "--seed",
        "0",
    ]));
    assert_eq!(r["achieved"], 2.0);
    let o = report(&colorbal(&["oracle", "--input", path(&inst)]));
    assert_eq!(o["best_value"], 2.0);
    assert_eq!(o["enumerated_count"], 16);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let infeasible = dir.path().join("infeasible.json");
    fs::write(
        &infeasible,
        r#"{"d": 1, "norm": "l2", "families": [[[1.0], [0.5]]]}"#,
    )
    .unwrap();
    assert_eq!(
        colorbal(&["balance", "--input", path(&infeasible)])
            .status
            .code(),
        Some(2)
    );

    let invalid = dir.path().join("invalid.json");
    fs::write(&invalid, r#"{"d": 1, "norm": "l2", "families": [[[2.0]]]}"#).unwrap();
    let out = colorbal(&["balance", "--input", path(&invalid)]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("norm exceeds 1"));

    let garbage = dir.path().join("garbage.json");
    fs::write(&garbage, "not json").unwrap();
    assert_eq!(
        colorbal(&["balance", "--input", path(&garbage)])
            .status
            .code(),
        Some(4)
    );

    assert_ne!(
        colorbal(&["balance", "--input", path(&invalid), "--mode", "fast"])
            .status
            .code(),
        Some(0)
    );
}

#[test]
fn bench_writes_one_row_per_spec() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("bench.json");
    let out = dir.path().join("bench.csv");
    let specs: Vec<serde_json::Value> = [2, 4, 8]
        .iter()
        .map(|&d| serde_json::json!({"kind": "paired-antipodal", "d": d, "n": 2 * d, "norm": "linf", "seed": d}))
        .chain([serde_json::json!({"kind": "unit-sphere", "d": 3, "n": 0, "norm": "l2"})])
        .collect();
    fs::write(
        &spec,
        serde_json::json!({"mode": "practical", "specs": specs}).to_string(),
    )
    .unwrap();
    let run = colorbal(&["bench", "--spec", path(&spec), "--out", path(&out)]);
    assert!(
        run.status.success(),
        "{}",
        String::from_utf8_lossy(&run.stderr)
    );

    let mut reader = csv::Reader::from_path(&out).unwrap();
    let headers = reader.headers().unwrap().clone();
    let status = headers.iter().position(|h| h == "status").unwrap();
    let ratio = headers.iter().position(|h| h == "ratio").unwrap();
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 4);
    for row in &rows[..3] {
        assert_eq!(&row[status], "ok");
        assert!(row[ratio].parse::<f64>().unwrap() < 1.0);
    }
    assert!(rows[3][status].contains("at least one family"));
}
