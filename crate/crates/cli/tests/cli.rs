use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn qrbf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qrbf"))
        .args(args)
        .env_remove("QRBF_DATA_SEED")
        .env_remove("QRBF_CENTRE_SEED")
        .env_remove("QRBF_ENTANGLER_SEED")
        .env_remove("QRBF_SPLIT_SEED")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = qrbf(args);
    assert!(
        out.status.success(),
        "qrbf {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).expect("utf-8 output")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn gen_writes_dataset_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("spiral.csv");
    ok(&["gen", "--dataset", "spiral", "--count", "10", "--seed", "4", "--out", path(&out)]);
    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x_1,x_2,f_1,f_2,f_3,label"));
    assert_eq!(lines.count(), 30);
    assert!(!text.contains('\r'));

    let sine = ok(&["gen", "--dataset", "sine", "--count", "3"]);
    assert_eq!(sine.lines().count(), 4);
}

#[test]
fn fit_then_predict_matches_eval_predictions() {
    let tmp = tempfile::tempdir().unwrap();
    let fit_dir = tmp.path().join("fit");
    let eval_dir = tmp.path().join("eval");
    let common = ["--dataset", "spiral", "--n-centres", "20", "--data-seed", "5"];
    let mut fit_args = vec!["fit", "--out-dir", path(&fit_dir)];
    fit_args.extend(common);
    ok(&fit_args);
    let mut eval_args = vec!["eval", "--out-dir", path(&eval_dir)];
    eval_args.extend(common);
    ok(&eval_args);

    let predicted = tmp.path().join("pred.csv");
    ok(&[
        "predict",
        "--model",
        path(&fit_dir.join("model.json")),
        "--input",
        path(&fit_dir.join("test.csv")),
        "--out",
        path(&predicted),
    ]);
    assert_eq!(
        fs::read_to_string(&predicted).unwrap(),
        fs::read_to_string(eval_dir.join("predictions.csv")).unwrap()
    );
}

#[test]
fn config_file_flags_and_set_layer_in_order() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.json");
    fs::write(&cfg, r#"{"dataset": "sine", "n_centres": 3, "seeds": {"data": 9}}"#).unwrap();
    let metrics = ok(&["eval", "--config", path(&cfg)]);
    let v: serde_json::Value = serde_json::from_str(&metrics).unwrap();
    assert_eq!(v["n_centres"], 3);
    assert_eq!(v["seeds"]["data"], 9);

    let v: serde_json::Value = serde_json::from_str(&ok(&[
        "eval", "--config", path(&cfg), "--n-centres", "4", "--set", "n_centres=5", "--set", "seeds.split=11",
    ]))
    .unwrap();
    assert_eq!(v["n_centres"], 5);
    assert_eq!(v["seeds"]["split"], 11);
    assert_eq!(v["seeds"]["data"], 9);
}

#[test]
fn seeds_come_from_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_qrbf"))
        .args(["eval", "--dataset", "sine"])
        .env("QRBF_DATA_SEED", "21")
        .env("QRBF_ENTANGLER_SEED", "8")
        .output()
        .unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["seeds"]["data"], 21);
    assert_eq!(v["seeds"]["entangler"], 8);
}

#[test]
fn eval_is_byte_reproducible() {
    let args = ["eval", "--dataset", "logistic", "--n-centres", "5", "--data-seed", "2"];
    assert_eq!(ok(&args), ok(&args));
}

#[test]
fn grid_and_sweep_write_csv() {
    let tmp = tempfile::tempdir().unwrap();
    ok(&["fit", "--dataset", "spiral", "--n-centres", "15", "--out-dir", path(tmp.path())]);
    let grid = ok(&[
        "grid",
        "--model",
        path(&tmp.path().join("model.json")),
        "--bounds",
        "-10,10,-10,10",
        "--resolution",
        "4",
    ]);
    assert_eq!(grid.lines().count(), 17);
    assert_eq!(grid.lines().next(), Some("x,y,predicted_class"));

    let sweep = ok(&["sweep", "--dataset", "spiral", "--n-centres", "10", "--ratios", "0.3,0.7", "--seeds", "0,1"]);
    assert_eq!(sweep.lines().count(), 3);
}

#[test]
fn suite_prints_table() {
    let table = ok(&["suite", "--preset", "table1"]);
    assert!(table.lines().count() > 4);
    assert!(table.contains("reference"));
}

#[test]
fn errors_have_codes_and_exit_status() {
    let out = qrbf(&["eval", "--set", "no_such_key=1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error[usage]"));

    let out = qrbf(&["eval", "--dataset", "spiral", "--split-ratio", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error[configuration]"));

    let out = qrbf(&["predict", "--model", "/nonexistent/model.json", "--input", "x.csv"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error[io]"));

    let out = qrbf(&["eval", "--dataset", "iris"]);
    assert_eq!(out.status.code(), Some(2));
}
