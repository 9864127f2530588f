use std::fs;
use std::path::PathBuf;

use qrbf::evaluation::read_predictions_csv;
use qrbf::experiment::{run_suite, DatasetKind, ModelKind, Preset};
use qrbf::{run_experiment, Dataset, ExperimentConfig, RbfModel};

fn reload_and_compare(cfg: &ExperimentConfig) {
    let dir = cfg.output_dir.clone().unwrap();
    run_experiment(cfg).unwrap();
    let model = RbfModel::load(dir.join("model.json")).unwrap();
    let test = Dataset::load_csv(dir.join("test.csv")).unwrap();
    let expected = read_predictions_csv(fs::File::open(dir.join("predictions.csv")).unwrap()).unwrap();
    let got = model.predict(&test.inputs).unwrap();
    assert_eq!(got.shape(), expected.shape());
    for (a, b) in got.iter().zip(expected.iter()) {
        assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
    }
}

#[test]
fn saved_model_reproduces_predictions() {
    let tmp = tempfile::tempdir().unwrap();
    for (i, (dataset, model)) in [
        (DatasetKind::Sine, ModelKind::Qrbf),
        (DatasetKind::Logistic, ModelKind::Crbf),
        (DatasetKind::Spiral, ModelKind::Qrbf),
        (DatasetKind::Spiral, ModelKind::Crbf),
    ]
    .into_iter()
    .enumerate()
    {
        let mut cfg = ExperimentConfig::new(dataset, model, 10).with_seed_set(i as u64);
        cfg.output_dir = Some(tmp.path().join(i.to_string()));
        reload_and_compare(&cfg);
    }
}

#[test]
fn classifier_artifacts_include_grid() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::new(DatasetKind::Spiral, ModelKind::Qrbf, 20);
    cfg.grid_resolution = 7;
    cfg.output_dir = Some(tmp.path().to_path_buf());
    run_experiment(&cfg).unwrap();
    for name in ["model.json", "train.csv", "test.csv", "predictions.csv", "metrics.json", "grid.csv"] {
        let text = fs::read_to_string(tmp.path().join(name)).unwrap();
        assert!(!text.contains('\r'), "{name} has CR line endings");
    }
    let grid = fs::read_to_string(tmp.path().join("grid.csv")).unwrap();
    let mut lines = grid.lines();
    assert_eq!(lines.next(), Some("x,y,predicted_class"));
    assert_eq!(lines.count(), 49);
    let metrics: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("metrics.json")).unwrap()).unwrap();
    assert_eq!(metrics["dataset"], "spiral");
    assert!(metrics["report"]["accuracy"].as_f64().unwrap() > 0.5);
}

#[test]
fn iris_run_writes_confusion_matrix() {
    let mut cfg = ExperimentConfig::new(DatasetKind::Iris, ModelKind::Qrbf, 50);
    cfg.iris_path = Some(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/iris.csv"));
    let tmp = tempfile::tempdir().unwrap();
    cfg.output_dir = Some(tmp.path().to_path_buf());
    let outcome = run_experiment(&cfg).unwrap();
    let confusion = outcome.report.confusion.unwrap();
    assert_eq!(confusion.len(), 3);
    assert_eq!(confusion.iter().flatten().sum::<usize>(), 45);
    // four features: no decision-boundary grid
    assert!(!tmp.path().join("grid.csv").exists());
}

#[test]
fn table2_suite_lists_measured_and_reference_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let report = run_suite(Preset::Table2, &ExperimentConfig::default(), Some(tmp.path())).unwrap();
    let mut buf = Vec::new();
    report.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.contains("measured"));
    assert!(text.contains("reference"));
    assert!(tmp.path().join("table2.csv").exists());
}
