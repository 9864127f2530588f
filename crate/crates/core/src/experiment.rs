//! Named experiments: data generation, centre selection, fitting, evaluation
//! and the on-disk artifacts of one run.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::centres::{gaussian_centres, kmeans_centres, uniform_centres, CentreKind};
use crate::datasets::{
    default_alpha, gen_logistic_map, gen_polynomial, gen_sine, gen_spiral, load_iris, split,
    AlphaRule, Dataset, Sampling, SpiralIndex, POLYNOMIAL_DOMAIN, SINE_DOMAIN,
};
use crate::error::{config, Error, Result};
use crate::evaluation::{
    accuracy, accuracy_vs_training_size, confusion_matrix, decision_boundary_grid, mse,
    write_grid_csv, write_predictions_csv, write_sweep_csv, EvaluationReport, SeedMetric,
    SweepRow,
};
use crate::kernels::{Kernel, KernelSpec};
use crate::quantum_state::FeatureMap;
use crate::rbf_network::RbfModel;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetKind {
    #[default]
    Sine,
    Polynomial,
    Logistic,
    Spiral,
    Iris,
}

impl DatasetKind {
    pub fn is_classification(self) -> bool {
        matches!(self, DatasetKind::Spiral | DatasetKind::Iris)
    }

    pub fn name(self) -> &'static str {
        match self {
            DatasetKind::Sine => "sine",
            DatasetKind::Polynomial => "polynomial",
            DatasetKind::Logistic => "logistic",
            DatasetKind::Spiral => "spiral",
            DatasetKind::Iris => "iris",
        }
    }

    /// Input interval of the one-dimensional generators.
    pub fn domain(self) -> Option<(f64, f64)> {
        match self {
            DatasetKind::Sine => Some(SINE_DOMAIN),
            DatasetKind::Polynomial => Some(POLYNOMIAL_DOMAIN),
            DatasetKind::Logistic => Some((0.0, 1.0)),
            _ => None,
        }
    }

    /// The periodic encoding of the sine and polynomial sets spans half a
    /// rotation; the remaining sets keep scaled features inside one radian.
    pub fn default_alpha_rule(self) -> AlphaRule {
        match self {
            DatasetKind::Sine | DatasetKind::Polynomial => AlphaRule::PiOverMax,
            _ => AlphaRule::InverseMax,
        }
    }

    pub fn default_noise(self) -> f64 {
        match self {
            DatasetKind::Sine | DatasetKind::Polynomial => 0.1,
            DatasetKind::Logistic => 0.01,
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// Quantum fidelity kernel.
    #[default]
    Qrbf,
    /// Classical distance kernel.
    Crbf,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassicalKernel {
    #[default]
    Gaussian,
    Linear,
    Spline,
}

/// Independent seeds for each source of randomness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Seeds {
    pub data: u64,
    pub centres: u64,
    pub entangler: u64,
    pub split: u64,
}

impl Default for Seeds {
    fn default() -> Self {
        Seeds {
            data: 0,
            centres: 1,
            entangler: 2,
            split: 3,
        }
    }
}

/// SplitMix64 finaliser; turns one seed into decorrelated per-stream seeds.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed
        .wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub dataset: DatasetKind,
    pub iris_path: Option<PathBuf>,
    pub model: ModelKind,
    /// Kernel function of the classical model.
    pub classical_kernel: ClassicalKernel,
    /// Gaussian width; derived from the centre spread when absent.
    pub gamma: Option<f64>,
    /// Defaults: uniform (quantum, regression), gaussian (quantum,
    /// classification), k-means (classical).
    pub centres: Option<CentreKind>,
    pub n_centres: usize,
    pub alpha_rule: Option<AlphaRule>,
    /// Explicit per-feature α; overrides `alpha_rule`.
    pub alpha: Option<Vec<f64>>,
    /// Training grid size (sine, polynomial) or trajectory length (logistic).
    pub train_points: usize,
    pub test_points: usize,
    pub split_ratio: f64,
    pub noise_sigma: Option<f64>,
    pub spiral_per_class: usize,
    pub spiral_index: SpiralIndex,
    pub kmeans_max_iters: usize,
    pub rcond: Option<f64>,
    pub grid_resolution: usize,
    pub seeds: Seeds,
    pub output_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dataset: DatasetKind::Sine,
            iris_path: None,
            model: ModelKind::Qrbf,
            classical_kernel: ClassicalKernel::Gaussian,
            gamma: None,
            centres: None,
            n_centres: 5,
            alpha_rule: None,
            alpha: None,
            train_points: 15,
            test_points: 100,
            split_ratio: 0.7,
            noise_sigma: None,
            spiral_per_class: 50,
            spiral_index: SpiralIndex::Normalized,
            kmeans_max_iters: 100,
            rcond: None,
            grid_resolution: 100,
            seeds: Seeds::default(),
            output_dir: None,
        }
    }
}

impl ExperimentConfig {
    pub fn new(dataset: DatasetKind, model: ModelKind, n_centres: usize) -> Self {
        Self {
            dataset,
            model,
            n_centres,
            ..Self::default()
        }
    }

    /// All four seeds derived from one integer.
    pub fn with_seed_set(&self, seed: u64) -> Self {
        Self {
            seeds: Seeds {
                data: derive_seed(seed, 0),
                centres: derive_seed(seed, 1),
                entangler: derive_seed(seed, 2),
                split: derive_seed(seed, 3),
            },
            ..self.clone()
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_json_with_overrides(Some(text), &[])
    }

    /// Parse a config document (or start from defaults) and apply
    /// `key=value` overrides. Keys may be dotted (`seeds.data`); values are
    /// read as JSON and fall back to plain strings.
    pub fn from_json_with_overrides(text: Option<&str>, overrides: &[(String, String)]) -> Result<Self> {
        let mut doc = match text {
            Some(t) => serde_json::from_str::<Value>(t)
                .map_err(|e| Error::Serialization(format!("config: {e}")))?,
            None => Value::Object(Default::default()),
        };
        if !doc.is_object() {
            return Err(Error::Serialization("config must be a JSON object".into()));
        }
        for (key, raw) in overrides {
            let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.clone()));
            set_path(&mut doc, key, value)?;
        }
        let cfg: Self = serde_json::from_value(doc).map_err(|e| Error::Usage(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes") + "\n"
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_centres == 0 {
            return Err(config!("n_centres must be at least 1"));
        }
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return Err(config!("split_ratio must lie in (0, 1), got {}", self.split_ratio));
        }
        if let Some(s) = self.noise_sigma {
            if !(s.is_finite() && s >= 0.0) {
                return Err(config!("noise_sigma must be finite and nonnegative, got {s}"));
            }
        }
        if let Some(g) = self.gamma {
            if !(g.is_finite() && g > 0.0) {
                return Err(config!("gamma must be finite and positive, got {g}"));
            }
        }
        if self.dataset == DatasetKind::Iris && self.iris_path.is_none() {
            return Err(config!("the iris dataset needs iris_path"));
        }
        if self.grid_resolution == 0 {
            return Err(config!("grid_resolution must be at least 1"));
        }
        Ok(())
    }

    pub fn noise(&self) -> f64 {
        self.noise_sigma.unwrap_or_else(|| self.dataset.default_noise())
    }

    pub fn alpha_rule(&self) -> AlphaRule {
        self.alpha_rule
            .unwrap_or_else(|| self.dataset.default_alpha_rule())
    }

    pub fn centre_kind(&self) -> CentreKind {
        self.centres.unwrap_or(match (self.model, self.dataset.is_classification()) {
            (ModelKind::Crbf, _) => CentreKind::KMeans,
            (ModelKind::Qrbf, false) => CentreKind::Uniform,
            (ModelKind::Qrbf, true) => CentreKind::Gaussian,
        })
    }
}

fn set_path(doc: &mut Value, key: &str, value: Value) -> Result<()> {
    let mut node = doc;
    let parts: Vec<&str> = key.split('.').collect();
    for part in &parts[..parts.len() - 1] {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| Error::Usage(format!("cannot set {key}")))?;
        node = obj
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    node.as_object_mut()
        .ok_or_else(|| Error::Usage(format!("cannot set {key}")))?
        .insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

/// Train/test data of one experiment.
#[derive(Debug, Clone)]
pub struct ExperimentData {
    pub train: Dataset,
    pub test: Dataset,
    pub classes: Option<usize>,
}

pub fn prepare_data(cfg: &ExperimentConfig) -> Result<ExperimentData> {
    let seed = cfg.seeds.data;
    let sigma = cfg.noise();
    let (train, test) = match cfg.dataset {
        DatasetKind::Sine => (
            gen_sine(cfg.train_points, seed, sigma, Sampling::Grid)?,
            gen_sine(cfg.test_points, derive_seed(seed, 100), sigma, Sampling::Uniform)?,
        ),
        DatasetKind::Polynomial => (
            gen_polynomial(cfg.train_points, seed, sigma, Sampling::Grid)?,
            gen_polynomial(cfg.test_points, derive_seed(seed, 100), sigma, Sampling::Uniform)?,
        ),
        DatasetKind::Logistic => {
            // training pairs first, held-out pairs continue the same trajectory
            let all = gen_logistic_map(cfg.train_points + cfg.test_points, seed, sigma)?;
            let n = cfg.train_points;
            let idx: Vec<usize> = (0..all.len()).collect();
            (all.select(&idx[..n]), all.select(&idx[n..]))
        }
        DatasetKind::Spiral | DatasetKind::Iris => {
            let data = if cfg.dataset == DatasetKind::Spiral {
                gen_spiral(cfg.spiral_per_class, seed, cfg.spiral_index, true)?
            } else {
                let path = cfg.iris_path.as_ref().ok_or_else(|| config!("iris_path not set"))?;
                load_iris(path)?
            };
            let s = split(&data, cfg.split_ratio, cfg.seeds.split)?;
            (s.train, s.test)
        }
    };
    let classes = cfg.dataset.is_classification().then(|| train.output_dim());
    Ok(ExperimentData {
        train,
        test,
        classes,
    })
}

pub fn select_centres(cfg: &ExperimentConfig, train: &Dataset) -> Result<DMatrix<f64>> {
    if cfg.n_centres > train.len() {
        return Err(config!(
            "{} centres for {} training points",
            cfg.n_centres,
            train.len()
        ));
    }
    match cfg.centre_kind() {
        CentreKind::Uniform => {
            let (lo, hi) = match cfg.dataset.domain() {
                Some(d) => d,
                None if train.feature_count() == 1 => {
                    let col = train.inputs.column(0);
                    (col.min(), col.max())
                }
                None => {
                    return Err(Error::Capability(format!(
                        "uniform centres need one feature, {} has {}",
                        cfg.dataset.name(),
                        train.feature_count()
                    )))
                }
            };
            uniform_centres(&[lo], &[hi], cfg.n_centres)
        }
        CentreKind::Gaussian => gaussian_centres(&train.inputs, cfg.n_centres, cfg.seeds.centres),
        CentreKind::KMeans => kmeans_centres(
            &train.inputs,
            cfg.n_centres,
            cfg.seeds.centres,
            cfg.kmeans_max_iters,
        ),
    }
}

/// `γ = n / d_max²`, i.e. a width of `d_max / √(2n)` for `n` centres whose
/// largest pairwise distance is `d_max`.
pub fn gamma_from_spread(centres: &DMatrix<f64>) -> f64 {
    let n = centres.nrows();
    let mut d_max = 0.0f64;
    for i in 0..n {
        for j in i + 1..n {
            d_max = d_max.max((centres.row(i) - centres.row(j)).norm());
        }
    }
    if d_max > 0.0 {
        n as f64 / (d_max * d_max)
    } else {
        1.0
    }
}

pub fn kernel_spec(cfg: &ExperimentConfig, train: &Dataset, centres: &DMatrix<f64>) -> Result<KernelSpec> {
    match cfg.model {
        ModelKind::Qrbf => {
            let alpha = match &cfg.alpha {
                Some(a) if a.len() == train.feature_count() => a.clone(),
                Some(a) => {
                    return Err(config!(
                        "{} alpha values for {} features",
                        a.len(),
                        train.feature_count()
                    ))
                }
                None => default_alpha(&train.inputs, cfg.alpha_rule())?,
            };
            Ok(KernelSpec::QuantumFidelity(FeatureMap::new(alpha, cfg.seeds.entangler)?))
        }
        ModelKind::Crbf => Ok(match cfg.classical_kernel {
            ClassicalKernel::Gaussian => KernelSpec::Gaussian {
                gamma: cfg.gamma.unwrap_or_else(|| gamma_from_spread(centres)),
            },
            ClassicalKernel::Linear => KernelSpec::Linear,
            ClassicalKernel::Spline => KernelSpec::Spline,
        }),
    }
}

/// Summary written to `metrics.json`. Contains no timings or paths so that
/// identical configs give identical bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub dataset: String,
    pub model: ModelKind,
    pub kernel: KernelSpec,
    pub centre_strategy: CentreKind,
    pub n_centres: usize,
    pub train_size: usize,
    pub test_size: usize,
    pub seeds: Seeds,
    pub train_mse: f64,
    pub report: EvaluationReport,
}

impl Metrics {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("metrics serialize") + "\n"
    }
}

/// Everything one run produces.
#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub model: RbfModel,
    pub data: ExperimentData,
    pub predictions: DMatrix<f64>,
    pub predicted_labels: Option<Vec<usize>>,
    pub report: EvaluationReport,
    pub metrics: Metrics,
}

/// Fit on the training partition only.
pub fn fit_model(cfg: &ExperimentConfig, data: &ExperimentData) -> Result<RbfModel> {
    let centres = select_centres(cfg, &data.train)?;
    let spec = kernel_spec(cfg, &data.train, &centres)?;
    RbfModel::fit_with(
        &data.train.inputs,
        &data.train.outputs,
        &centres,
        Kernel::new(spec)?,
        cfg.rcond,
    )
}

/// Generate, fit and evaluate without touching the filesystem.
pub fn run(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let data = prepare_data(cfg)?;
    let model = fit_model(cfg, &data)?;
    let train_mse = mse(&model.predict(&data.train.inputs)?, &data.train.outputs)?;
    let predictions = model.predict(&data.test.inputs)?;

    let mut report = EvaluationReport::default();
    let mut predicted_labels = None;
    let metric = match (data.classes, &data.test.labels) {
        (Some(q), Some(truth)) => {
            let labels = crate::rbf_network::argmax_rows(&predictions);
            let acc = accuracy(&labels, truth)?;
            report.accuracy = Some(acc);
            report.confusion = Some(confusion_matrix(&labels, truth, q)?);
            predicted_labels = Some(labels);
            acc
        }
        _ => {
            let err = mse(&predictions, &data.test.outputs)?;
            report.mse = Some(err);
            err
        }
    };
    report.per_seed.push(SeedMetric {
        seed: cfg.seeds.data,
        value: metric,
    });
    report.aggregate();

    let metrics = Metrics {
        dataset: cfg.dataset.name().to_string(),
        model: cfg.model,
        kernel: model.kernel().spec().clone(),
        centre_strategy: cfg.centre_kind(),
        n_centres: cfg.n_centres,
        train_size: data.train.len(),
        test_size: data.test.len(),
        seeds: cfg.seeds,
        train_mse,
        report: report.clone(),
    };
    Ok(ExperimentOutcome {
        model,
        data,
        predictions,
        predicted_labels,
        report,
        metrics,
    })
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_file(path: &Path, f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

/// Bounds of the 2-D inputs padded by 5% on each side.
pub fn padded_bounds(inputs: &DMatrix<f64>) -> [(f64, f64); 2] {
    let span = |c: usize| {
        let col = inputs.column(c);
        let (lo, hi) = (col.min(), col.max());
        let pad = 0.05 * (hi - lo).max(f64::EPSILON);
        (lo - pad, hi + pad)
    };
    [span(0), span(1)]
}

impl ExperimentOutcome {
    /// Writes `model.json`, `train.csv`, `test.csv`, `predictions.csv`,
    /// `metrics.json` and, for two-feature classifiers, `grid.csv`.
    pub fn write_artifacts(&self, cfg: &ExperimentConfig, dir: &Path) -> Result<()> {
        create_dir(dir)?;
        self.model.save(dir.join("model.json"))?;
        self.data.train.save_csv(dir.join("train.csv"))?;
        self.data.test.save_csv(dir.join("test.csv"))?;
        write_file(&dir.join("predictions.csv"), |buf| {
            write_predictions_csv(
                &self.data.test.inputs,
                &self.predictions,
                self.predicted_labels.as_deref(),
                buf,
            )
        })?;
        fs::write(dir.join("metrics.json"), self.metrics.to_json())
            .map_err(|e| Error::io(dir.join("metrics.json"), e))?;
        if self.data.classes.is_some() && self.model.feature_count() == 2 {
            let mut all = self.data.train.inputs.clone();
            all = all.resize_vertically(self.data.train.len() + self.data.test.len(), 0.0);
            all.rows_mut(self.data.train.len(), self.data.test.len())
                .copy_from(&self.data.test.inputs);
            let grid = decision_boundary_grid(&self.model, padded_bounds(&all), cfg.grid_resolution)?;
            write_file(&dir.join("grid.csv"), |buf| write_grid_csv(&grid, buf))?;
        }
        Ok(())
    }
}

/// [`run`], then write artifacts when `output_dir` is set.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    let outcome = run(cfg)?;
    log::info!(
        "{} {} n={}: mse={:?} accuracy={:?}",
        cfg.dataset.name(),
        model_tag(cfg.model),
        cfg.n_centres,
        outcome.report.mse,
        outcome.report.accuracy
    );
    if let Some(dir) = &cfg.output_dir {
        outcome.write_artifacts(cfg, dir)?;
    }
    Ok(outcome)
}

/// Reproductions of the published tables and the training-size figure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Table1,
    Table2,
    Table3,
    Fig8,
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "table1" => Ok(Preset::Table1),
            "table2" => Ok(Preset::Table2),
            "table3" => Ok(Preset::Table3),
            "fig8" => Ok(Preset::Fig8),
            other => Err(Error::Usage(format!(
                "unknown preset {other:?}; expected table1, table2, table3 or fig8"
            ))),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Preset::Table1 => "table1",
            Preset::Table2 => "table2",
            Preset::Table3 => "table3",
            Preset::Fig8 => "fig8",
        })
    }
}

/// Published values for rows this crate does not recompute.
mod reference {
    /// (row, sine, polynomial, logistic)
    pub const TABLE1: [(&str, f64, f64, f64); 7] = [
        ("Q-RBF j=3", 0.539, 2.95, 0.000869),
        ("Q-RBF j=4", 0.0473, 1.38, 0.0000861),
        ("Q-RBF j=5", 0.0128, 0.887, 0.0000861),
        ("Classical RBF j=5", 0.0241, 1.59, 0.0000877),
        ("Linear SVM", 0.257, 30.7, 0.00426),
        ("Gaussian SVM", 0.0167, 10.0, 0.00228),
        ("MLP", 0.076, 14.5, 0.00233),
    ];
    pub const TABLE2: [(&str, f64); 5] = [
        ("Q-RBF j=50", 0.956),
        ("Classical RBF j=50", 0.956),
        ("Linear SVM", 0.622),
        ("Gaussian SVM", 0.800),
        ("MLP", 0.822),
    ];
    pub const TABLE3: [(&str, f64); 5] = [
        ("Q-RBF j=50", 1.0),
        ("Classical RBF j=50", 1.0),
        ("Linear SVM", 0.978),
        ("Gaussian SVM", 0.978),
        ("MLP", 1.0),
    ];
}

/// One line of a combined suite table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteRow {
    pub row: String,
    /// `measured` for values computed here, `reference` for published numbers.
    pub source: String,
    pub values: Vec<Option<f64>>,
}

#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub preset: Preset,
    pub columns: Vec<String>,
    pub rows: Vec<SuiteRow>,
    pub sweep: Option<Vec<SweepRow>>,
}

impl SuiteReport {
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        if let Some(sweep) = &self.sweep {
            return write_sweep_csv(sweep, writer);
        }
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(writer);
        let err = |e: csv::Error| Error::Serialization(e.to_string());
        let mut header = vec!["row".to_string(), "source".to_string()];
        header.extend(self.columns.iter().cloned());
        w.write_record(&header).map_err(err)?;
        for row in &self.rows {
            let mut rec = vec![row.row.clone(), row.source.clone()];
            rec.extend(
                row.values
                    .iter()
                    .map(|v| v.map(|x| x.to_string()).unwrap_or_default()),
            );
            w.write_record(&rec).map_err(err)?;
        }
        w.flush().map_err(|e| Error::Serialization(e.to_string()))
    }
}

/// Ratios 0.1, 0.2, …, 0.9.
pub fn default_sweep_ratios() -> Vec<f64> {
    (1..=9).map(|i| i as f64 / 10.0).collect()
}

/// Centre count of the training-size sweep; small enough that the 10%
/// split of 150 spiral points still has one training point per centre.
pub const SWEEP_CENTRES: usize = 15;

fn cell_dir(base: Option<&Path>, name: &str) -> Option<PathBuf> {
    base.map(|b| b.join(name))
}

/// Run every configuration behind a preset. `base` supplies seeds and the
/// Iris path; dataset, model, centre count and noise level are set per cell.
pub fn run_suite(preset: Preset, base: &ExperimentConfig, out_dir: Option<&Path>) -> Result<SuiteReport> {
    let cell = |dataset, model, n: usize, dir: &str| {
        let mut cfg = base.clone();
        cfg.dataset = dataset;
        cfg.model = model;
        cfg.n_centres = n;
        cfg.centres = None;
        cfg.alpha = None;
        cfg.alpha_rule = None;
        cfg.noise_sigma = None;
        cfg.output_dir = cell_dir(out_dir, dir);
        cfg
    };
    let measured = |row: &str, values| SuiteRow {
        row: row.into(),
        source: "measured".into(),
        values,
    };
    let published = |row: &str, values| SuiteRow {
        row: row.into(),
        source: "reference".into(),
        values,
    };

    let report = match preset {
        Preset::Table1 => {
            let datasets = [DatasetKind::Sine, DatasetKind::Polynomial, DatasetKind::Logistic];
            let models = [
                ("Q-RBF j=3", ModelKind::Qrbf, 3),
                ("Q-RBF j=4", ModelKind::Qrbf, 4),
                ("Q-RBF j=5", ModelKind::Qrbf, 5),
                ("Classical RBF j=5", ModelKind::Crbf, 5),
            ];
            let mut rows = Vec::new();
            for (label, model, n) in models {
                let mut values = Vec::new();
                for d in datasets {
                    let dir = format!("{}-{}-{n}", d.name(), model_tag(model));
                    values.push(run_experiment(&cell(d, model, n, &dir))?.report.mse);
                }
                rows.push(measured(label, values));
            }
            for (label, s, p, l) in reference::TABLE1 {
                rows.push(published(label, vec![Some(s), Some(p), Some(l)]));
            }
            SuiteReport {
                preset,
                columns: datasets.iter().map(|d| d.name().to_string()).collect(),
                rows,
                sweep: None,
            }
        }
        Preset::Table2 | Preset::Table3 => {
            let (dataset, refs) = if preset == Preset::Table2 {
                (DatasetKind::Spiral, reference::TABLE2)
            } else {
                (DatasetKind::Iris, reference::TABLE3)
            };
            let mut rows = Vec::new();
            for (label, model) in [
                ("Q-RBF j=50", ModelKind::Qrbf),
                ("Classical RBF j=50", ModelKind::Crbf),
            ] {
                let dir = format!("{}-{}-50", dataset.name(), model_tag(model));
                let acc = run_experiment(&cell(dataset, model, 50, &dir))?.report.accuracy;
                rows.push(measured(label, vec![acc]));
            }
            for (label, v) in refs {
                rows.push(published(label, vec![Some(v)]));
            }
            SuiteReport {
                preset,
                columns: vec!["accuracy".into()],
                rows,
                sweep: None,
            }
        }
        Preset::Fig8 => {
            let cfg = cell(DatasetKind::Spiral, ModelKind::Qrbf, SWEEP_CENTRES, "unused");
            let seeds: Vec<u64> = (0..10).collect();
            let sweep = accuracy_vs_training_size(
                &ExperimentConfig {
                    output_dir: None,
                    ..cfg
                },
                &default_sweep_ratios(),
                &seeds,
            )?;
            SuiteReport {
                preset,
                columns: vec![],
                rows: vec![],
                sweep: Some(sweep),
            }
        }
    };

    if let Some(dir) = out_dir {
        create_dir(dir)?;
        let name = if preset == Preset::Fig8 {
            "sweep.csv".to_string()
        } else {
            format!("{preset}.csv")
        };
        write_file(&dir.join(name), |buf| report.write_csv(buf))?;
    }
    Ok(report)
}

fn model_tag(model: ModelKind) -> &'static str {
    match model {
        ModelKind::Qrbf => "qrbf",
        ModelKind::Crbf => "crbf",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_json() {
        let cfg = ExperimentConfig::default();
        assert_eq!(ExperimentConfig::from_json(&cfg.to_json()).unwrap(), cfg);
        assert_eq!(ExperimentConfig::from_json("{}").unwrap(), cfg);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = ExperimentConfig::from_json(r#"{"datset": "sine"}"#).unwrap_err();
        assert_eq!(err.code(), "usage");
        let err = ExperimentConfig::from_json(r#"{"seeds": {"dta": 1}}"#).unwrap_err();
        assert_eq!(err.code(), "usage");
    }

    #[test]
    fn overrides_apply_to_nested_keys() {
        let overrides = vec![
            ("dataset".to_string(), "spiral".to_string()),
            ("seeds.data".to_string(), "42".to_string()),
            ("n_centres".to_string(), "50".to_string()),
        ];
        let cfg =
            ExperimentConfig::from_json_with_overrides(Some(r#"{"model": "crbf"}"#), &overrides)
                .unwrap();
        assert_eq!(cfg.dataset, DatasetKind::Spiral);
        assert_eq!(cfg.model, ModelKind::Crbf);
        assert_eq!(cfg.seeds.data, 42);
        assert_eq!(cfg.seeds.split, Seeds::default().split);
        assert_eq!(cfg.n_centres, 50);
    }

    #[test]
    fn validation() {
        assert!(ExperimentConfig::from_json(r#"{"n_centres": 0}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"split_ratio": 1.0}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"dataset": "iris"}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"gamma": -1}"#).is_err());
    }

    #[test]
    fn default_strategies() {
        let mut cfg = ExperimentConfig::new(DatasetKind::Sine, ModelKind::Qrbf, 5);
        assert_eq!(cfg.centre_kind(), CentreKind::Uniform);
        assert_eq!(cfg.alpha_rule(), AlphaRule::PiOverMax);
        cfg.dataset = DatasetKind::Spiral;
        assert_eq!(cfg.centre_kind(), CentreKind::Gaussian);
        assert_eq!(cfg.alpha_rule(), AlphaRule::InverseMax);
        cfg.model = ModelKind::Crbf;
        assert_eq!(cfg.centre_kind(), CentreKind::KMeans);
    }

    #[test]
    fn sine_run_reports_mse() {
        let out = run(&ExperimentConfig::new(DatasetKind::Sine, ModelKind::Qrbf, 5)).unwrap();
        let mse = out.report.mse.unwrap();
        assert!(mse < 0.05, "{mse}");
        assert_eq!(out.metrics.train_size, 15);
        assert_eq!(out.metrics.test_size, 100);
        match &out.metrics.kernel {
            KernelSpec::QuantumFidelity(map) => assert!((map.alpha()[0] - 0.5).abs() < 1e-15),
            other => panic!("unexpected kernel {other:?}"),
        }
    }

    #[test]
    fn too_many_centres_is_configuration_error() {
        let mut cfg = ExperimentConfig::new(DatasetKind::Spiral, ModelKind::Qrbf, 50);
        cfg.split_ratio = 0.2;
        assert_eq!(run(&cfg).unwrap_err().code(), "configuration");
    }

    #[test]
    fn spiral_run_has_confusion() {
        let out = run(&ExperimentConfig::new(DatasetKind::Spiral, ModelKind::Qrbf, 50)).unwrap();
        let confusion = out.report.confusion.unwrap();
        assert_eq!(confusion.len(), 3);
        let total: usize = confusion.iter().flatten().sum();
        assert_eq!(total, 45);
        let trace: usize = (0..3).map(|i| confusion[i][i]).sum();
        assert!((trace as f64 / 45.0 - out.report.accuracy.unwrap()).abs() < 1e-15);
    }

    #[test]
    fn unknown_preset() {
        assert_eq!("table9".parse::<Preset>().unwrap_err().code(), "usage");
        assert_eq!("fig8".parse::<Preset>().unwrap(), Preset::Fig8);
    }

    #[test]
    fn derived_seeds_differ() {
        let s = ExperimentConfig::default().with_seed_set(7).seeds;
        assert!(s.data != s.centres && s.centres != s.entangler && s.entangler != s.split);
        assert_eq!(s, ExperimentConfig::default().with_seed_set(7).seeds);
    }
}
