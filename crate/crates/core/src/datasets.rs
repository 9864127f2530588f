//! Dataset generators, Iris ingestion, splitting and the α-scaling policy.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{config, domain, Error, Result};
use crate::rbf_network::one_hot;

/// Inputs (`m × P`), outputs (`m × q`) and optional class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub inputs: DMatrix<f64>,
    pub outputs: DMatrix<f64>,
    pub labels: Option<Vec<usize>>,
}

impl Dataset {
    pub fn new(
        name: impl Into<String>,
        inputs: DMatrix<f64>,
        outputs: DMatrix<f64>,
        labels: Option<Vec<usize>>,
    ) -> Result<Self> {
        if inputs.nrows() != outputs.nrows() {
            return Err(config!(
                "inputs have {} rows, outputs have {}",
                inputs.nrows(),
                outputs.nrows()
            ));
        }
        if let Some(labels) = &labels {
            if labels.len() != inputs.nrows() {
                return Err(config!(
                    "{} labels for {} rows",
                    labels.len(),
                    inputs.nrows()
                ));
            }
            if let Some(l) = labels.iter().find(|l| **l >= outputs.ncols()) {
                return Err(domain!("label {l} outside 0..{}", outputs.ncols()));
            }
        }
        Ok(Self {
            name: name.into(),
            inputs,
            outputs,
            labels,
        })
    }

    /// Labelled dataset with one-hot outputs.
    pub fn classification(
        name: impl Into<String>,
        inputs: DMatrix<f64>,
        labels: Vec<usize>,
        classes: usize,
    ) -> Result<Self> {
        let outputs = one_hot(&labels, classes)?;
        Self::new(name, inputs, outputs, Some(labels))
    }

    pub fn len(&self) -> usize {
        self.inputs.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.nrows() == 0
    }

    pub fn feature_count(&self) -> usize {
        self.inputs.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.outputs.ncols()
    }

    /// Rows at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Dataset {
        Dataset {
            name: self.name.clone(),
            inputs: self.inputs.select_rows(indices),
            outputs: self.outputs.select_rows(indices),
            labels: self
                .labels
                .as_ref()
                .map(|l| indices.iter().map(|&i| l[i]).collect()),
        }
    }

    /// CSV with columns `x_1..x_P, f_1..f_q, label` (label blank when absent).
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(writer);
        let mut header: Vec<String> = (1..=self.feature_count()).map(|p| format!("x_{p}")).collect();
        header.extend((1..=self.output_dim()).map(|j| format!("f_{j}")));
        header.push("label".into());
        w.write_record(&header).map_err(csv_err)?;
        for i in 0..self.len() {
            let mut record: Vec<String> = self.inputs.row(i).iter().map(|v| v.to_string()).collect();
            record.extend(self.outputs.row(i).iter().map(|v| v.to_string()));
            record.push(
                self.labels
                    .as_ref()
                    .map(|l| l[i].to_string())
                    .unwrap_or_default(),
            );
            w.write_record(&record).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::Serialization(e.to_string()))
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    /// Reads the format written by [`Dataset::write_csv`].
    pub fn read_csv<R: Read>(reader: R, name: &str) -> Result<Self> {
        let source = Path::new(name);
        let ingest = |row: Option<usize>, message: String| Error::Ingestion {
            path: source.to_path_buf(),
            row,
            message,
        };
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let header = r.headers().map_err(|e| ingest(Some(1), e.to_string()))?.clone();
        let p = header.iter().filter(|h| h.starts_with("x_")).count();
        let q = header.iter().filter(|h| h.starts_with("f_")).count();
        let has_label = header.iter().any(|h| h == "label");
        if p == 0 {
            return Err(ingest(Some(1), "no x_ columns in header".into()));
        }
        let mut inputs = Vec::new();
        let mut outputs = Vec::new();
        let mut labels = Vec::new();
        let mut all_labelled = has_label;
        let mut rows = 0;
        for (i, record) in r.records().enumerate() {
            let row = i + 2;
            let record = record.map_err(|e| ingest(Some(row), e.to_string()))?;
            if record.len() < p + q {
                return Err(ingest(Some(row), format!("expected {} fields", p + q)));
            }
            for (k, field) in record.iter().take(p + q).enumerate() {
                let v: f64 = field
                    .trim()
                    .parse()
                    .map_err(|_| ingest(Some(row), format!("not a number: {field:?}")))?;
                if k < p {
                    inputs.push(v);
                } else {
                    outputs.push(v);
                }
            }
            match record.get(p + q).map(str::trim) {
                Some(l) if !l.is_empty() => labels.push(
                    l.parse()
                        .map_err(|_| ingest(Some(row), format!("bad label {l:?}")))?,
                ),
                _ => all_labelled = false,
            }
            rows += 1;
        }
        let labels = (all_labelled && rows > 0).then_some(labels);
        Dataset::new(
            name,
            DMatrix::from_row_slice(rows, p, &inputs),
            DMatrix::from_row_slice(rows, q, &outputs),
            labels,
        )
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(file, &path.display().to_string())
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Serialization(e.to_string())
}

/// Disjoint train/test partition of one dataset.
#[derive(Debug, Clone)]
pub struct SplitDataset {
    pub train: Dataset,
    pub test: Dataset,
    pub split_seed: u64,
    pub ratio: f64,
}

/// Where generator inputs are placed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    /// `m` equally spaced points, endpoints included (training sets).
    Grid,
    /// `m` i.i.d. uniform draws on the interval (test sets).
    Uniform,
}

fn noise(sigma: f64) -> Result<Normal<f64>> {
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(domain!("noise sigma must be finite and nonnegative, got {sigma}"));
    }
    Normal::new(0.0, sigma).map_err(|e| domain!("{e}"))
}

fn gen_function(
    name: &str,
    f: impl Fn(f64) -> f64,
    (low, high): (f64, f64),
    m: usize,
    seed: u64,
    noise_sigma: f64,
    sampling: Sampling,
) -> Result<Dataset> {
    if m < 2 {
        return Err(config!("{name} generator needs m ≥ 2, got {m}"));
    }
    let eps = noise(noise_sigma)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs: Vec<f64> = match sampling {
        Sampling::Grid => (0..m)
            .map(|i| {
                if i == m - 1 {
                    high
                } else {
                    low + (high - low) * i as f64 / (m - 1) as f64
                }
            })
            .collect(),
        Sampling::Uniform => (0..m).map(|_| rng.random_range(low..=high)).collect(),
    };
    let ys: Vec<f64> = xs
        .iter()
        .map(|&x| {
            let clean = f(x);
            if noise_sigma > 0.0 {
                clean + eps.sample(&mut rng)
            } else {
                clean
            }
        })
        .collect();
    Dataset::new(
        name,
        DMatrix::from_vec(m, 1, xs),
        DMatrix::from_vec(m, 1, ys),
        None,
    )
}

pub const SINE_DOMAIN: (f64, f64) = (0.0, 2.0 * PI);
pub const POLYNOMIAL_DOMAIN: (f64, f64) = (0.0, 10.0);

pub fn polynomial(x: f64) -> f64 {
    x * x - 0.1 * x * x * x
}

/// `sin x` on `[0, 2π]` plus Gaussian observation noise.
pub fn gen_sine(m: usize, seed: u64, noise_sigma: f64, sampling: Sampling) -> Result<Dataset> {
    gen_function("sine", f64::sin, SINE_DOMAIN, m, seed, noise_sigma, sampling)
}

/// `x² − 0.1x³` on `[0, 10]` plus Gaussian observation noise.
pub fn gen_polynomial(m: usize, seed: u64, noise_sigma: f64, sampling: Sampling) -> Result<Dataset> {
    gen_function(
        "polynomial",
        polynomial,
        POLYNOMIAL_DOMAIN,
        m,
        seed,
        noise_sigma,
        sampling,
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogisticParams {
    pub r: f64,
    pub x0: f64,
}

impl Default for LogisticParams {
    fn default() -> Self {
        Self { r: 4.0, x0: 0.3 }
    }
}

/// Trajectory `x(0..=steps)` of `x ↦ r x (1 − x)`.
pub fn logistic_trajectory(params: LogisticParams, steps: usize) -> Vec<f64> {
    let mut xs = Vec::with_capacity(steps + 1);
    let mut x = params.x0;
    xs.push(x);
    for _ in 0..steps {
        x = params.r * x * (1.0 - x);
        xs.push(x);
    }
    xs
}

/// Delay pairs `(x(t), x(t+1))` for `t = 0..steps`, with observation noise
/// on the outputs; the trajectory itself stays clean.
pub fn gen_logistic_map_with(
    params: LogisticParams,
    steps: usize,
    seed: u64,
    noise_sigma: f64,
) -> Result<Dataset> {
    if steps < 2 {
        return Err(config!("logistic map needs at least 2 steps, got {steps}"));
    }
    let eps = noise(noise_sigma)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs = logistic_trajectory(params, steps);
    let mut noisy = |v: f64| {
        if noise_sigma > 0.0 {
            v + eps.sample(&mut rng)
        } else {
            v
        }
    };
    let inputs: Vec<f64> = xs[..steps].to_vec();
    let outputs: Vec<f64> = xs[1..].iter().map(|&v| noisy(v)).collect();
    Dataset::new(
        "logistic",
        DMatrix::from_vec(steps, 1, inputs),
        DMatrix::from_vec(steps, 1, outputs),
        None,
    )
}

/// `r = 4`, `x(0) = 0.3`.
pub fn gen_logistic_map(steps: usize, seed: u64, noise_sigma: f64) -> Result<Dataset> {
    gen_logistic_map_with(LogisticParams::default(), steps, seed, noise_sigma)
}

/// How the spiral angle index is scaled.
///
/// The generator uses `θ_i = 2π√i` without saying what range `i` covers.
/// `Normalized` reads it as `i / per_class` (one turn per arm), `Raw` uses the
/// sample index directly (about seven turns for 50 points, radii near 100).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpiralIndex {
    #[default]
    Normalized,
    Raw,
}

/// Radial offsets of the three arms.
pub const SPIRAL_OFFSETS: [f64; 3] = [PI, -PI, 4.0 * PI];

/// Three interleaved spirals `r_k(θ) = 2θ + a_k` with `U(0,1)` jitter on
/// each coordinate, shuffled together.
pub fn gen_spiral(per_class: usize, seed: u64, index: SpiralIndex, jitter: bool) -> Result<Dataset> {
    if per_class == 0 {
        return Err(config!("spiral needs at least one point per class"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(3 * per_class);
    for (k, offset) in SPIRAL_OFFSETS.iter().enumerate() {
        for i in 0..per_class {
            let t = match index {
                SpiralIndex::Normalized => i as f64 / per_class as f64,
                SpiralIndex::Raw => i as f64,
            };
            let theta = 2.0 * PI * t.sqrt();
            let radius = 2.0 * theta + offset;
            let (jx, jy) = if jitter {
                (rng.random::<f64>(), rng.random::<f64>())
            } else {
                (0.0, 0.0)
            };
            points.push((radius * theta.cos() + jx, radius * theta.sin() + jy, k));
        }
    }
    points.shuffle(&mut rng);
    let inputs = DMatrix::from_fn(points.len(), 2, |i, j| {
        if j == 0 {
            points[i].0
        } else {
            points[i].1
        }
    });
    let labels = points.iter().map(|p| p.2).collect();
    Dataset::classification("spiral", inputs, labels, 3)
}

/// Iris CSV: four numeric columns and a species column; header optional.
/// Species names map to labels in order of first appearance.
pub fn load_iris(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::Ingestion {
        path: path.to_path_buf(),
        row: None,
        message: e.to_string(),
    })?;
    read_iris(file, path)
}

pub fn read_iris<R: Read>(reader: R, path: &Path) -> Result<Dataset> {
    let ingest = |row: Option<usize>, message: String| Error::Ingestion {
        path: path.to_path_buf(),
        row,
        message,
    };
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut features = Vec::new();
    let mut labels = Vec::new();
    let mut species: HashMap<String, usize> = HashMap::new();
    for (i, record) in r.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| ingest(Some(row), e.to_string()))?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        if row == 1 && record.get(0).is_some_and(|f| f.parse::<f64>().is_err()) {
            continue; // header
        }
        if record.len() != 5 {
            return Err(ingest(
                Some(row),
                format!("expected 5 fields, found {}", record.len()),
            ));
        }
        for field in record.iter().take(4) {
            let v: f64 = field
                .parse()
                .map_err(|_| ingest(Some(row), format!("not a number: {field:?}")))?;
            if !v.is_finite() {
                return Err(ingest(Some(row), format!("non-finite value {field:?}")));
            }
            features.push(v);
        }
        let next = species.len();
        labels.push(*species.entry(record[4].to_string()).or_insert(next));
    }
    if labels.is_empty() {
        return Err(ingest(None, "no data rows".into()));
    }
    if species.len() != 3 {
        return Err(ingest(
            None,
            format!("expected 3 classes, found {}", species.len()),
        ));
    }
    if labels.len() != 150 {
        log::warn!(
            "{}: {} rows, the canonical Iris file has 150",
            path.display(),
            labels.len()
        );
    }
    let m = labels.len();
    Dataset::classification("iris", DMatrix::from_row_slice(m, 4, &features), labels, 3)
}

/// Seeded shuffle, then the first `round(ratio·m)` rows train and the rest test.
pub fn split(data: &Dataset, ratio: f64, seed: u64) -> Result<SplitDataset> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(config!("split ratio must lie in (0, 1), got {ratio}"));
    }
    let m = data.len();
    let n_train = (ratio * m as f64).round() as usize;
    if n_train == 0 || n_train >= m {
        return Err(config!(
            "ratio {ratio} on {m} rows leaves an empty partition"
        ));
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    Ok(SplitDataset {
        train: data.select(&order[..n_train]),
        test: data.select(&order[n_train..]),
        split_seed: seed,
        ratio,
    })
}

/// How α is derived from the data.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaRule {
    /// `α_p = π / max|x(p)|`: the feature range fills half a rotation period.
    #[default]
    PiOverMax,
    /// `α_p = 1 / max|x(p)|`: scaled features land in `[-1, 1]`.
    InverseMax,
}

/// Per-feature scaling. A feature whose largest magnitude is zero gets `α = 1`.
pub fn default_alpha(data: &DMatrix<f64>, rule: AlphaRule) -> Result<Vec<f64>> {
    if data.nrows() == 0 || data.ncols() == 0 {
        return Err(config!("cannot derive alpha from empty data"));
    }
    let numerator = match rule {
        AlphaRule::PiOverMax => PI,
        AlphaRule::InverseMax => 1.0,
    };
    Ok(data
        .column_iter()
        .map(|col| {
            let max = col.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
            if max > 0.0 && max.is_finite() {
                numerator / max
            } else {
                1.0
            }
        })
        .collect())
}
