//! Metrics, decision-boundary grids and training-size sweeps.

use std::io::Write;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{config, domain, Error, Result};
use crate::experiment::{run, ExperimentConfig};
use crate::rbf_network::RbfModel;

/// Mean of squared differences over all `m·q` entries.
pub fn mse(predicted: &DMatrix<f64>, actual: &DMatrix<f64>) -> Result<f64> {
    if predicted.shape() != actual.shape() {
        return Err(domain!(
            "shape mismatch: {:?} vs {:?}",
            predicted.shape(),
            actual.shape()
        ));
    }
    if predicted.is_empty() {
        return Err(domain!("mse of empty matrices"));
    }
    let sum: f64 = predicted
        .iter()
        .zip(actual.iter())
        .map(|(p, a)| (p - a) * (p - a))
        .sum();
    Ok(sum / predicted.len() as f64)
}

pub fn accuracy(predicted: &[usize], truth: &[usize]) -> Result<f64> {
    if predicted.len() != truth.len() {
        return Err(domain!(
            "{} predictions for {} labels",
            predicted.len(),
            truth.len()
        ));
    }
    if truth.is_empty() {
        return Err(domain!("accuracy of an empty label set"));
    }
    let hits = predicted.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / truth.len() as f64)
}

/// Entry `[t][p]` counts samples of true class `t` predicted as `p`.
pub fn confusion_matrix(predicted: &[usize], truth: &[usize], classes: usize) -> Result<Vec<Vec<usize>>> {
    if predicted.len() != truth.len() {
        return Err(domain!(
            "{} predictions for {} labels",
            predicted.len(),
            truth.len()
        ));
    }
    let mut out = vec![vec![0; classes]; classes];
    for (&p, &t) in predicted.iter().zip(truth) {
        if p >= classes || t >= classes {
            return Err(domain!("label outside 0..{classes}: true {t}, predicted {p}"));
        }
        out[t][p] += 1;
    }
    Ok(out)
}

/// Mean and sample standard deviation; the deviation of a single value is 0.
pub fn mean_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return Some((mean, 0.0));
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Some((mean, var.sqrt()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedMetric {
    pub seed: u64,
    pub value: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub mse: Option<f64>,
    pub accuracy: Option<f64>,
    pub confusion: Option<Vec<Vec<usize>>>,
    pub per_seed: Vec<SeedMetric>,
    pub mean: Option<f64>,
    pub std: Option<f64>,
}

impl EvaluationReport {
    /// Fill `mean`/`std` from `per_seed`.
    pub fn aggregate(&mut self) {
        let values: Vec<f64> = self.per_seed.iter().map(|s| s.value).collect();
        if let Some((mean, std)) = mean_std(&values) {
            self.mean = Some(mean);
            self.std = Some(std);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub x: f64,
    pub y: f64,
    pub class: usize,
}

fn lattice(low: f64, high: f64, resolution: usize) -> Vec<f64> {
    if resolution == 1 {
        return vec![low];
    }
    (0..resolution)
        .map(|i| {
            if i == resolution - 1 {
                high
            } else {
                low + (high - low) * i as f64 / (resolution - 1) as f64
            }
        })
        .collect()
}

/// Classify a `resolution × resolution` lattice over `bounds = [(x_lo, x_hi), (y_lo, y_hi)]`.
/// Rows are emitted with `y` outer and `x` inner.
pub fn decision_boundary_grid(
    model: &RbfModel,
    bounds: [(f64, f64); 2],
    resolution: usize,
) -> Result<Vec<GridPoint>> {
    if model.feature_count() != 2 {
        return Err(Error::Capability(format!(
            "decision grids need 2 features, model has {}",
            model.feature_count()
        )));
    }
    if resolution == 0 {
        return Err(config!("grid resolution must be at least 1"));
    }
    for (lo, hi) in bounds {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(domain!("invalid grid bounds [{lo}, {hi}]"));
        }
    }
    let xs = lattice(bounds[0].0, bounds[0].1, resolution);
    let ys = lattice(bounds[1].0, bounds[1].1, resolution);
    let mut coords = Vec::with_capacity(resolution * resolution * 2);
    for y in &ys {
        for x in &xs {
            coords.extend([*x, *y]);
        }
    }
    let points = DMatrix::from_row_slice(resolution * resolution, 2, &coords);
    let classes = model.classify(&points)?;
    Ok(classes
        .into_iter()
        .enumerate()
        .map(|(i, class)| GridPoint {
            x: coords[2 * i],
            y: coords[2 * i + 1],
            class,
        })
        .collect())
}

fn csv_writer<W: Write>(writer: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer)
}

fn csv_err(e: impl std::fmt::Display) -> Error {
    Error::Serialization(e.to_string())
}

pub fn write_grid_csv<W: Write>(points: &[GridPoint], writer: W) -> Result<()> {
    let mut w = csv_writer(writer);
    w.write_record(["x", "y", "predicted_class"]).map_err(csv_err)?;
    for p in points {
        w.write_record([p.x.to_string(), p.y.to_string(), p.class.to_string()])
            .map_err(csv_err)?;
    }
    w.flush().map_err(csv_err)
}

/// Columns `x_1..x_P, yhat_1..yhat_q, predicted_class` (class blank for regression).
pub fn write_predictions_csv<W: Write>(
    inputs: &DMatrix<f64>,
    outputs: &DMatrix<f64>,
    classes: Option<&[usize]>,
    writer: W,
) -> Result<()> {
    let mut w = csv_writer(writer);
    let mut header: Vec<String> = (1..=inputs.ncols()).map(|p| format!("x_{p}")).collect();
    header.extend((1..=outputs.ncols()).map(|j| format!("yhat_{j}")));
    header.push("predicted_class".into());
    w.write_record(&header).map_err(csv_err)?;
    for i in 0..inputs.nrows() {
        let mut record: Vec<String> = inputs.row(i).iter().map(|v| v.to_string()).collect();
        record.extend(outputs.row(i).iter().map(|v| v.to_string()));
        record.push(classes.map(|c| c[i].to_string()).unwrap_or_default());
        w.write_record(&record).map_err(csv_err)?;
    }
    w.flush().map_err(csv_err)
}

/// Reads the `yhat_*` block back out of a predictions CSV.
pub fn read_predictions_csv<R: std::io::Read>(reader: R) -> Result<DMatrix<f64>> {
    let mut r = csv::ReaderBuilder::new().from_reader(reader);
    let header = r.headers().map_err(csv_err)?.clone();
    let columns: Vec<usize> = header
        .iter()
        .enumerate()
        .filter(|(_, h)| h.starts_with("yhat_"))
        .map(|(i, _)| i)
        .collect();
    let mut values = Vec::new();
    let mut rows = 0;
    for record in r.records() {
        let record = record.map_err(csv_err)?;
        for &c in &columns {
            values.push(
                record[c]
                    .parse::<f64>()
                    .map_err(|e| Error::Serialization(format!("row {}: {e}", rows + 2)))?,
            );
        }
        rows += 1;
    }
    Ok(DMatrix::from_row_slice(rows, columns.len(), &values))
}

/// One ratio of a training-size sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub ratio: f64,
    pub mean_accuracy: Option<f64>,
    pub std: Option<f64>,
    pub per_seed: Vec<SeedMetric>,
    /// Set when at least one cell of this ratio could not be evaluated.
    pub error: Option<String>,
}

/// Resplit, refit and evaluate for every `(ratio, seed)`; a failing cell is
/// recorded on its row instead of aborting the sweep.
pub fn accuracy_vs_training_size(
    config: &ExperimentConfig,
    ratios: &[f64],
    seeds: &[u64],
) -> Result<Vec<SweepRow>> {
    if seeds.is_empty() {
        return Err(config!("sweep needs at least one seed"));
    }
    if let Some(r) = ratios.iter().find(|r| !(**r > 0.0 && **r < 1.0)) {
        return Err(config!("sweep ratio {r} outside (0, 1)"));
    }
    let mut rows = Vec::with_capacity(ratios.len());
    for &ratio in ratios {
        let mut per_seed = Vec::new();
        let mut error = None;
        for &seed in seeds {
            let mut cell = config.with_seed_set(seed);
            cell.split_ratio = ratio;
            cell.output_dir = None;
            match run(&cell).and_then(|o| {
                o.report
                    .accuracy
                    .ok_or_else(|| config!("sweeps need a classification dataset"))
            }) {
                Ok(acc) => per_seed.push(SeedMetric { seed, value: acc }),
                Err(e) => {
                    log::warn!("sweep cell ratio={ratio} seed={seed}: {e}");
                    error.get_or_insert_with(|| format!("[{}] {e}", e.code()));
                }
            }
        }
        let values: Vec<f64> = per_seed.iter().map(|s| s.value).collect();
        let stats = mean_std(&values);
        rows.push(SweepRow {
            ratio,
            mean_accuracy: stats.map(|s| s.0),
            std: stats.map(|s| s.1),
            per_seed,
            error,
        });
    }
    Ok(rows)
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], writer: W) -> Result<()> {
    let mut w = csv_writer(writer);
    w.write_record(["ratio", "mean_accuracy", "std", "seeds", "error"])
        .map_err(csv_err)?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for row in rows {
        w.write_record([
            row.ratio.to_string(),
            opt(row.mean_accuracy),
            opt(row.std),
            row.per_seed.len().to_string(),
            row.error.clone().unwrap_or_default(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(csv_err)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{Kernel, KernelSpec};

    #[test]
    fn mse_examples() {
        let a = DMatrix::from_row_slice(2, 1, &[1.0, 2.0]);
        assert_eq!(mse(&a, &a).unwrap(), 0.0);
        let p = DMatrix::from_row_slice(1, 1, &[0.0]);
        let t = DMatrix::from_row_slice(1, 1, &[2.0]);
        assert_eq!(mse(&p, &t).unwrap(), 4.0);
        let p = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let t = DMatrix::from_row_slice(1, 2, &[0.0, 2.0]);
        assert_eq!(mse(&p, &t).unwrap(), 1.0);
        assert_eq!(mse(&p, &a).unwrap_err().code(), "domain");
    }

    #[test]
    fn accuracy_examples() {
        assert_eq!(accuracy(&[0, 1, 2], &[0, 1, 2]).unwrap(), 1.0);
        assert_eq!(accuracy(&[1, 2, 0], &[0, 1, 2]).unwrap(), 0.0);
        let truth: Vec<usize> = (0..45).map(|i| i % 3).collect();
        let mut pred = truth.clone();
        pred[0] = 1;
        pred[1] = 2;
        let acc = accuracy(&pred, &truth).unwrap();
        assert!((acc - 43.0 / 45.0).abs() < 1e-15);
        assert_eq!(format!("{acc:.3}"), "0.956");
        assert_eq!(accuracy(&[], &[]).unwrap_err().code(), "domain");
    }

    #[test]
    fn confusion_examples() {
        let truth: Vec<usize> = (0..45).map(|i| i % 3).collect();
        let c = confusion_matrix(&truth, &truth, 3).unwrap();
        assert_eq!(c, vec![vec![15, 0, 0], vec![0, 15, 0], vec![0, 0, 15]]);
        let c = confusion_matrix(&[2], &[0], 3).unwrap();
        assert_eq!(c, vec![vec![0, 0, 1], vec![0, 0, 0], vec![0, 0, 0]]);
        assert_eq!(confusion_matrix(&[3], &[0], 3).unwrap_err().code(), "domain");
    }

    #[test]
    fn mean_std_single_seed_is_zero() {
        assert_eq!(mean_std(&[0.4]), Some((0.4, 0.0)));
        let (m, s) = mean_std(&[1.0, 3.0]).unwrap();
        assert_eq!(m, 2.0);
        assert!((s - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(mean_std(&[]), None);
    }

    fn constant_model(class: usize) -> RbfModel {
        let kernel = Kernel::new(KernelSpec::Gaussian { gamma: 1.0 }).unwrap();
        let centres = DMatrix::from_row_slice(1, 2, &[0.0, 0.0]);
        let mut beta = DMatrix::zeros(1, 3);
        beta[(0, class)] = 1.0;
        RbfModel::from_parts(centres, beta, kernel).unwrap()
    }

    #[test]
    fn grid_examples() {
        let grid = decision_boundary_grid(&constant_model(2), [(0.0, 1.0), (0.0, 1.0)], 3).unwrap();
        assert_eq!(grid.len(), 9);
        assert!(grid.iter().all(|g| g.class == 2));
        assert_eq!((grid[1].x, grid[1].y), (0.5, 0.0));
        assert_eq!((grid[8].x, grid[8].y), (1.0, 1.0));
    }

    #[test]
    fn grid_needs_two_features() {
        let kernel = Kernel::new(KernelSpec::Linear).unwrap();
        let model =
            RbfModel::from_parts(DMatrix::zeros(1, 1), DMatrix::zeros(1, 3), kernel).unwrap();
        let err = decision_boundary_grid(&model, [(0.0, 1.0), (0.0, 1.0)], 3).unwrap_err();
        assert_eq!(err.code(), "capability");
    }

    #[test]
    fn predictions_csv_round_trip() {
        let inputs = DMatrix::from_row_slice(2, 1, &[0.1, 0.7]);
        let outputs = DMatrix::from_row_slice(2, 2, &[1.0 / 3.0, -2e-17, 5.5, 0.25]);
        let mut buf = Vec::new();
        write_predictions_csv(&inputs, &outputs, Some(&[0, 0]), &mut buf).unwrap();
        assert!(String::from_utf8(buf.clone())
            .unwrap()
            .starts_with("x_1,yhat_1,yhat_2,predicted_class\n"));
        assert_eq!(read_predictions_csv(buf.as_slice()).unwrap(), outputs);
    }
}
