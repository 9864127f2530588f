//! Browser demo. Each operation takes plain numbers and returns a JSON
//! document for the page to draw; the wasm exports wrap these functions.

use nalgebra::DMatrix;
use serde_json::{json, Value};

use qrbf::datasets::{default_alpha, polynomial};
use qrbf::evaluation::decision_boundary_grid;
use qrbf::experiment::{self, padded_bounds, prepare_data, DatasetKind, ModelKind};
use qrbf::{ExperimentConfig, FeatureMap, Kernel, KernelSpec, Result};

const CURVE_POINTS: usize = 200;
const PROFILE_POINTS: usize = 201;

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

fn regression_dataset(name: &str) -> Result<DatasetKind> {
    match name {
        "sine" => Ok(DatasetKind::Sine),
        "polynomial" => Ok(DatasetKind::Polynomial),
        "logistic" => Ok(DatasetKind::Logistic),
        other => Err(qrbf::Error::Usage(format!(
            "unknown dataset {other:?}; expected sine, polynomial or logistic"
        ))),
    }
}

fn truth(kind: DatasetKind, x: f64) -> f64 {
    match kind {
        DatasetKind::Sine => x.sin(),
        DatasetKind::Polynomial => polynomial(x),
        _ => 4.0 * x * (1.0 - x),
    }
}

/// Fit a Q-RBF network to a noisy 1-D dataset and sample the fitted curve.
pub fn interpolation_curve(dataset: &str, n_centres: usize, noise: f64, seed: u64) -> Result<Value> {
    let kind = regression_dataset(dataset)?;
    let mut cfg = ExperimentConfig::new(kind, ModelKind::Qrbf, n_centres);
    cfg.noise_sigma = Some(noise);
    cfg.seeds.data = seed;
    cfg.validate()?;
    let outcome = experiment::run(&cfg)?;
    let (lo, hi) = kind.domain().expect("1-D dataset");
    let xs = linspace(lo, hi, CURVE_POINTS);
    let fitted = outcome
        .model
        .predict(&DMatrix::from_column_slice(xs.len(), 1, &xs))?;
    Ok(json!({
        "dataset": kind.name(),
        "domain": [lo, hi],
        "x": xs,
        "fit": fitted.column(0).iter().collect::<Vec<_>>(),
        "truth": xs.iter().map(|&x| truth(kind, x)).collect::<Vec<_>>(),
        "train": {
            "x": outcome.data.train.inputs.column(0).iter().collect::<Vec<_>>(),
            "y": outcome.data.train.outputs.column(0).iter().collect::<Vec<_>>(),
        },
        "centres": outcome.model.centres().column(0).iter().collect::<Vec<_>>(),
        "alpha": alpha_of(outcome.model.kernel().spec()),
        "test_mse": outcome.report.mse,
        "train_mse": outcome.metrics.train_mse,
    }))
}

fn alpha_of(spec: &KernelSpec) -> Option<Vec<f64>> {
    match spec {
        KernelSpec::QuantumFidelity(map) => Some(map.alpha().to_vec()),
        _ => None,
    }
}

/// Classify the three-arm spiral with a Q-RBF network and return the
/// decision regions over a `resolution × resolution` lattice.
/// `alpha_scale` multiplies the default per-feature α.
pub fn spiral_boundary(n_centres: usize, alpha_scale: f64, seed: u64, resolution: usize) -> Result<Value> {
    if !(alpha_scale.is_finite() && alpha_scale > 0.0) {
        return Err(qrbf::Error::Domain(format!(
            "alpha scale must be positive, got {alpha_scale}"
        )));
    }
    let mut cfg = ExperimentConfig::new(DatasetKind::Spiral, ModelKind::Qrbf, n_centres).with_seed_set(seed);
    cfg.grid_resolution = resolution;
    cfg.validate()?;
    let data = prepare_data(&cfg)?;
    let base = default_alpha(&data.train.inputs, cfg.alpha_rule())?;
    cfg.alpha = Some(base.iter().map(|a| a * alpha_scale).collect());
    let outcome = experiment::run(&cfg)?;

    let train = &outcome.data.train;
    let test = &outcome.data.test;
    let all = DMatrix::from_fn(train.len() + test.len(), 2, |i, j| {
        if i < train.len() {
            train.inputs[(i, j)]
        } else {
            test.inputs[(i - train.len(), j)]
        }
    });
    let bounds = padded_bounds(&all);
    let grid = decision_boundary_grid(&outcome.model, bounds, resolution)?;
    Ok(json!({
        "bounds": [[bounds[0].0, bounds[0].1], [bounds[1].0, bounds[1].1]],
        "resolution": resolution,
        "grid": grid.iter().map(|g| g.class).collect::<Vec<_>>(),
        "train": { "points": rows(&train.inputs), "labels": train.labels },
        "test": { "points": rows(&test.inputs), "labels": test.labels, "predicted": outcome.predicted_labels },
        "centres": rows(outcome.model.centres()),
        "alpha": cfg.alpha,
        "accuracy": outcome.report.accuracy,
    }))
}

/// Kernel value against the separation `δ` of two scalar inputs, for the
/// simulated fidelity kernel and a Gaussian kernel.
pub fn kernel_profile(alpha: f64, gamma: f64, span: f64) -> Result<Value> {
    if !(span.is_finite() && span > 0.0) {
        return Err(qrbf::Error::Domain(format!("span must be positive, got {span}")));
    }
    let quantum = Kernel::new(KernelSpec::QuantumFidelity(FeatureMap::new(vec![alpha], 0)?))?;
    let gaussian = Kernel::new(KernelSpec::Gaussian { gamma })?;
    let deltas = linspace(-span, span, PROFILE_POINTS);
    let eval = |k: &Kernel| -> Result<Vec<f64>> { deltas.iter().map(|&d| k.eval(&[0.0], &[d])).collect() };
    Ok(json!({
        "delta": deltas,
        "quantum": eval(&quantum)?,
        "gaussian": eval(&gaussian)?,
    }))
}

#[cfg(target_arch = "wasm32")]
mod bindings {
    use wasm_bindgen::prelude::*;

    fn finish(v: qrbf::Result<serde_json::Value>) -> Result<String, JsError> {
        v.map(|v| v.to_string()).map_err(|e| JsError::new(&e.to_string()))
    }

    #[wasm_bindgen(js_name = interpolationCurve)]
    pub fn interpolation_curve(dataset: &str, n_centres: usize, noise: f64, seed: u32) -> Result<String, JsError> {
        finish(super::interpolation_curve(dataset, n_centres, noise, seed.into()))
    }

    #[wasm_bindgen(js_name = spiralBoundary)]
    pub fn spiral_boundary(n_centres: usize, alpha_scale: f64, seed: u32, resolution: usize) -> Result<String, JsError> {
        finish(super::spiral_boundary(n_centres, alpha_scale, seed.into(), resolution))
    }

    #[wasm_bindgen(js_name = kernelProfile)]
    pub fn kernel_profile(alpha: f64, gamma: f64, span: f64) -> Result<String, JsError> {
        finish(super::kernel_profile(alpha, gamma, span))
    }
}
