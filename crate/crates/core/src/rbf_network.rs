//! The RBF network: `Φ β = F` solved with the Moore–Penrose pseudoinverse.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{config, domain, Error, Result};
use crate::kernels::{Kernel, KernelSpec};

/// Default singular-value cutoff relative to the largest singular value.
pub fn default_rcond(rows: usize, cols: usize) -> f64 {
    f64::EPSILON * rows.max(cols) as f64
}

fn ensure_finite(name: &str, m: &DMatrix<f64>) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(domain!("{name} contains non-finite entries"))
    }
}

/// Moore–Penrose pseudoinverse via SVD. Singular values below
/// `rcond · σ_max` are treated as zero.
pub fn pseudo_inverse(phi: &DMatrix<f64>, rcond: Option<f64>) -> Result<DMatrix<f64>> {
    let (m, n) = phi.shape();
    if m == 0 || n == 0 {
        return Err(config!("cannot invert an empty {m}×{n} matrix"));
    }
    ensure_finite("kernel matrix", phi)?;
    let rcond = rcond.unwrap_or_else(|| default_rcond(m, n));
    if !(rcond.is_finite() && rcond >= 0.0) {
        return Err(domain!("rcond must be finite and nonnegative, got {rcond}"));
    }
    // nalgebra's SVD occasionally returns a wrong factorization for
    // rank-deficient input, so the decomposition is done with faer.
    let svd = faer::Mat::<f64>::from_fn(m, n, |i, j| phi[(i, j)])
        .thin_svd()
        .map_err(|e| Error::Numeric(format!("SVD did not converge: {e:?}")))?;
    let (u, s, v) = (svd.U(), svd.S(), svd.V());
    let sigma: Vec<f64> = (0..s.dim()).map(|k| s[k]).collect();
    let sigma_max = sigma.iter().copied().fold(0.0, f64::max);
    let cutoff = rcond * sigma_max;
    // Φ⁺ = V Σ⁺ Uᵀ
    let mut pinv = DMatrix::zeros(n, m);
    for (k, &s) in sigma.iter().enumerate() {
        if s <= cutoff || s == 0.0 {
            continue;
        }
        for j in 0..m {
            let w = u[(j, k)] / s;
            for i in 0..n {
                pinv[(i, j)] += v[(i, k)] * w;
            }
        }
    }
    Ok(pinv)
}

/// Minimum-norm least-squares solution `β* = Φ⁺ F`.
pub fn pseudo_inverse_solve(
    phi: &DMatrix<f64>,
    targets: &DMatrix<f64>,
    rcond: Option<f64>,
) -> Result<DMatrix<f64>> {
    if phi.nrows() != targets.nrows() {
        return Err(config!(
            "kernel matrix has {} rows, targets have {}",
            phi.nrows(),
            targets.nrows()
        ));
    }
    ensure_finite("targets", targets)?;
    Ok(pseudo_inverse(phi, rcond)? * targets)
}

/// Binary `m × q` target matrix with a single 1 per row.
pub fn one_hot(labels: &[usize], classes: usize) -> Result<DMatrix<f64>> {
    if classes == 0 {
        return Err(config!("one-hot encoding needs at least one class"));
    }
    let mut out = DMatrix::zeros(labels.len(), classes);
    for (i, &label) in labels.iter().enumerate() {
        if label >= classes {
            return Err(domain!("label {label} at row {i} outside 0..{classes}"));
        }
        out[(i, label)] = 1.0;
    }
    Ok(out)
}

/// Row-wise argmax; ties go to the lowest column index.
pub fn argmax_rows(outputs: &DMatrix<f64>) -> Vec<usize> {
    outputs
        .row_iter()
        .map(|row| {
            let mut best = 0;
            for (j, v) in row.iter().enumerate() {
                if *v > row[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}

/// A fitted RBF network. Immutable once built.
#[derive(Debug, Clone)]
pub struct RbfModel {
    centres: DMatrix<f64>,
    beta: DMatrix<f64>,
    kernel: Kernel,
}

impl RbfModel {
    /// Assemble a model from already-known coefficients.
    pub fn from_parts(centres: DMatrix<f64>, beta: DMatrix<f64>, kernel: Kernel) -> Result<Self> {
        if centres.nrows() == 0 {
            return Err(config!("a model needs at least one centre"));
        }
        if beta.nrows() != centres.nrows() {
            return Err(config!(
                "beta has {} rows but there are {} centres",
                beta.nrows(),
                centres.nrows()
            ));
        }
        if let KernelSpec::QuantumFidelity(map) = kernel.spec() {
            if map.feature_count() != centres.ncols() {
                return Err(config!(
                    "feature map expects {} features, centres have {}",
                    map.feature_count(),
                    centres.ncols()
                ));
            }
        }
        Ok(Self {
            centres,
            beta,
            kernel,
        })
    }

    pub fn fit(
        data: &DMatrix<f64>,
        targets: &DMatrix<f64>,
        centres: &DMatrix<f64>,
        spec: &KernelSpec,
    ) -> Result<Self> {
        Self::fit_with(data, targets, centres, Kernel::new(spec.clone())?, None)
    }

    /// Fit with a prepared kernel and an explicit singular-value cutoff.
    pub fn fit_with(
        data: &DMatrix<f64>,
        targets: &DMatrix<f64>,
        centres: &DMatrix<f64>,
        kernel: Kernel,
        rcond: Option<f64>,
    ) -> Result<Self> {
        if data.nrows() != targets.nrows() {
            return Err(config!(
                "{} datapoints but {} target rows",
                data.nrows(),
                targets.nrows()
            ));
        }
        if targets.ncols() == 0 {
            return Err(config!("targets need at least one column"));
        }
        if centres.nrows() == data.nrows() {
            log::warn!(
                "{} centres for {} datapoints: strict interpolation, expect overfitting",
                centres.nrows(),
                data.nrows()
            );
        }
        let phi = kernel.matrix(data, centres)?;
        let beta = pseudo_inverse_solve(&phi, targets, rcond)?;
        Self::from_parts(centres.clone(), beta, kernel)
    }

    pub fn centres(&self) -> &DMatrix<f64> {
        &self.centres
    }

    pub fn beta(&self) -> &DMatrix<f64> {
        &self.beta
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn feature_count(&self) -> usize {
        self.centres.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.beta.ncols()
    }

    /// `Φ_test β*`.
    pub fn predict(&self, data: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if data.ncols() != self.feature_count() {
            return Err(config!(
                "model expects {} features, data has {}",
                self.feature_count(),
                data.ncols()
            ));
        }
        if data.nrows() == 0 {
            return Ok(DMatrix::zeros(0, self.output_dim()));
        }
        Ok(self.kernel.matrix(data, &self.centres)? * &self.beta)
    }

    pub fn classify(&self, data: &DMatrix<f64>) -> Result<Vec<usize>> {
        if self.output_dim() < 2 {
            return Err(config!(
                "classification needs at least two outputs, model has {}",
                self.output_dim()
            ));
        }
        Ok(argmax_rows(&self.predict(data)?))
    }

    pub fn to_file(&self) -> ModelFile {
        ModelFile {
            format: MODEL_FORMAT.to_string(),
            version: MODEL_VERSION,
            kernel: self.kernel.spec().clone(),
            centres: matrix_rows(&self.centres),
            beta: matrix_rows(&self.beta),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(&self.to_file())
            .map_err(|e| Error::Serialization(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile =
            serde_json::from_str(text).map_err(|e| Error::Serialization(e.to_string()))?;
        file.into_model()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

const MODEL_FORMAT: &str = "qrbf-model";
const MODEL_VERSION: u32 = 1;

/// On-disk model document. The entangler is regenerated from the seed stored
/// in the kernel's feature map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub kernel: KernelSpec,
    pub centres: Vec<Vec<f64>>,
    pub beta: Vec<Vec<f64>>,
}

impl ModelFile {
    pub fn into_model(self) -> Result<RbfModel> {
        if self.format != MODEL_FORMAT || self.version != MODEL_VERSION {
            return Err(Error::Serialization(format!(
                "unsupported model format {} v{}",
                self.format, self.version
            )));
        }
        let centres = rows_matrix(&self.centres)?;
        let beta = rows_matrix(&self.beta)?;
        RbfModel::from_parts(centres, beta, Kernel::new(self.kernel)?)
    }
}

pub(crate) fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

pub(crate) fn rows_matrix(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let ncols = rows.first().map_or(0, Vec::len);
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != ncols) {
        return Err(config!("row {i} has {} entries, expected {ncols}", r.len()));
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}
