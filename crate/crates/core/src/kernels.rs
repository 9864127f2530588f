//! Kernel functions and kernel-matrix assembly.
//!
//! Classical kernels act on the Euclidean distance `z = ‖x − y‖`. The quantum
//! kernel is the fidelity of the two encoded states, used as-is (a linear
//! kernel function on top of the overlap).

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{config, domain, Error, Result};
use crate::quantum_state::{encode, fidelity, Entangler, FeatureMap, StateVector};

/// `m × n` matrix of kernel values between datapoints (rows) and centres (columns).
pub type KernelMatrix = DMatrix<f64>;

/// One kernel applied uniformly to every centre.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum KernelSpec {
    QuantumFidelity(FeatureMap),
    Linear,
    Gaussian { gamma: f64 },
    Spline,
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            KernelSpec::Gaussian { gamma } if !(gamma.is_finite() && *gamma > 0.0) => {
                Err(domain!("gaussian gamma must be finite and positive, got {gamma}"))
            }
            _ => Ok(()),
        }
    }

    pub fn is_quantum(&self) -> bool {
        matches!(self, KernelSpec::QuantumFidelity(_))
    }

    pub fn name(&self) -> &'static str {
        match self {
            KernelSpec::QuantumFidelity(_) => "quantum_fidelity",
            KernelSpec::Linear => "linear",
            KernelSpec::Gaussian { .. } => "gaussian",
            KernelSpec::Spline => "spline",
        }
    }
}

/// Classical kernel function of a distance `z ≥ 0`.
pub fn eval_classical(spec: &KernelSpec, z: f64) -> Result<f64> {
    if !z.is_finite() || z < 0.0 {
        return Err(domain!("distance must be finite and nonnegative, got {z}"));
    }
    match spec {
        KernelSpec::Linear => Ok(z),
        KernelSpec::Gaussian { gamma } => Ok((-gamma * z * z).exp()),
        // z log z → 0 as z → 0⁺
        KernelSpec::Spline if z == 0.0 => Ok(0.0),
        KernelSpec::Spline => Ok(z * z.ln()),
        KernelSpec::QuantumFidelity(_) => Err(Error::Capability(
            "quantum fidelity kernel is not a function of distance".into(),
        )),
    }
}

pub fn eval_quantum(x: &[f64], y: &[f64], map: &FeatureMap, entangler: &Entangler) -> Result<f64> {
    if x.len() != y.len() {
        return Err(domain!("datapoint lengths differ: {} vs {}", x.len(), y.len()));
    }
    if x.len() != map.feature_count() {
        return Err(domain!(
            "datapoint has {} features, feature map expects {}",
            x.len(),
            map.feature_count()
        ));
    }
    fidelity(&encode(x, map, entangler)?, &encode(y, map, entangler)?)
}

pub fn euclidean(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

fn rows(matrix: &DMatrix<f64>) -> Vec<Vec<f64>> {
    matrix
        .row_iter()
        .map(|r| r.iter().copied().collect())
        .collect()
}

/// A kernel ready for repeated evaluation; the quantum variant caches its
/// entangler so it is generated once per model.
#[derive(Debug, Clone)]
pub struct Kernel {
    spec: KernelSpec,
    entangler: Option<Entangler>,
}

impl Kernel {
    pub fn new(spec: KernelSpec) -> Result<Self> {
        spec.validate()?;
        let entangler = match &spec {
            KernelSpec::QuantumFidelity(map) => Some(map.entangler()?),
            _ => None,
        };
        Ok(Self { spec, entangler })
    }

    /// Quantum kernel with an explicitly supplied entangler (e.g. identity).
    pub fn with_entangler(map: FeatureMap, entangler: Entangler) -> Result<Self> {
        if entangler.qubit_count() != map.qubit_count() {
            return Err(config!(
                "entangler acts on {} qubits, feature map needs {}",
                entangler.qubit_count(),
                map.qubit_count()
            ));
        }
        Ok(Self {
            spec: KernelSpec::QuantumFidelity(map),
            entangler: Some(entangler),
        })
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn entangler(&self) -> Option<&Entangler> {
        self.entangler.as_ref()
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        match (&self.spec, &self.entangler) {
            (KernelSpec::QuantumFidelity(map), Some(u)) => eval_quantum(x, y, map, u),
            _ => {
                if x.len() != y.len() {
                    return Err(domain!("datapoint lengths differ: {} vs {}", x.len(), y.len()));
                }
                eval_classical(&self.spec, euclidean(x, y))
            }
        }
    }

    fn encode_rows(&self, matrix: &DMatrix<f64>) -> Result<Vec<StateVector>> {
        let (KernelSpec::QuantumFidelity(map), Some(u)) = (&self.spec, &self.entangler) else {
            unreachable!("encode_rows called on a classical kernel");
        };
        rows(matrix).iter().map(|r| encode(r, map, u)).collect()
    }

    /// Entry `(i, j)` is `kernel(data_i, centre_j)`.
    pub fn matrix(&self, data: &DMatrix<f64>, centres: &DMatrix<f64>) -> Result<KernelMatrix> {
        if data.ncols() != centres.ncols() {
            return Err(config!(
                "data has {} columns, centres have {}",
                data.ncols(),
                centres.ncols()
            ));
        }
        if data.nrows() == 0 || centres.nrows() == 0 {
            return Err(config!(
                "kernel matrix needs at least one datapoint and one centre"
            ));
        }
        let (m, n) = (data.nrows(), centres.nrows());
        if self.spec.is_quantum() {
            // every state is encoded once, then only overlaps are needed
            let data_states = self.encode_rows(data)?;
            let centre_states = self.encode_rows(centres)?;
            let mut phi = DMatrix::zeros(m, n);
            for (i, a) in data_states.iter().enumerate() {
                for (j, b) in centre_states.iter().enumerate() {
                    phi[(i, j)] = fidelity(b, a)?;
                }
            }
            Ok(phi)
        } else {
            let data_rows = rows(data);
            let centre_rows = rows(centres);
            let mut phi = DMatrix::zeros(m, n);
            for (i, x) in data_rows.iter().enumerate() {
                for (j, y) in centre_rows.iter().enumerate() {
                    phi[(i, j)] = eval_classical(&self.spec, euclidean(x, y))?;
                }
            }
            if phi.iter().any(|v| !v.is_finite()) {
                return Err(Error::Numeric("kernel matrix has non-finite entries".into()));
            }
            Ok(phi)
        }
    }
}

pub fn build_kernel_matrix(
    data: &DMatrix<f64>,
    centres: &DMatrix<f64>,
    spec: &KernelSpec,
) -> Result<KernelMatrix> {
    Kernel::new(spec.clone())?.matrix(data, centres)
}
