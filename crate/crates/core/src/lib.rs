//! Radial basis function networks with quantum fidelity kernels.
//!
//! Classical inputs are written onto simulated qubits (two per feature,
//! followed by an entangling unitary), the kernel matrix is filled with state
//! overlaps `|⟨ψ(y)|ψ(x)⟩|²`, and the output weights are the minimum-norm
//! least-squares solution `β* = Φ⁺F`. Classical distance kernels share the
//! same network so the two can be compared on equal footing.
//!
//! ```
//! use nalgebra::DMatrix;
//! use qrbf::{FeatureMap, KernelSpec, RbfModel};
//!
//! let x = DMatrix::from_row_slice(4, 1, &[0.0, 1.0, 2.0, 3.0]);
//! let f = x.map(f64::sin);
//! let spec = KernelSpec::QuantumFidelity(FeatureMap::new(vec![0.5], 0).unwrap());
//! let model = RbfModel::fit(&x, &f, &x, &spec).unwrap();
//! let fitted = model.predict(&x).unwrap();
//! assert!((fitted - f).abs().max() < 1e-8);
//! ```

pub mod centres;
pub mod datasets;
mod error;
pub mod evaluation;
pub mod experiment;
pub mod kernels;
pub mod quantum_state;
pub mod rbf_network;

pub use centres::CentreKind;
pub use datasets::{AlphaRule, Dataset, SplitDataset};
pub use error::{Error, Result};
pub use evaluation::EvaluationReport;
pub use experiment::{run_experiment, run_suite, ExperimentConfig, Preset};
pub use kernels::{build_kernel_matrix, Kernel, KernelMatrix, KernelSpec};
pub use quantum_state::{Entangler, FeatureMap, StateVector};
pub use rbf_network::RbfModel;
