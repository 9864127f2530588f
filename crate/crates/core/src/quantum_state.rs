//! Dense statevector simulation of the feature-map circuit.
//!
//! Every scaled feature `α_p x_p` is written onto two qubits with the rotation
//! `R̃x(θ) = cos θ · I − i sin θ · X` (no half angle), the 2P single-qubit
//! states are tensored together and a fixed entangling unitary is applied:
//!
//! ```text
//! |ψ(x)⟩ = U · ⨂_p [R̃x(α_p x_p)|0⟩ ⊗ R̃x(α_p x_p)|0⟩]
//! ```
//!
//! Amplitude ordering: qubit 0 is the most significant bit of the amplitude
//! index, so `|q0 q1⟩` lives at index `2·q0 + q1`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{config, domain, Error, Result};

/// Largest supported feature count (8 qubits, 256 amplitudes).
pub const MAX_FEATURES: usize = 4;

const NORM_TOLERANCE: f64 = 1e-10;

/// Pure state of `Q` qubits stored as `2^Q` complex amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.is_empty() || !amplitudes.len().is_power_of_two() {
            return Err(domain!(
                "statevector length {} is not a power of two",
                amplitudes.len()
            ));
        }
        Ok(Self { amplitudes })
    }

    /// The computational basis state `|index⟩` on `qubits` qubits.
    pub fn basis(qubits: usize, index: usize) -> Result<Self> {
        let dim = 1usize << qubits;
        if index >= dim {
            return Err(domain!("basis index {index} out of range for {qubits} qubits"));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); dim];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Ok(Self { amplitudes })
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn qubit_count(&self) -> usize {
        self.amplitudes.len().trailing_zeros() as usize
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        if self.len() != other.len() {
            return Err(domain!(
                "statevector lengths differ: {} vs {}",
                self.len(),
                other.len()
            ));
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Tensor product `self ⊗ other`; `self` supplies the high-order qubits.
    pub fn tensor(&self, other: &StateVector) -> StateVector {
        let mut amplitudes = Vec::with_capacity(self.len() * other.len());
        for a in &self.amplitudes {
            amplitudes.extend(other.amplitudes.iter().map(|b| a * b));
        }
        StateVector { amplitudes }
    }
}

/// Which circuit an [`Entangler`] was built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum EntanglerKind {
    Identity,
    Cnot,
    Haar { seed: u64 },
}

/// Entangling unitary applied after the rotation layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Entangler {
    kind: EntanglerKind,
    matrix: DMatrix<Complex64>,
}

impl Entangler {
    pub fn identity(qubits: usize) -> Self {
        let dim = 1usize << qubits;
        Self {
            kind: EntanglerKind::Identity,
            matrix: DMatrix::identity(dim, dim),
        }
    }

    /// Two-qubit CNOT with qubit 0 as control.
    pub fn cnot() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let mut matrix = DMatrix::zeros(4, 4);
        matrix[(0, 0)] = one;
        matrix[(1, 1)] = one;
        matrix[(2, 3)] = one;
        matrix[(3, 2)] = one;
        Self {
            kind: EntanglerKind::Cnot,
            matrix,
        }
    }

    /// Haar-random unitary on `qubits` qubits, deterministic in `seed`.
    pub fn haar(qubits: usize, seed: u64) -> Self {
        Self {
            kind: EntanglerKind::Haar { seed },
            matrix: haar_unitary(1usize << qubits, seed),
        }
    }

    pub fn kind(&self) -> EntanglerKind {
        self.kind
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn qubit_count(&self) -> usize {
        self.dim().trailing_zeros() as usize
    }

    /// Largest entry of `|U†U − I|`.
    pub fn unitarity_error(&self) -> f64 {
        let gram = self.matrix.adjoint() * &self.matrix;
        let n = gram.nrows();
        let mut worst = 0.0f64;
        for j in 0..n {
            for i in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((gram[(i, j)] - Complex64::new(target, 0.0)).norm());
            }
        }
        worst
    }

    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        if state.len() != self.dim() {
            return Err(config!(
                "entangler acts on {} amplitudes, state has {}",
                self.dim(),
                state.len()
            ));
        }
        if self.kind == EntanglerKind::Identity {
            return Ok(state.clone());
        }
        let n = self.dim();
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        // column-major storage: accumulate column by column
        for (j, amp) in state.amplitudes.iter().enumerate() {
            if *amp == Complex64::new(0.0, 0.0) {
                continue;
            }
            let column = self.matrix.column(j);
            for (o, u) in out.iter_mut().zip(column.iter()) {
                *o += u * amp;
            }
        }
        Ok(StateVector { amplitudes: out })
    }
}

/// Haar-distributed unitary of dimension `dim`.
///
/// Draws an i.i.d. complex standard-normal matrix, takes its QR factorisation
/// and rescales each column of Q by the phase of the matching diagonal entry
/// of R, which makes the distribution exactly Haar.
pub fn haar_unitary(dim: usize, seed: u64) -> DMatrix<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ginibre = DMatrix::from_fn(dim, dim, |_, _| {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        Complex64::new(re, im)
    });
    let qr = ginibre.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// CNOT for a single feature, Haar-random on `2P` qubits otherwise.
pub fn make_entangler(feature_count: usize, seed: u64) -> Result<Entangler> {
    match feature_count {
        1 => Ok(Entangler::cnot()),
        2..=MAX_FEATURES => Ok(Entangler::haar(2 * feature_count, seed)),
        p => Err(Error::Capability(format!(
            "feature count {p} outside supported range 1..={MAX_FEATURES}"
        ))),
    }
}

/// Per-feature scaling and entangler seed shared by every datapoint and centre
/// of one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMap {
    alpha: Vec<f64>,
    entangler_seed: u64,
}

impl FeatureMap {
    pub fn new(alpha: Vec<f64>, entangler_seed: u64) -> Result<Self> {
        if alpha.is_empty() {
            return Err(config!("feature map needs at least one feature"));
        }
        if let Some(a) = alpha.iter().find(|a| !a.is_finite() || **a <= 0.0) {
            return Err(domain!("alpha entries must be finite and positive, got {a}"));
        }
        Ok(Self {
            alpha,
            entangler_seed,
        })
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn feature_count(&self) -> usize {
        self.alpha.len()
    }

    pub fn qubit_count(&self) -> usize {
        2 * self.alpha.len()
    }

    pub fn entangler_seed(&self) -> u64 {
        self.entangler_seed
    }

    pub fn entangler(&self) -> Result<Entangler> {
        make_entangler(self.feature_count(), self.entangler_seed)
    }
}

/// `R̃x(θ)|0⟩ = (cos θ, −i sin θ)`.
pub fn rx_state(theta: f64) -> Result<StateVector> {
    if !theta.is_finite() {
        return Err(domain!("rotation angle must be finite, got {theta}"));
    }
    Ok(StateVector {
        amplitudes: vec![
            Complex64::new(theta.cos(), 0.0),
            Complex64::new(0.0, -theta.sin()),
        ],
    })
}

/// Product state before the entangler: two identical rotated qubits per feature.
pub fn rotation_layer(x: &[f64], map: &FeatureMap) -> Result<StateVector> {
    if x.len() != map.feature_count() {
        return Err(config!(
            "datapoint has {} features, feature map expects {}",
            x.len(),
            map.feature_count()
        ));
    }
    let mut state = StateVector {
        amplitudes: vec![Complex64::new(1.0, 0.0)],
    };
    for (value, alpha) in x.iter().zip(map.alpha()) {
        let qubit = rx_state(alpha * value)?;
        state = state.tensor(&qubit).tensor(&qubit);
    }
    Ok(state)
}

pub fn encode(x: &[f64], map: &FeatureMap, entangler: &Entangler) -> Result<StateVector> {
    if entangler.qubit_count() != map.qubit_count() {
        return Err(config!(
            "entangler acts on {} qubits, feature map needs {}",
            entangler.qubit_count(),
            map.qubit_count()
        ));
    }
    let state = entangler.apply(&rotation_layer(x, map)?)?;
    debug_assert!((state.norm() - 1.0).abs() < NORM_TOLERANCE);
    Ok(state)
}

/// `|⟨a|b⟩|²`, clamped to `[0, 1]`.
pub fn fidelity(a: &StateVector, b: &StateVector) -> Result<f64> {
    Ok(a.inner(b)?.norm_sqr().clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn assert_state(state: &StateVector, expected: &[Complex64]) {
        assert_eq!(state.len(), expected.len());
        for (a, e) in state.amplitudes().iter().zip(expected) {
            assert!((a - e).norm() < 1e-12, "{a} != {e}");
        }
    }

    #[test]
    fn rx_examples() {
        assert_state(&rx_state(0.0).unwrap(), &[c(1.0, 0.0), c(0.0, 0.0)]);
        assert_state(&rx_state(FRAC_PI_2).unwrap(), &[c(0.0, 0.0), c(0.0, -1.0)]);
        let h = 2f64.sqrt() / 2.0;
        assert_state(&rx_state(FRAC_PI_4).unwrap(), &[c(h, 0.0), c(0.0, -h)]);
        assert!(matches!(rx_state(f64::NAN), Err(Error::Domain(_))));
        assert!(rx_state(f64::INFINITY).is_err());
    }

    #[test]
    fn encode_zero_with_cnot_is_ground_state() {
        let map = FeatureMap::new(vec![1.0], 0).unwrap();
        let state = encode(&[0.0], &map, &Entangler::cnot()).unwrap();
        assert_state(&state, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
    }

    #[test]
    fn encode_half_pi_identity() {
        let map = FeatureMap::new(vec![1.0], 0).unwrap();
        let state = encode(&[FRAC_PI_2], &map, &Entangler::identity(2)).unwrap();
        let z = c(0.0, 0.0);
        assert_state(&state, &[z, z, z, c(-1.0, 0.0)]);
    }

    #[test]
    fn encode_quarter_pi_two_features_is_flat() {
        let map = FeatureMap::new(vec![1.0, 1.0], 0).unwrap();
        let state = encode(&[FRAC_PI_4, FRAC_PI_4], &map, &Entangler::identity(4)).unwrap();
        assert_eq!(state.len(), 16);
        for a in state.amplitudes() {
            assert!((a.norm() - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn encode_rejects_mismatches() {
        let map = FeatureMap::new(vec![1.0, 1.0], 0).unwrap();
        let err = encode(&[0.1], &map, &Entangler::identity(4)).unwrap_err();
        assert_eq!(err.code(), "configuration");
        let err = encode(&[0.1, 0.2], &map, &Entangler::cnot()).unwrap_err();
        assert_eq!(err.code(), "configuration");
    }

    #[test]
    fn cnot_matrix_is_exact() {
        let u = make_entangler(1, 99).unwrap();
        assert_eq!(u.kind(), EntanglerKind::Cnot);
        let expected = [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]];
        for (i, row) in expected.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                assert_eq!(u.matrix()[(i, j)], c(*v as f64, 0.0));
            }
        }
        // |10⟩ → |11⟩ with qubit 0 as the high bit
        let flipped = u.apply(&StateVector::basis(2, 2).unwrap()).unwrap();
        assert_eq!(flipped, StateVector::basis(2, 3).unwrap());
    }

    #[test]
    fn haar_is_unitary_and_deterministic() {
        let a = make_entangler(2, 7).unwrap();
        assert_eq!(a.dim(), 16);
        assert!(a.unitarity_error() < 1e-10);
        let b = make_entangler(2, 7).unwrap();
        assert_eq!(a.matrix(), b.matrix());
        let other = make_entangler(2, 8).unwrap();
        assert_ne!(a.matrix(), other.matrix());
    }

    #[test]
    fn entangler_range() {
        assert_eq!(make_entangler(0, 1).unwrap_err().code(), "capability");
        assert_eq!(make_entangler(5, 1).unwrap_err().code(), "capability");
    }

    #[test]
    fn fidelity_examples() {
        let map = FeatureMap::new(vec![1.0], 3).unwrap();
        let u = map.entangler().unwrap();
        let a = encode(&[0.0], &map, &u).unwrap();
        let b = encode(&[FRAC_PI_4], &map, &u).unwrap();
        assert!((fidelity(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        assert!((fidelity(&a, &b).unwrap() - 0.25).abs() < 1e-12);
        let ground = StateVector::basis(2, 0).unwrap();
        let top = StateVector::basis(2, 3).unwrap();
        assert_eq!(fidelity(&ground, &top).unwrap(), 0.0);
        let short = StateVector::basis(1, 0).unwrap();
        assert_eq!(fidelity(&ground, &short).unwrap_err().code(), "domain");
    }

    #[test]
    fn feature_map_validation() {
        assert!(FeatureMap::new(vec![], 0).is_err());
        assert!(FeatureMap::new(vec![1.0, 0.0], 0).is_err());
        assert!(FeatureMap::new(vec![-1.0], 0).is_err());
        assert!(FeatureMap::new(vec![f64::NAN], 0).is_err());
    }

    #[test]
    fn statevector_rejects_bad_length() {
        assert!(StateVector::new(vec![c(1.0, 0.0); 3]).is_err());
        assert!(StateVector::new(vec![]).is_err());
        assert_eq!(StateVector::new(vec![c(1.0, 0.0); 8]).unwrap().qubit_count(), 3);
    }
}
