//! Hidden-layer centre selection.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{config, domain, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CentreKind {
    /// Equally spaced over the input interval (single feature only).
    Uniform,
    /// Per-feature normal draws matched to the data's mean and spread.
    Gaussian,
    KMeans,
}

/// `n` equally spaced points on `[low, high]` inclusive. `n = 1` gives `low`.
pub fn uniform_centres(low: &[f64], high: &[f64], n: usize) -> Result<DMatrix<f64>> {
    if n == 0 {
        return Err(config!("centre count must be at least 1"));
    }
    if low.len() != high.len() {
        return Err(config!("bounds have different lengths"));
    }
    if low.len() != 1 {
        return Err(crate::Error::Capability(format!(
            "uniform grids are only defined for one feature, got {}",
            low.len()
        )));
    }
    let (lo, hi) = (low[0], high[0]);
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(domain!("uniform centres need low < high, got [{lo}, {hi}]"));
    }
    Ok(DMatrix::from_fn(n, 1, |i, _| {
        if n == 1 {
            lo
        } else if i == n - 1 {
            hi
        } else {
            lo + (hi - lo) * i as f64 / (n - 1) as f64
        }
    }))
}

/// Per-feature sample mean and standard deviation (n − 1 denominator).
pub fn feature_stats(data: &DMatrix<f64>) -> Vec<(f64, f64)> {
    let m = data.nrows() as f64;
    data.column_iter()
        .map(|col| {
            let mean = col.iter().sum::<f64>() / m;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0);
            (mean, var.sqrt())
        })
        .collect()
}

pub fn gaussian_centres(data: &DMatrix<f64>, n: usize, seed: u64) -> Result<DMatrix<f64>> {
    if n == 0 {
        return Err(config!("centre count must be at least 1"));
    }
    if data.nrows() < 2 {
        return Err(config!(
            "gaussian centre sampling needs at least 2 datapoints, got {}",
            data.nrows()
        ));
    }
    let stats = feature_stats(data);
    let mut samplers = Vec::with_capacity(stats.len());
    for (p, (mean, std)) in stats.iter().enumerate() {
        if *std > 0.0 && std.is_finite() {
            samplers.push(Some(Normal::new(*mean, *std).map_err(|e| domain!("{e}"))?));
        } else {
            log::warn!("feature {p} has zero variance; centres use its mean");
            samplers.push(None);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centres = DMatrix::zeros(n, stats.len());
    for i in 0..n {
        for (p, sampler) in samplers.iter().enumerate() {
            centres[(i, p)] = match sampler {
                Some(normal) => normal.sample(&mut rng),
                None => stats[p].0,
            };
        }
    }
    Ok(centres)
}

fn squared_distance(data: &DMatrix<f64>, i: usize, centres: &DMatrix<f64>, k: usize) -> f64 {
    data.row(i)
        .iter()
        .zip(centres.row(k).iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum()
}

fn nearest(data: &DMatrix<f64>, i: usize, centres: &DMatrix<f64>) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for k in 0..centres.nrows() {
        let d = squared_distance(data, i, centres, k);
        if d < best.1 {
            best = (k, d);
        }
    }
    best
}

/// Result of a Lloyd run.
#[derive(Debug, Clone)]
pub struct KMeansFit {
    pub centres: DMatrix<f64>,
    pub assignment: Vec<usize>,
    pub iterations: usize,
    /// Within-cluster sum of squares after each update step.
    pub objective_history: Vec<f64>,
}

/// Lloyd's algorithm from a seeded random partition.
///
/// The initial assignment deals a shuffled permutation of the points
/// round-robin into `n` clusters, so no cluster starts empty. An empty cluster
/// later on is re-seeded with the point farthest from its current centre.
pub fn kmeans(data: &DMatrix<f64>, n: usize, seed: u64, max_iters: usize) -> Result<KMeansFit> {
    let (m, dim) = data.shape();
    if n == 0 {
        return Err(config!("centre count must be at least 1"));
    }
    if n > m {
        return Err(config!("k-means needs n ≤ m, got n = {n}, m = {m}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..m).collect();
    for i in (1..m).rev() {
        order.swap(i, rng.random_range(0..=i));
    }
    let mut assignment = vec![0; m];
    for (slot, &i) in order.iter().enumerate() {
        assignment[i] = slot % n;
    }

    let mut centres = DMatrix::zeros(n, dim);
    let mut history = Vec::new();
    let mut iterations = 0;
    loop {
        // update step
        let mut counts = vec![0usize; n];
        centres.fill(0.0);
        for i in 0..m {
            let k = assignment[i];
            counts[k] += 1;
            for p in 0..dim {
                centres[(k, p)] += data[(i, p)];
            }
        }
        for k in 0..n {
            if counts[k] > 0 {
                for p in 0..dim {
                    centres[(k, p)] /= counts[k] as f64;
                }
            }
        }
        for k in (0..n).filter(|&k| counts[k] == 0) {
            let far = (0..m)
                .max_by(|&a, &b| {
                    let da = squared_distance(data, a, &centres, assignment[a]);
                    let db = squared_distance(data, b, &centres, assignment[b]);
                    da.total_cmp(&db).then(b.cmp(&a))
                })
                .expect("m ≥ n ≥ 1");
            centres.set_row(k, &data.row(far));
            assignment[far] = k;
        }
        history.push(
            (0..m)
                .map(|i| squared_distance(data, i, &centres, assignment[i]))
                .sum(),
        );
        if iterations >= max_iters {
            break;
        }
        iterations += 1;

        // assignment step; keep the current cluster on ties
        let mut changed = false;
        for (i, a) in assignment.iter_mut().enumerate() {
            let (k, d) = nearest(data, i, &centres);
            if k != *a && d < squared_distance(data, i, &centres, *a) {
                *a = k;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    Ok(KMeansFit {
        centres,
        assignment,
        iterations,
        objective_history: history,
    })
}

pub fn kmeans_centres(
    data: &DMatrix<f64>,
    n: usize,
    seed: u64,
    max_iters: usize,
) -> Result<DMatrix<f64>> {
    Ok(kmeans(data, n, seed, max_iters)?.centres)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;

    #[test]
    fn uniform_examples() {
        let c = uniform_centres(&[0.0], &[2.0 * PI], 5).unwrap();
        let expected = [0.0, PI / 2.0, PI, 1.5 * PI, 2.0 * PI];
        for (a, e) in c.iter().zip(expected) {
            assert!((a - e).abs() < 1e-15);
        }
        assert_eq!(uniform_centres(&[0.0], &[1.0], 1).unwrap().as_slice(), &[0.0]);
        assert_eq!(
            uniform_centres(&[0.0], &[10.0], 3).unwrap().as_slice(),
            &[0.0, 5.0, 10.0]
        );
    }

    #[test]
    fn uniform_errors() {
        assert_eq!(uniform_centres(&[1.0], &[1.0], 3).unwrap_err().code(), "domain");
        assert_eq!(uniform_centres(&[2.0], &[1.0], 3).unwrap_err().code(), "domain");
        assert_eq!(
            uniform_centres(&[0.0, 0.0], &[1.0, 1.0], 3).unwrap_err().code(),
            "capability"
        );
        assert!(uniform_centres(&[0.0], &[1.0], 0).is_err());
    }

    #[test]
    fn gaussian_is_deterministic() {
        let data = DMatrix::from_row_slice(4, 2, &[0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 8.0]);
        let a = gaussian_centres(&data, 10, 3).unwrap();
        let b = gaussian_centres(&data, 10, 3).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, gaussian_centres(&data, 10, 4).unwrap());
        assert_eq!(a.shape(), (10, 2));
    }

    #[test]
    fn gaussian_zero_variance_uses_mean() {
        let data = DMatrix::from_element(5, 3, 2.5);
        let c = gaussian_centres(&data, 7, 1).unwrap();
        assert!(c.iter().all(|v| *v == 2.5));
    }

    #[test]
    fn gaussian_needs_two_points() {
        let data = DMatrix::from_element(1, 1, 0.0);
        assert!(gaussian_centres(&data, 1, 0).is_err());
    }

    #[test]
    fn kmeans_n_equals_m_returns_points() {
        let data = DMatrix::from_row_slice(4, 1, &[3.0, -1.0, 7.0, 0.5]);
        let c = kmeans_centres(&data, 4, 9, 100).unwrap();
        let mut got: Vec<f64> = c.iter().copied().collect();
        got.sort_by(f64::total_cmp);
        assert_eq!(got, vec![-1.0, 0.5, 3.0, 7.0]);
    }

    #[test]
    fn kmeans_single_cluster_is_mean() {
        let data = DMatrix::from_row_slice(3, 2, &[0.0, 0.0, 3.0, 6.0, 6.0, 3.0]);
        let c = kmeans_centres(&data, 1, 0, 10).unwrap();
        assert!((c[(0, 0)] - 3.0).abs() < 1e-15 && (c[(0, 1)] - 3.0).abs() < 1e-15);
    }

    #[test]
    fn kmeans_rejects_too_many_centres() {
        let data = DMatrix::zeros(2, 1);
        assert_eq!(kmeans_centres(&data, 3, 0, 10).unwrap_err().code(), "configuration");
    }

    #[test]
    fn kmeans_separates_blobs() {
        // two blobs of four points each, means (0, 0) and (100, 50)
        let offsets = [(-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0), (1.0, 1.0)];
        let mut values = Vec::new();
        for (cx, cy) in [(0.0, 0.0), (100.0, 50.0)] {
            for (dx, dy) in offsets {
                values.extend([cx + dx, cy + dy]);
            }
        }
        let data = DMatrix::from_row_slice(8, 2, &values);
        for seed in 0..10 {
            let c = kmeans_centres(&data, 2, seed, 100).unwrap();
            let mut rows: Vec<(f64, f64)> = (0..2).map(|k| (c[(k, 0)], c[(k, 1)])).collect();
            rows.sort_by(|a, b| a.0.total_cmp(&b.0));
            assert!(rows[0].0.abs() < 1e-6 && rows[0].1.abs() < 1e-6);
            assert!((rows[1].0 - 100.0).abs() < 1e-6 && (rows[1].1 - 50.0).abs() < 1e-6);
        }
    }
}
