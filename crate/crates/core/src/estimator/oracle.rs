//! Exhaustive grid search over the constrained simplex, used to check the
//! water-filling solver.

use rand::Rng;
use serde::Serialize;

use super::{constrained_mle, log_likelihood, rate_box, EstimatorError, WeightedCounts};
use crate::rng::{self, Stream};

/// Best grid point of the simplex at `resolution` inside the rate box.
pub fn brute_force_oracle(
    counts: &WeightedCounts,
    theta_prev: &[f64],
    delta_max: f64,
    resolution: f64,
) -> Result<Vec<f64>, EstimatorError> {
    let k = counts.num_outcomes();
    if k == 0 || k > 4 {
        return Err(EstimatorError::OracleScope(k));
    }
    if !(resolution > 0.0 && resolution <= 1e-2) {
        return Err(EstimatorError::OracleResolution(resolution));
    }
    if theta_prev.len() != k {
        return Err(EstimatorError::InvalidDistribution("dimension mismatch".into()));
    }
    let m = (1.0 / resolution).round() as i64;
    let (lo, hi) = rate_box(theta_prev, delta_max);
    let slack = 1e-9;
    let range: Vec<(i64, i64)> = lo
        .iter()
        .zip(&hi)
        .map(|(l, h)| (((l * m as f64) - slack).ceil() as i64, ((h * m as f64) + slack).floor() as i64))
        .collect();

    let mut best: Option<(f64, Vec<i64>)> = None;
    let mut point = vec![0i64; k];
    search(0, m, &range, &mut point, &mut |p| {
        let theta: Vec<f64> = p.iter().map(|&i| i as f64 / m as f64).collect();
        let ll = log_likelihood(counts, &theta);
        if best.as_ref().is_none_or(|(b, _)| ll > *b) {
            best = Some((ll, p.to_vec()));
        }
    });
    best.map(|(_, p)| p.iter().map(|&i| i as f64 / m as f64).collect())
        .ok_or(EstimatorError::OracleEmptyGrid)
}

fn search(dim: usize, remaining: i64, range: &[(i64, i64)], point: &mut [i64], visit: &mut dyn FnMut(&[i64])) {
    let last = range.len() - 1;
    if dim == last {
        let (a, b) = range[last];
        if remaining >= a && remaining <= b {
            point[last] = remaining;
            visit(point);
        }
        return;
    }
    let (a, b) = range[dim];
    for i in a.max(0)..=b.min(remaining) {
        point[dim] = i;
        search(dim + 1, remaining - i, range, point, visit);
    }
}

/// One randomized comparison between the solver and the grid oracle.
#[derive(Debug, Clone, Serialize)]
pub struct OracleCheck {
    pub counts: Vec<f64>,
    pub theta_prev: Vec<f64>,
    pub delta_max: f64,
    pub resolution: f64,
    pub solver: Vec<f64>,
    pub oracle: Vec<f64>,
    pub solver_ll: f64,
    pub oracle_ll: f64,
}

impl OracleCheck {
    /// Solver objective is no worse than the oracle's, up to `tol`.
    pub fn passes(&self, tol: f64) -> bool {
        self.solver_ll >= self.oracle_ll - tol
    }
}

/// Grid resolution per dimension, fine enough to be meaningful and coarse
/// enough to finish quickly.
pub fn default_resolution(k: usize) -> f64 {
    match k {
        0..=2 => 1e-4,
        3 => 1e-3,
        _ => 1e-2,
    }
}

/// Random instance: `K` in {2, 3, 4}, counts uniform in [0, 10], previous
/// estimate uniform on the simplex, delta in {0.01, 0.1, 0.5}.
pub fn random_instance<R: Rng>(rng: &mut R) -> (WeightedCounts, Vec<f64>, f64) {
    let k = rng.random_range(2..=4);
    let counts = WeightedCounts((0..k).map(|_| rng.random_range(0.0..=10.0)).collect());
    let raw: Vec<f64> = (0..k).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let sum: f64 = raw.iter().sum();
    let prev = raw.iter().map(|x| x / sum).collect();
    let delta = [0.01, 0.1, 0.5][rng.random_range(0..3)];
    (counts, prev, delta)
}

/// Runs `n` randomized solver-vs-oracle comparisons from `seed`.
pub fn run_suite(seed: u64, n: usize) -> Result<Vec<OracleCheck>, EstimatorError> {
    let mut rng = rng::stream(seed, Stream::Oracle);
    (0..n)
        .map(|_| {
            let (counts, prev, delta) = random_instance(&mut rng);
            let resolution = default_resolution(counts.num_outcomes());
            let solver = constrained_mle(&counts, &prev, delta)?;
            let oracle = brute_force_oracle(&counts, &prev, delta, resolution)?;
            Ok(OracleCheck {
                solver_ll: log_likelihood(&counts, &solver),
                oracle_ll: log_likelihood(&counts, &oracle),
                counts: counts.0,
                theta_prev: prev,
                delta_max: delta,
                resolution,
                solver,
                oracle,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn matches_unconstrained_optimum() {
        let theta = brute_force_oracle(&WeightedCounts(vec![7.0, 3.0]), &[0.7, 0.3], 0.5, 1e-3).unwrap();
        assert_abs_diff_eq!(theta[0], 0.7, epsilon = 1e-3);
    }

    #[test]
    fn rejects_large_dimension_and_coarse_grid() {
        let c = WeightedCounts(vec![1.0; 5]);
        assert_eq!(brute_force_oracle(&c, &[0.2; 5], 0.1, 1e-2), Err(EstimatorError::OracleScope(5)));
        let c = WeightedCounts(vec![1.0; 2]);
        assert_eq!(
            brute_force_oracle(&c, &[0.5; 2], 0.1, 0.1),
            Err(EstimatorError::OracleResolution(0.1))
        );
    }

    #[test]
    fn three_dimensional_instances_are_dominated() {
        let mut rng = rng::stream(11, Stream::Oracle);
        let mut checked = 0;
        while checked < 10 {
            let (counts, prev, delta) = random_instance(&mut rng);
            if counts.num_outcomes() != 3 {
                continue;
            }
            let solver = constrained_mle(&counts, &prev, delta).unwrap();
            let oracle = brute_force_oracle(&counts, &prev, delta, 1e-3).unwrap();
            assert!(log_likelihood(&counts, &solver) >= log_likelihood(&counts, &oracle) - 1e-4);
            checked += 1;
        }
    }
}
