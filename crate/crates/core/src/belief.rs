//! Exact Bayesian belief tracking over a discrete state space.
//!
//! `b'(s') = eta * O(z | s') * sum_s T_hat(s, a, s') b(s)`

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{check_index, ModelError, SparseRow, StructuredTransition, SUM_TOLERANCE};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BeliefError {
    #[error("invalid belief: {0}")]
    Invalid(String),
    /// The observation has zero likelihood under every predicted state.
    /// Carries the transition-only predictive distribution as a fallback.
    #[error("observation {observation} is impossible under the current model")]
    ImpossibleObservation { observation: usize, predictive: Belief },
    #[error(transparent)]
    Index(#[from] ModelError),
}

/// Probability vector over states; entries are non-negative and sum to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Belief {
    probs: Vec<f64>,
}

impl Belief {
    pub fn new(probs: Vec<f64>) -> Result<Self, BeliefError> {
        if probs.is_empty() {
            return Err(BeliefError::Invalid("empty belief".into()));
        }
        if probs.iter().any(|p| !(*p >= 0.0 && p.is_finite())) {
            return Err(BeliefError::Invalid("negative or non-finite entry".into()));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(BeliefError::Invalid(format!("entries sum to {sum}")));
        }
        Ok(Self { probs })
    }

    /// Normalizes non-negative weights; `None` when they sum to zero.
    pub fn from_weights(mut weights: Vec<f64>) -> Option<Self> {
        let sum: f64 = weights.iter().sum();
        if !(sum > 0.0 && sum.is_finite()) {
            return None;
        }
        weights.iter_mut().for_each(|w| *w /= sum);
        Some(Self { probs: weights })
    }

    pub fn point_mass(num_states: usize, state: usize) -> Self {
        let mut probs = vec![0.0; num_states];
        probs[state] = 1.0;
        Self { probs }
    }

    pub fn uniform(num_states: usize) -> Self {
        Self {
            probs: vec![1.0 / num_states as f64; num_states],
        }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn num_states(&self) -> usize {
        self.probs.len()
    }

    pub fn sum(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn min_entry(&self) -> f64 {
        self.probs.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Shannon entropy in nats.
    pub fn entropy(&self) -> f64 {
        -self.probs.iter().filter(|p| **p > 0.0).map(|p| p * p.ln()).sum::<f64>()
    }

    /// Most likely state, lowest index on ties.
    pub fn map_state(&self) -> usize {
        let mut best = 0;
        for (i, p) in self.probs.iter().enumerate() {
            if *p > self.probs[best] {
                best = i;
            }
        }
        best
    }
}

/// Source of transition rows for the belief filter.
pub trait TransitionRows {
    fn num_states(&self) -> usize;
    fn num_actions(&self) -> usize;
    /// Writes the sparse row `T(s, a, .)` into `row`.
    fn row_into(&self, s: usize, a: usize, row: &mut SparseRow);
}

/// Structured model evaluated at an estimated outcome distribution.
#[derive(Debug, Clone, Copy)]
pub struct EstimatedTransition<'a> {
    pub structure: &'a StructuredTransition,
    pub theta: &'a [f64],
}

impl TransitionRows for EstimatedTransition<'_> {
    fn num_states(&self) -> usize {
        self.structure.num_states()
    }

    fn num_actions(&self) -> usize {
        self.structure.num_actions()
    }

    fn row_into(&self, s: usize, a: usize, row: &mut SparseRow) {
        self.structure.fill_row(s, a, self.theta, row);
    }
}

/// Dense `rows[s][a][s']` table.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularTransition {
    pub rows: Vec<Vec<Vec<f64>>>,
}

impl TransitionRows for TabularTransition {
    fn num_states(&self) -> usize {
        self.rows.len()
    }

    fn num_actions(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    fn row_into(&self, s: usize, a: usize, row: &mut SparseRow) {
        row.clear();
        row.extend(
            self.rows[s][a]
                .iter()
                .enumerate()
                .filter(|(_, p)| **p > 0.0)
                .map(|(i, p)| (i, *p)),
        );
    }
}

/// `O(z | s)`, independent of the action.
pub trait ObservationLikelihood {
    fn num_states(&self) -> usize;
    fn num_observations(&self) -> usize;
    /// Unchecked likelihood; callers guarantee valid indices.
    fn likelihood_unchecked(&self, z: usize, s: usize) -> f64;
}

/// Discretized isotropic Gaussian position sensor on a `width x height`
/// grid. Observations are cell indices; the kernel centred on the true cell
/// is truncated to the grid and renormalized. It factors into per-axis
/// kernels, which is what is stored.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationModel {
    width: usize,
    height: usize,
    sigma: f64,
    /// `col_kernel[c * width + z]`: P(observed column z | true column c).
    col_kernel: Vec<f64>,
    row_kernel: Vec<f64>,
}

fn axis_kernel(n: usize, sigma: f64) -> Vec<f64> {
    let mut k = vec![0.0; n * n];
    for c in 0..n {
        let row = &mut k[c * n..(c + 1) * n];
        if sigma == 0.0 {
            row[c] = 1.0;
            continue;
        }
        for (z, v) in row.iter_mut().enumerate() {
            let d = z as f64 - c as f64;
            *v = (-d * d / (2.0 * sigma * sigma)).exp();
        }
        let s: f64 = row.iter().sum();
        row.iter_mut().for_each(|v| *v /= s);
    }
    k
}

fn sample_axis(row: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, p) in row.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // u within rounding of 1: last positive entry
    row.iter().rposition(|p| *p > 0.0).unwrap_or(0)
}

impl ObservationModel {
    pub fn gaussian(width: usize, height: usize, sigma: f64) -> Self {
        assert!(width > 0 && height > 0, "grid must be non-empty");
        assert!(sigma >= 0.0 && sigma.is_finite(), "obs_sigma must be non-negative");
        Self {
            width,
            height,
            sigma,
            col_kernel: axis_kernel(width, sigma),
            row_kernel: axis_kernel(height, sigma),
        }
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    fn split(&self, cell: usize) -> (usize, usize) {
        (cell / self.width, cell % self.width)
    }

    /// Checked `O(z | s)`.
    pub fn observation_likelihood(&self, z: usize, s: usize) -> Result<f64, ModelError> {
        check_index("observation", z, self.width * self.height)?;
        check_index("state", s, self.width * self.height)?;
        Ok(self.likelihood_unchecked(z, s))
    }

    /// Dense observation distribution for true cell `s`.
    pub fn row(&self, s: usize) -> Vec<f64> {
        (0..self.width * self.height).map(|z| self.likelihood_unchecked(z, s)).collect()
    }

    /// Draws an observation for true cell `s` from two uniforms.
    pub fn sample(&self, s: usize, u_row: f64, u_col: f64) -> usize {
        let (r, c) = self.split(s);
        let zr = sample_axis(&self.row_kernel[r * self.height..(r + 1) * self.height], u_row);
        let zc = sample_axis(&self.col_kernel[c * self.width..(c + 1) * self.width], u_col);
        zr * self.width + zc
    }
}

impl ObservationLikelihood for ObservationModel {
    fn num_states(&self) -> usize {
        self.width * self.height
    }

    fn num_observations(&self) -> usize {
        self.width * self.height
    }

    fn likelihood_unchecked(&self, z: usize, s: usize) -> f64 {
        let (sr, sc) = self.split(s);
        let (zr, zc) = self.split(z);
        self.row_kernel[sr * self.height + zr] * self.col_kernel[sc * self.width + zc]
    }
}

/// Explicit `kernel[s][z]` table.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularObservation {
    pub kernel: Vec<Vec<f64>>,
}

impl ObservationLikelihood for TabularObservation {
    fn num_states(&self) -> usize {
        self.kernel.len()
    }

    fn num_observations(&self) -> usize {
        self.kernel.first().map_or(0, Vec::len)
    }

    fn likelihood_unchecked(&self, z: usize, s: usize) -> f64 {
        self.kernel[s][z]
    }
}

/// Checked `O(z | s)` for any observation model.
pub fn observation_likelihood<O: ObservationLikelihood + ?Sized>(model: &O, z: usize, s: usize) -> Result<f64, ModelError> {
    check_index("observation", z, model.num_observations())?;
    check_index("state", s, model.num_states())?;
    Ok(model.likelihood_unchecked(z, s))
}

/// Transition-only prediction `sum_s T(s, a, .) b(s)`.
pub fn predict<T: TransitionRows + ?Sized>(b: &Belief, a: usize, t_hat: &T) -> Result<Belief, BeliefError> {
    let n = t_hat.num_states();
    if b.num_states() != n {
        return Err(BeliefError::Invalid(format!("belief has {} states, model {}", b.num_states(), n)));
    }
    check_index("action", a, t_hat.num_actions())?;
    let mut out = vec![0.0; n];
    let mut row = SparseRow::new();
    for (s, &p) in b.probs.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        t_hat.row_into(s, a, &mut row);
        for &(next, q) in &row {
            out[next] += p * q;
        }
    }
    Belief::from_weights(out).ok_or_else(|| BeliefError::Invalid("prediction lost all mass".into()))
}

/// Bayes filter step. An observation with zero likelihood everywhere in the
/// predicted support yields [`BeliefError::ImpossibleObservation`] carrying
/// the predictive distribution.
pub fn belief_update<T, O>(b: &Belief, a: usize, z: usize, t_hat: &T, model: &O) -> Result<Belief, BeliefError>
where
    T: TransitionRows + ?Sized,
    O: ObservationLikelihood + ?Sized,
{
    check_index("observation", z, model.num_observations())?;
    if model.num_states() != t_hat.num_states() {
        return Err(BeliefError::Invalid("observation and transition models disagree on |S|".into()));
    }
    let predictive = predict(b, a, t_hat)?;
    let posterior: Vec<f64> = predictive
        .probs
        .iter()
        .enumerate()
        .map(|(s, p)| if *p == 0.0 { 0.0 } else { p * model.likelihood_unchecked(z, s) })
        .collect();
    Belief::from_weights(posterior).ok_or(BeliefError::ImpossibleObservation { observation: z, predictive })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn noiseless_likelihood_is_indicator() {
        let m = ObservationModel::gaussian(4, 3, 0.0);
        assert_eq!(m.observation_likelihood(5, 5).unwrap(), 1.0);
        assert_eq!(m.observation_likelihood(6, 5).unwrap(), 0.0);
        assert!(m.observation_likelihood(12, 0).is_err());
    }

    #[test]
    fn gaussian_likelihood_decays_with_distance() {
        let m = ObservationModel::gaussian(10, 10, 1.5);
        let s = 4 * 10 + 4;
        let near = m.observation_likelihood(s, s).unwrap();
        let far = m.observation_likelihood(s + 3, s).unwrap();
        // per-axis normalizers cancel for an interior cell: ratio exp(-9 / 4.5)
        assert!(near > far);
        assert_abs_diff_eq!(far / near, (-9.0f64 / 4.5).exp(), epsilon = 1e-3);
        let row = m.row(0);
        assert_abs_diff_eq!(row.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn update_with_deterministic_transition_and_exact_sensor() {
        let succ = vec![vec![1], vec![2], vec![0]];
        let st = StructuredTransition::new(3, 1, succ, 1.0, vec![]).unwrap();
        let t = EstimatedTransition { structure: &st, theta: &[1.0] };
        let obs = TabularObservation {
            kernel: vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]],
        };
        let b = belief_update(&Belief::point_mass(3, 0), 0, 1, &t, &obs).unwrap();
        assert_eq!(b.probs(), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn uninformative_update_keeps_uniform() {
        let t = TabularTransition {
            rows: vec![vec![vec![0.25; 4]]; 4],
        };
        let obs = TabularObservation {
            kernel: vec![vec![0.5, 0.5]; 4],
        };
        let b = belief_update(&Belief::uniform(4), 0, 1, &t, &obs).unwrap();
        for p in b.probs() {
            assert_abs_diff_eq!(*p, 0.25, epsilon = 1e-15);
        }
    }

    #[test]
    fn two_state_chain_posterior() {
        // (0.7 * 0.9, 0.3 * 0.1) / 0.66
        let t = TabularTransition {
            rows: vec![vec![vec![0.7, 0.3]], vec![vec![0.0, 1.0]]],
        };
        let obs = TabularObservation {
            kernel: vec![vec![0.9, 0.1], vec![0.1, 0.9]],
        };
        let b = belief_update(&Belief::point_mass(2, 0), 0, 0, &t, &obs).unwrap();
        assert_abs_diff_eq!(b.probs()[0], 0.63 / 0.66, epsilon = 1e-12);
        assert_abs_diff_eq!(b.probs()[1], 0.03 / 0.66, epsilon = 1e-12);
    }

    #[test]
    fn impossible_observation_returns_predictive() {
        let t = TabularTransition {
            rows: vec![vec![vec![0.0, 1.0, 0.0]], vec![vec![0.0, 1.0, 0.0]], vec![vec![0.0, 0.0, 1.0]]],
        };
        let obs = TabularObservation {
            kernel: vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]],
        };
        match belief_update(&Belief::point_mass(3, 0), 0, 2, &t, &obs) {
            Err(BeliefError::ImpossibleObservation { predictive, .. }) => {
                assert_eq!(predictive.probs(), &[0.0, 1.0, 0.0]);
            }
            other => panic!("expected impossible observation, got {other:?}"),
        }
    }

    #[test]
    fn sampling_stays_in_bounds_at_corners() {
        let m = ObservationModel::gaussian(5, 5, 1.5);
        for i in 0..100 {
            let u = i as f64 / 100.0;
            assert!(m.sample(0, u, 1.0 - u) < 25);
            assert!(m.sample(24, 1.0 - 1e-17, u) < 25);
        }
    }

    fn normalize(v: Vec<f64>) -> Vec<f64> {
        let s: f64 = v.iter().sum();
        v.into_iter().map(|x| x / s).collect()
    }

    proptest! {
        #[test]
        fn posterior_is_normalized_and_permutation_equivariant(
            prior in prop::collection::vec(0.01..1.0f64, 3),
            rows in prop::collection::vec(prop::collection::vec(0.01..1.0f64, 3), 3),
            lik in prop::collection::vec(prop::collection::vec(0.01..1.0f64, 2), 3),
            z in 0usize..2,
            perm_idx in 0usize..6,
        ) {
            let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
            let perm = perms[perm_idx];
            let prior = normalize(prior);
            let rows: Vec<Vec<f64>> = rows.into_iter().map(normalize).collect();
            let lik: Vec<Vec<f64>> = lik.into_iter().map(normalize).collect();

            let b = Belief::new(prior.clone()).unwrap();
            let t = TabularTransition { rows: rows.iter().map(|r| vec![r.clone()]).collect() };
            let o = TabularObservation { kernel: lik.clone() };
            let post = belief_update(&b, 0, z, &t, &o).unwrap();
            prop_assert!((post.sum() - 1.0).abs() <= 1e-9);
            prop_assert!(post.min_entry() >= 0.0);

            // relabel state i as perm[i]
            let mut pprior = vec![0.0; 3];
            let mut prows = vec![vec![0.0; 3]; 3];
            let mut plik = vec![vec![0.0; 2]; 3];
            for i in 0..3 {
                pprior[perm[i]] = prior[i];
                plik[perm[i]] = lik[i].clone();
                for j in 0..3 {
                    prows[perm[i]][perm[j]] = rows[i][j];
                }
            }
            let pt = TabularTransition { rows: prows.into_iter().map(|r| vec![r]).collect() };
            let ppost = belief_update(&Belief::new(pprior).unwrap(), 0, z, &pt, &TabularObservation { kernel: plik }).unwrap();
            for (i, &pi) in perm.iter().enumerate() {
                prop_assert!((ppost.probs()[pi] - post.probs()[i]).abs() <= 1e-12);
            }
        }

        #[test]
        fn noiseless_support_matches_observation(
            prior in prop::collection::vec(0.0..1.0f64, 9),
            a in 0usize..8,
            z in 0usize..9,
            p in 0.0..=1.0f64,
        ) {
            prop_assume!(prior.iter().sum::<f64>() > 0.0);
            let b = Belief::from_weights(prior).unwrap();
            let world = crate::envsim::GridWorld::open(3, 3, (1, 1));
            let st = world.transition_structure(p);
            let theta = st.outcome_distribution();
            let t = EstimatedTransition { structure: &st, theta: &theta };
            let o = ObservationModel::gaussian(3, 3, 0.0);
            if let Ok(post) = belief_update(&b, a, z, &t, &o) {
                for (s, q) in post.probs().iter().enumerate() {
                    if s != z {
                        prop_assert_eq!(*q, 0.0);
                    }
                }
            }
        }
    }
}
