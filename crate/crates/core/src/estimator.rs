//! Weighted maximum-likelihood transition estimation under a rate bound.
//!
//! For categorical outcomes the weighted log-likelihood
//! `sum_i w_i log theta_{k_i}` reduces to `sum_k c_k log theta_k` with
//! weighted counts `c_k`. Maximizing it over the simplex intersected with the
//! box `|theta_k - theta_prev_k| <= delta_max` is a separable concave program
//! whose KKT conditions give the water-filling form
//!
//! ```text
//! theta_k(lambda) = clip(c_k / lambda, l_k, u_k),   sum_k theta_k(lambda) = 1
//! ```
//!
//! `sum_k theta_k(lambda)` is non-increasing in `lambda`, so `lambda` is
//! found by bracketing and bisection, then polished in closed form on the
//! free coordinates.

pub mod oracle;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::memory::{self, MemoryRecord, MemoryWindow, PriorityConfig};
use crate::model::SUM_TOLERANCE;

pub use oracle::brute_force_oracle;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimatorError {
    #[error("negative or non-finite sample weight {0}")]
    NegativeWeight(f64),
    #[error("outcome {outcome} out of range for {num_outcomes} outcomes")]
    OutcomeOutOfRange { outcome: usize, num_outcomes: usize },
    #[error("all weighted counts are zero")]
    EmptySample,
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("delta_max {0} must be in [0, 1]")]
    InvalidDeltaMax(f64),
    #[error("oracle only supports 1 to 4 outcomes, got {0}")]
    OracleScope(usize),
    #[error("oracle resolution {0} must be in (0, 1e-2]")]
    OracleResolution(f64),
    #[error("oracle grid has no point inside the feasible box")]
    OracleEmptyGrid,
    #[error("previous estimate is for t={prev}, expected t={expected}")]
    TimeMismatch { prev: u64, expected: u64 },
}

/// Per-outcome accumulated weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedCounts(pub Vec<f64>);

impl WeightedCounts {
    pub fn zeros(num_outcomes: usize) -> Self {
        Self(vec![0.0; num_outcomes])
    }

    pub fn num_outcomes(&self) -> usize {
        self.0.len()
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Multiplies every count by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self(self.0.iter().map(|c| c * factor).collect())
    }
}

/// Sums sample weights per outcome.
pub fn weighted_counts<I>(samples: I, num_outcomes: usize) -> Result<WeightedCounts, EstimatorError>
where
    I: IntoIterator<Item = (usize, f64)>,
{
    let mut counts = WeightedCounts::zeros(num_outcomes);
    for (outcome, w) in samples {
        if !(w >= 0.0 && w.is_finite()) {
            return Err(EstimatorError::NegativeWeight(w));
        }
        if outcome >= num_outcomes {
            return Err(EstimatorError::OutcomeOutOfRange { outcome, num_outcomes });
        }
        counts.0[outcome] += w;
    }
    Ok(counts)
}

/// `sum_k c_k log theta_k`, with `0 log 0 = 0`.
pub fn log_likelihood(counts: &WeightedCounts, theta: &[f64]) -> f64 {
    counts
        .0
        .iter()
        .zip(theta)
        .map(|(&c, &p)| {
            if c == 0.0 {
                0.0
            } else if p <= 0.0 {
                f64::NEG_INFINITY
            } else {
                c * p.ln()
            }
        })
        .sum()
}

/// `theta_k = c_k / sum(c)`.
pub fn unconstrained_mle(counts: &WeightedCounts) -> Result<Vec<f64>, EstimatorError> {
    let total = counts.total();
    if total.is_nan() || total <= 0.0 {
        return Err(EstimatorError::EmptySample);
    }
    Ok(counts.0.iter().map(|c| c / total).collect())
}

fn check_distribution(theta: &[f64]) -> Result<(), EstimatorError> {
    if theta.is_empty() {
        return Err(EstimatorError::InvalidDistribution("empty".into()));
    }
    if theta.iter().any(|p| !(*p >= -1e-12 && *p <= 1.0 + 1e-12)) {
        return Err(EstimatorError::InvalidDistribution("entry outside [0, 1]".into()));
    }
    let sum: f64 = theta.iter().sum();
    if (sum - 1.0).abs() > SUM_TOLERANCE {
        return Err(EstimatorError::InvalidDistribution(format!("sums to {sum}")));
    }
    Ok(())
}

fn check_delta(delta_max: f64) -> Result<(), EstimatorError> {
    if (0.0..=1.0).contains(&delta_max) {
        Ok(())
    } else {
        Err(EstimatorError::InvalidDeltaMax(delta_max))
    }
}

/// Feasible box `[max(0, prev - delta), min(1, prev + delta)]` per coordinate.
pub fn rate_box(theta_prev: &[f64], delta_max: f64) -> (Vec<f64>, Vec<f64>) {
    theta_prev
        .iter()
        .map(|p| ((p - delta_max).max(0.0), (p + delta_max).min(1.0)))
        .unzip()
}

fn fill(counts: &[f64], lo: &[f64], hi: &[f64], lambda: f64, out: &mut [f64]) -> f64 {
    let mut sum = 0.0;
    for k in 0..counts.len() {
        out[k] = (counts[k] / lambda).clamp(lo[k], hi[k]);
        sum += out[k];
    }
    sum
}

/// Maximizer of the weighted log-likelihood over the simplex intersected
/// with the rate box around `theta_prev`. With no data the previous
/// estimate is returned unchanged.
pub fn constrained_mle(counts: &WeightedCounts, theta_prev: &[f64], delta_max: f64) -> Result<Vec<f64>, EstimatorError> {
    check_delta(delta_max)?;
    check_distribution(theta_prev)?;
    if theta_prev.len() != counts.num_outcomes() {
        return Err(EstimatorError::InvalidDistribution(format!(
            "previous estimate has {} entries, counts have {}",
            theta_prev.len(),
            counts.num_outcomes()
        )));
    }
    if let Some(&bad) = counts.0.iter().find(|c| !(**c >= 0.0 && c.is_finite())) {
        return Err(EstimatorError::NegativeWeight(bad));
    }
    let total = counts.total();
    if total <= 0.0 {
        return Ok(theta_prev.to_vec());
    }

    let c = counts.as_slice();
    let (lo, hi) = rate_box(theta_prev, delta_max);
    let k = c.len();
    let mut theta = vec![0.0; k];

    // lambda -> 0: positive-count coordinates sit at their upper bound.
    let saturated: f64 = (0..k).map(|i| if c[i] > 0.0 { hi[i] } else { lo[i] }).sum();
    if saturated < 1.0 {
        // The objective is flat in the zero-count coordinates; share the
        // remaining mass in proportion to their room.
        let room: f64 = (0..k).filter(|&i| c[i] == 0.0).map(|i| hi[i] - lo[i]).sum();
        let alpha = if room > 0.0 { ((1.0 - saturated) / room).min(1.0) } else { 0.0 };
        for i in 0..k {
            theta[i] = if c[i] > 0.0 { hi[i] } else { lo[i] + alpha * (hi[i] - lo[i]) };
        }
        return Ok(theta);
    }

    let mut lam_lo = total;
    let mut lam_hi = total;
    for _ in 0..1100 {
        if fill(c, &lo, &hi, lam_lo, &mut theta) >= 1.0 {
            break;
        }
        lam_lo *= 0.5;
    }
    for _ in 0..1100 {
        if fill(c, &lo, &hi, lam_hi, &mut theta) <= 1.0 {
            break;
        }
        lam_hi *= 2.0;
    }
    let mut lambda = lam_hi;
    for _ in 0..200 {
        let mid = 0.5 * (lam_lo + lam_hi);
        let s = fill(c, &lo, &hi, mid, &mut theta);
        lambda = mid;
        if (s - 1.0).abs() <= 1e-10 {
            break;
        }
        if s > 1.0 {
            lam_lo = mid;
        } else {
            lam_hi = mid;
        }
    }
    fill(c, &lo, &hi, lambda, &mut theta);

    // Closed-form lambda on the free set removes the bisection residual.
    let mut free_counts = 0.0;
    let mut fixed_mass = 0.0;
    for i in 0..k {
        let raw = c[i] / lambda;
        if raw > lo[i] && raw < hi[i] {
            free_counts += c[i];
        } else {
            fixed_mass += theta[i];
        }
    }
    if free_counts > 0.0 && fixed_mass < 1.0 {
        let exact = free_counts / (1.0 - fixed_mass);
        let mut polished = vec![0.0; k];
        let s = fill(c, &lo, &hi, exact, &mut polished);
        if (s - 1.0).abs() <= (theta.iter().sum::<f64>() - 1.0).abs() {
            theta = polished;
        }
    }
    Ok(theta)
}

/// Two-outcome special case: the weighted success rate clipped to the box
/// around `p_prev`. Zero total weight returns `p_prev`.
pub fn scalar_success_mle<I>(samples: I, p_prev: f64, delta_max: f64) -> Result<f64, EstimatorError>
where
    I: IntoIterator<Item = (bool, f64)>,
{
    check_delta(delta_max)?;
    let mut hits = 0.0;
    let mut total = 0.0;
    for (success, w) in samples {
        if !(w >= 0.0 && w.is_finite()) {
            return Err(EstimatorError::NegativeWeight(w));
        }
        if success {
            hits += w;
        }
        total += w;
    }
    if total <= 0.0 {
        return Ok(p_prev);
    }
    let lo = (p_prev - delta_max).max(0.0);
    let hi = (p_prev + delta_max).min(1.0);
    Ok((hits / total).clamp(lo, hi))
}

/// Whether the estimator tracks only the success probability or the full
/// outcome distribution (intended plus each deviation).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorMode {
    #[default]
    Scalar,
    Categorical,
}

/// Estimated transition parameters at one time step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionEstimate {
    pub t: u64,
    /// Estimated success probability.
    pub p_hat: f64,
    /// Outcome distribution in categorical mode.
    pub rows: Option<Vec<f64>>,
    pub prev_p_hat: Option<f64>,
    pub prev_rows: Option<Vec<f64>>,
}

impl TransitionEstimate {
    /// Estimate at `t = 0` before any data. In categorical mode the initial
    /// outcome distribution splits `1 - p` by `deviation_weights`.
    pub fn initial(p: f64, deviation_weights: &[f64], mode: EstimatorMode) -> Self {
        let p = p.clamp(0.0, 1.0);
        Self {
            t: 0,
            p_hat: p,
            rows: match mode {
                EstimatorMode::Scalar => None,
                EstimatorMode::Categorical => Some(crate::model::outcome_distribution(p, deviation_weights)),
            },
            prev_p_hat: None,
            prev_rows: None,
        }
    }

    pub fn mode(&self) -> EstimatorMode {
        if self.rows.is_some() {
            EstimatorMode::Categorical
        } else {
            EstimatorMode::Scalar
        }
    }

    /// Same parameters carried forward to `now`.
    pub fn carried_to(&self, now: u64) -> Self {
        self.succeeded_by(now, self.p_hat, self.rows.clone())
    }

    fn succeeded_by(&self, now: u64, p_hat: f64, rows: Option<Vec<f64>>) -> Self {
        Self {
            t: now,
            p_hat,
            rows,
            prev_p_hat: Some(self.p_hat),
            prev_rows: self.rows.clone(),
        }
    }

    /// Outcome distribution used for planning: the categorical rows if
    /// present, otherwise `p_hat` spread over `deviation_weights`.
    pub fn outcome_distribution(&self, deviation_weights: &[f64]) -> Vec<f64> {
        match &self.rows {
            Some(rows) => rows.clone(),
            None => crate::model::outcome_distribution(self.p_hat, deviation_weights),
        }
    }
}

/// Advances `prev` to `now` from already weighted records.
pub fn estimate_from_weighted(
    weighted: &[(MemoryRecord, f64)],
    prev: &TransitionEstimate,
    now: u64,
    delta_max: f64,
) -> Result<TransitionEstimate, EstimatorError> {
    match &prev.rows {
        None => {
            let p = scalar_success_mle(weighted.iter().map(|(r, w)| (r.success, *w)), prev.p_hat, delta_max)?;
            Ok(prev.succeeded_by(now, p, None))
        }
        Some(rows) => {
            let counts = weighted_counts(weighted.iter().map(|(r, w)| (r.outcome, *w)), rows.len())?;
            let theta = constrained_mle(&counts, rows, delta_max)?;
            Ok(prev.succeeded_by(now, theta[0], Some(theta)))
        }
    }
}

/// One full estimation step: prioritized weights over the window, weighted
/// counts, then the rate-constrained solve.
pub fn estimate_step(
    window: &MemoryWindow,
    prev: &TransitionEstimate,
    now: u64,
    cfg: &PriorityConfig,
    delta_max: f64,
) -> Result<TransitionEstimate, EstimatorError> {
    if prev.t + 1 != now {
        return Err(EstimatorError::TimeMismatch {
            prev: prev.t,
            expected: now.saturating_sub(1),
        });
    }
    if window.is_empty() {
        return Ok(prev.carried_to(now));
    }
    let weighted = memory::weigh_all(window, now, cfg).expect("window is non-empty");
    estimate_from_weighted(&weighted, prev, now, delta_max)
}
