//! Problem tuple, ground-truth schedules and the structured transition model.
//!
//! Time variation is carried by one scalar per step, the probability that an
//! action reaches its intended successor. The remaining mass goes to a fixed
//! deviation kernel. Every transition row is therefore
//!
//! ```text
//! T_t(s, a, .) = p_t * delta(intended(s, a)) + (1 - p_t) * kernel(s, a, .)
//! ```
//!
//! The same structure also accepts a full outcome distribution
//! `(theta_intended, theta_dev_1, ..)`, which is what the categorical
//! estimator produces.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance used when checking that distributions sum to one.
pub const SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("{what} index {index} out of range (size {size})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        size: usize,
    },
    #[error("invalid transition structure: {0}")]
    InvalidStructure(String),
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
}

pub(crate) fn check_index(what: &'static str, index: usize, size: usize) -> Result<(), ModelError> {
    if index < size {
        Ok(())
    } else {
        Err(ModelError::IndexOutOfRange { what, index, size })
    }
}

/// The (S, A, Z, gamma) part of the tuple plus the rate bound and horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TvPomdpSpec {
    pub num_states: usize,
    pub num_actions: usize,
    pub num_observations: usize,
    pub discount: f64,
    /// Known bound on the per-step change of any transition probability.
    pub delta_max: f64,
    pub horizon: usize,
    /// Observation noise scale in grid cells.
    pub obs_sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SpecViolation {
    NoStates,
    NoActions,
    NoObservations,
    DiscountOutOfRange,
    DeltaMaxOutOfRange,
    ZeroHorizon,
    NegativeObsSigma,
}

impl std::fmt::Display for SpecViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let msg = match self {
            SpecViolation::NoStates => "num_states must be at least 1",
            SpecViolation::NoActions => "num_actions must be at least 1",
            SpecViolation::NoObservations => "num_observations must be at least 1",
            SpecViolation::DiscountOutOfRange => "discount out of range",
            SpecViolation::DeltaMaxOutOfRange => "delta_max out of range",
            SpecViolation::ZeroHorizon => "horizon must be at least 1",
            SpecViolation::NegativeObsSigma => "obs_sigma must be non-negative",
        };
        f.write_str(msg)
    }
}

impl TvPomdpSpec {
    /// Lists every violated invariant; an empty list means the model is valid.
    pub fn validate(&self) -> Vec<SpecViolation> {
        let mut out = Vec::new();
        if self.num_states == 0 {
            out.push(SpecViolation::NoStates);
        }
        if self.num_actions == 0 {
            out.push(SpecViolation::NoActions);
        }
        if self.num_observations == 0 {
            out.push(SpecViolation::NoObservations);
        }
        if !(self.discount > 0.0 && self.discount <= 1.0) {
            out.push(SpecViolation::DiscountOutOfRange);
        }
        if !(0.0..=1.0).contains(&self.delta_max) {
            out.push(SpecViolation::DeltaMaxOutOfRange);
        }
        if self.horizon == 0 {
            out.push(SpecViolation::ZeroHorizon);
        }
        if self.obs_sigma.is_nan() || self.obs_sigma < 0.0 {
            out.push(SpecViolation::NegativeObsSigma);
        }
        out
    }
}

/// One piece of a [`TransitionSchedule::Piecewise`] schedule, active on
/// `[start, end)`. The sub-schedule is evaluated at absolute time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub schedule: Box<TransitionSchedule>,
}

/// Ground-truth success probability as a function of (continuous) time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransitionSchedule {
    Constant(f64),
    /// `p0 + slope * t`
    Linear { p0: f64, slope: f64 },
    /// `p0 * exp(-rate * t)`
    Exponential { p0: f64, rate: f64 },
    Piecewise(Vec<Segment>),
    /// Logistic rise centred at `switch_time / 2` until `switch_time`, then a
    /// Gaussian bump `exp(-(t - switch_time)^2 / 2)`.
    SigmoidGaussianSwitch { switch_time: f64 },
}

impl TransitionSchedule {
    /// Success probability at time `t`, clamped to `[0, 1]`.
    pub fn eval(&self, t: f64) -> f64 {
        self.raw(t).clamp(0.0, 1.0)
    }

    fn raw(&self, t: f64) -> f64 {
        match self {
            TransitionSchedule::Constant(p) => *p,
            TransitionSchedule::Linear { p0, slope } => p0 + slope * t,
            TransitionSchedule::Exponential { p0, rate } => p0 * (-rate * t).exp(),
            TransitionSchedule::Piecewise(segments) => {
                let (Some(first), Some(last)) = (segments.first(), segments.last()) else {
                    return 0.0;
                };
                if t < first.start {
                    return first.schedule.eval(first.start);
                }
                if t >= last.end {
                    return last.schedule.eval(last.end);
                }
                segments
                    .iter()
                    .find(|seg| t >= seg.start && t < seg.end)
                    .map(|seg| seg.schedule.eval(t))
                    .unwrap_or_else(|| last.schedule.eval(t))
            }
            TransitionSchedule::SigmoidGaussianSwitch { switch_time } => {
                if t < *switch_time {
                    1.0 / (1.0 + (-(t - switch_time / 2.0)).exp())
                } else {
                    let d = t - switch_time;
                    (-d * d / 2.0).exp()
                }
            }
        }
    }

    /// Time of the first abrupt regime change, if the schedule has one.
    pub fn switch_time(&self) -> Option<f64> {
        match self {
            TransitionSchedule::SigmoidGaussianSwitch { switch_time } => Some(*switch_time),
            TransitionSchedule::Piecewise(segments) if segments.len() > 1 => Some(segments[0].end),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let unit = |name: &str, p: f64| {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(ModelError::InvalidSchedule(format!("{name} = {p} is not in [0, 1]")))
            }
        };
        let finite = |name: &str, x: f64| {
            if x.is_finite() {
                Ok(())
            } else {
                Err(ModelError::InvalidSchedule(format!("{name} must be finite")))
            }
        };
        match self {
            TransitionSchedule::Constant(p) => unit("p", *p),
            TransitionSchedule::Linear { p0, slope } => {
                unit("p0", *p0)?;
                finite("slope", *slope)
            }
            TransitionSchedule::Exponential { p0, rate } => {
                unit("p0", *p0)?;
                finite("rate", *rate)
            }
            TransitionSchedule::SigmoidGaussianSwitch { switch_time } => {
                finite("switch_time", *switch_time)?;
                if *switch_time < 0.0 {
                    return Err(ModelError::InvalidSchedule("switch_time must be >= 0".into()));
                }
                Ok(())
            }
            TransitionSchedule::Piecewise(segments) => {
                if segments.is_empty() {
                    return Err(ModelError::InvalidSchedule("piecewise schedule has no segments".into()));
                }
                for (i, seg) in segments.iter().enumerate() {
                    finite("segment start", seg.start)?;
                    finite("segment end", seg.end)?;
                    if seg.end <= seg.start {
                        return Err(ModelError::InvalidSchedule(format!("segment {i} has end <= start")));
                    }
                    if let Some(next) = segments.get(i + 1) {
                        if next.start != seg.end {
                            return Err(ModelError::InvalidSchedule(format!(
                                "segments {i} and {} are not contiguous",
                                i + 1
                            )));
                        }
                    }
                    seg.schedule.validate()?;
                }
                Ok(())
            }
        }
    }
}

/// Sparse transition row: `(successor, probability)` pairs with distinct
/// successors.
pub type SparseRow = Vec<(usize, f64)>;

/// Intended-successor plus deviation-kernel transition model.
///
/// Every `(state, action)` pair has `num_outcomes` candidate successors.
/// Outcome 0 is the intended successor; outcomes `1..` are deviations whose
/// relative weights are `deviation_weights`. Deviations that land on the
/// intended cell are dropped from the kernel when some other alternative
/// exists.
#[derive(Debug, Clone, PartialEq)]
pub struct StructuredTransition {
    num_states: usize,
    num_actions: usize,
    num_outcomes: usize,
    successors: Vec<usize>,
    success_prob: f64,
    deviation_weights: Vec<f64>,
}

impl StructuredTransition {
    /// `successors[s * num_actions + a]` lists the candidate successors of
    /// `(s, a)`, intended first.
    pub fn new(
        num_states: usize,
        num_actions: usize,
        successors: Vec<Vec<usize>>,
        success_prob: f64,
        deviation_weights: Vec<f64>,
    ) -> Result<Self, ModelError> {
        if num_states == 0 || num_actions == 0 {
            return Err(ModelError::InvalidStructure("empty state or action space".into()));
        }
        if successors.len() != num_states * num_actions {
            return Err(ModelError::InvalidStructure(format!(
                "expected {} successor lists, got {}",
                num_states * num_actions,
                successors.len()
            )));
        }
        let num_outcomes = successors[0].len();
        if num_outcomes == 0 {
            return Err(ModelError::InvalidStructure("no outcomes per (state, action)".into()));
        }
        if deviation_weights.len() != num_outcomes - 1 {
            return Err(ModelError::InvalidStructure(format!(
                "expected {} deviation weights, got {}",
                num_outcomes - 1,
                deviation_weights.len()
            )));
        }
        if deviation_weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(ModelError::InvalidStructure("negative deviation weight".into()));
        }
        if num_outcomes > 1 && (deviation_weights.iter().sum::<f64>() - 1.0).abs() > SUM_TOLERANCE {
            return Err(ModelError::InvalidStructure("deviation weights must sum to 1".into()));
        }
        if !(0.0..=1.0).contains(&success_prob) {
            return Err(ModelError::InvalidStructure(format!("success_prob {success_prob} not in [0, 1]")));
        }
        let mut flat = Vec::with_capacity(successors.len() * num_outcomes);
        for list in &successors {
            if list.len() != num_outcomes {
                return Err(ModelError::InvalidStructure("ragged successor lists".into()));
            }
            for &s in list {
                check_index("successor", s, num_states)?;
            }
            flat.extend_from_slice(list);
        }
        Ok(Self {
            num_states,
            num_actions,
            num_outcomes,
            successors: flat,
            success_prob,
            deviation_weights,
        })
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn num_outcomes(&self) -> usize {
        self.num_outcomes
    }

    pub fn success_prob(&self) -> f64 {
        self.success_prob
    }

    pub fn deviation_weights(&self) -> &[f64] {
        &self.deviation_weights
    }

    pub fn with_success_prob(&self, p: f64) -> Self {
        Self {
            success_prob: p.clamp(0.0, 1.0),
            ..self.clone()
        }
    }

    /// Outcome distribution `(p, (1 - p) * w_1, .., (1 - p) * w_{K-1})`.
    pub fn outcome_distribution(&self) -> Vec<f64> {
        outcome_distribution(self.success_prob, &self.deviation_weights)
    }

    fn outcomes(&self, s: usize, a: usize) -> &[usize] {
        let base = (s * self.num_actions + a) * self.num_outcomes;
        &self.successors[base..base + self.num_outcomes]
    }

    fn check(&self, s: usize, a: usize) -> Result<(), ModelError> {
        check_index("state", s, self.num_states)?;
        check_index("action", a, self.num_actions)
    }

    pub fn intended(&self, s: usize, a: usize) -> Result<usize, ModelError> {
        self.check(s, a)?;
        Ok(self.outcomes(s, a)[0])
    }

    /// Candidate successor for outcome `k` (0 = intended).
    pub fn successor(&self, s: usize, a: usize, k: usize) -> Result<usize, ModelError> {
        self.check(s, a)?;
        check_index("outcome", k, self.num_outcomes)?;
        Ok(self.outcomes(s, a)[k])
    }

    /// Classifies an observed successor as an outcome index: 0 when it is
    /// the intended cell, otherwise the first deviation that lands there.
    pub fn outcome_of(&self, s: usize, a: usize, next: usize) -> Option<usize> {
        if self.check(s, a).is_err() {
            return None;
        }
        self.outcomes(s, a).iter().position(|&c| c == next)
    }

    /// Deviation kernel of `(s, a)` as a distribution over states.
    pub fn deviation_kernel(&self, s: usize, a: usize) -> Result<SparseRow, ModelError> {
        self.check(s, a)?;
        let mut theta = vec![0.0; self.num_outcomes];
        theta[1..].copy_from_slice(&self.deviation_weights);
        let mut row = Vec::with_capacity(self.num_outcomes);
        self.fill_row(s, a, &theta, &mut row);
        if row.is_empty() {
            row.push((self.outcomes(s, a)[0], 1.0));
        }
        Ok(row)
    }

    /// `T(s, a, .)` under the stored success probability.
    pub fn transition_row(&self, s: usize, a: usize) -> Result<SparseRow, ModelError> {
        self.row_with_outcomes(s, a, &self.outcome_distribution())
    }

    /// `T(s, a, .)` under an explicit outcome distribution `theta`.
    pub fn row_with_outcomes(&self, s: usize, a: usize, theta: &[f64]) -> Result<SparseRow, ModelError> {
        self.check(s, a)?;
        if theta.len() != self.num_outcomes {
            return Err(ModelError::InvalidStructure(format!(
                "outcome distribution has {} entries, expected {}",
                theta.len(),
                self.num_outcomes
            )));
        }
        let mut row = Vec::with_capacity(self.num_outcomes);
        self.fill_row(s, a, theta, &mut row);
        Ok(row)
    }

    /// Unchecked hot path used by the planner and belief filter.
    pub(crate) fn fill_row(&self, s: usize, a: usize, theta: &[f64], row: &mut SparseRow) {
        row.clear();
        let outs = self.outcomes(s, a);
        let intended = outs[0];
        let dev_mass: f64 = theta[1..].iter().sum();
        let distinct_mass: f64 = outs[1..]
            .iter()
            .zip(&theta[1..])
            .filter(|(c, _)| **c != intended)
            .map(|(_, w)| *w)
            .sum();
        if theta[0] > 0.0 {
            row.push((intended, theta[0]));
        }
        if dev_mass <= 0.0 {
            return;
        }
        if distinct_mass <= 0.0 {
            match row.first_mut() {
                Some(entry) => entry.1 += dev_mass,
                None => row.push((intended, dev_mass)),
            }
            return;
        }
        let scale = dev_mass / distinct_mass;
        for (&c, &w) in outs[1..].iter().zip(&theta[1..]) {
            if c == intended || w <= 0.0 {
                continue;
            }
            match row.iter_mut().find(|(cell, _)| *cell == c) {
                Some(entry) => entry.1 += w * scale,
                None => row.push((c, w * scale)),
            }
        }
    }

    /// Dense form of [`Self::transition_row`].
    pub fn dense_row(&self, s: usize, a: usize) -> Result<Vec<f64>, ModelError> {
        let mut dense = vec![0.0; self.num_states];
        for (c, p) in self.transition_row(s, a)? {
            dense[c] += p;
        }
        Ok(dense)
    }

    /// Draws a successor with two uniforms in `[0, 1)`: `u_success` decides
    /// intended vs. deviation, `u_kernel` picks the deviation. Always
    /// consumes both so random streams stay aligned across callers.
    /// Returns `(successor, outcome index)`.
    pub fn sample(&self, s: usize, a: usize, theta: &[f64], u_success: f64, u_kernel: f64) -> (usize, usize) {
        let outs = self.outcomes(s, a);
        let intended = outs[0];
        let total: f64 = theta.iter().sum();
        if u_success * total < theta[0] {
            return (intended, 0);
        }
        let distinct_mass: f64 = outs[1..]
            .iter()
            .zip(&theta[1..])
            .filter(|(c, _)| **c != intended)
            .map(|(_, w)| *w)
            .sum();
        if distinct_mass <= 0.0 {
            return (intended, 0);
        }
        let target = u_kernel * distinct_mass;
        let mut acc = 0.0;
        let mut last = None;
        for (k, (&c, &w)) in outs.iter().zip(theta).enumerate().skip(1) {
            if c == intended || w <= 0.0 {
                continue;
            }
            acc += w;
            last = Some((c, k));
            if target < acc {
                return (c, k);
            }
        }
        last.unwrap_or((intended, 0))
    }
}

/// `(p, (1 - p) * w_1, ..)` for a success probability and deviation weights.
pub fn outcome_distribution(success_prob: f64, deviation_weights: &[f64]) -> Vec<f64> {
    let mut theta = Vec::with_capacity(deviation_weights.len() + 1);
    theta.push(success_prob);
    theta.extend(deviation_weights.iter().map(|w| (1.0 - success_prob) * w));
    theta
}
