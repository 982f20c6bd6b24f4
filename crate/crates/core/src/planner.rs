//! Finite-horizon value iteration on a projected time-varying model, and
//! belief-weighted one-step lookahead for action selection.

use serde::{Deserialize, Serialize};

use crate::belief::Belief;
use crate::estimator::TransitionEstimate;
use crate::model::{outcome_distribution, SparseRow, StructuredTransition, TransitionSchedule};

/// Rewards indexed by state, action and offset from the current step.
/// Terminal states collect their reward and end the recursion.
pub trait RewardModel {
    fn reward(&self, s: usize, a: usize, offset: usize) -> f64;

    fn is_terminal(&self, _s: usize) -> bool {
        false
    }
}

impl<F> RewardModel for F
where
    F: Fn(usize, usize, usize) -> f64,
{
    fn reward(&self, s: usize, a: usize, offset: usize) -> f64 {
        self(s, a, offset)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProjectionMode {
    #[default]
    Hold,
    LinearExtrapolate,
}

/// Outcome distributions for offsets `0..H` ahead of the current step.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionProjection {
    mode: ProjectionMode,
    rows: Vec<Vec<f64>>,
}

impl TransitionProjection {
    pub fn mode(&self) -> ProjectionMode {
        self.mode
    }

    pub fn horizon(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn row(&self, offset: usize) -> &[f64] {
        &self.rows[offset]
    }

    /// Success probability per offset.
    pub fn success_probs(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r[0]).collect()
    }

    /// The same outcome distribution at every offset.
    pub fn stationary(theta: Vec<f64>, horizon: usize) -> Self {
        assert!(horizon >= 1, "horizon must be at least 1");
        Self { mode: ProjectionMode::Hold, rows: vec![theta; horizon] }
    }

    /// Rows read off a schedule: offset `k` uses `schedule((step + k) * time_scale)`.
    pub fn from_schedule(
        schedule: &TransitionSchedule,
        step: u64,
        time_scale: f64,
        horizon: usize,
        deviation_weights: &[f64],
    ) -> Self {
        assert!(horizon >= 1, "horizon must be at least 1");
        let rows = (0..horizon as u64)
            .map(|k| outcome_distribution(schedule.eval((step + k) as f64 * time_scale), deviation_weights))
            .collect();
        Self { mode: ProjectionMode::Hold, rows }
    }
}

/// Rescales the deviation entries of `theta` so the success entry becomes `p`.
fn with_success(theta: &[f64], p: f64, deviation_weights: &[f64]) -> Vec<f64> {
    let dev: f64 = theta[1..].iter().sum();
    if dev <= 0.0 {
        return outcome_distribution(p, deviation_weights);
    }
    let scale = (1.0 - p) / dev;
    std::iter::once(p).chain(theta[1..].iter().map(|w| w * scale)).collect()
}

/// Extends an estimate `horizon` steps ahead.
///
/// `Hold` repeats the current outcome distribution. `LinearExtrapolate`
/// continues the slope between the previous and current success estimates,
/// with the slope clamped to `±delta_max` and the values to `[0, 1]`.
pub fn project_transition_forward(
    est: &TransitionEstimate,
    deviation_weights: &[f64],
    delta_max: f64,
    mode: ProjectionMode,
    horizon: usize,
) -> TransitionProjection {
    assert!(horizon >= 1, "horizon must be at least 1");
    let current = est.outcome_distribution(deviation_weights);
    let rows = match (mode, est.prev_p_hat) {
        (ProjectionMode::LinearExtrapolate, Some(prev)) => {
            let slope = (est.p_hat - prev).clamp(-delta_max, delta_max);
            (1..=horizon)
                .map(|k| {
                    let p = (est.p_hat + slope * k as f64).clamp(0.0, 1.0);
                    with_success(&current, p, deviation_weights)
                })
                .collect()
        }
        _ => vec![current; horizon],
    };
    TransitionProjection { mode, rows }
}

/// `V_tau(s)` for `tau = 0..=H`, with `V_H = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueTable {
    num_states: usize,
    horizon: usize,
    values: Vec<f64>,
}

impl ValueTable {
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn layer(&self, tau: usize) -> &[f64] {
        &self.values[tau * self.num_states..(tau + 1) * self.num_states]
    }

    pub fn value(&self, tau: usize, s: usize) -> f64 {
        self.values[tau * self.num_states + s]
    }

    /// Table from explicit layers `0..=H`; the last one must be zero.
    pub fn from_layers(layers: Vec<Vec<f64>>) -> Self {
        assert!(layers.len() >= 2, "need at least layers 0 and H");
        let num_states = layers[0].len();
        assert!(layers.iter().all(|l| l.len() == num_states), "ragged layers");
        assert!(layers.last().unwrap().iter().all(|v| *v == 0.0), "terminal layer must be zero");
        Self { num_states, horizon: layers.len() - 1, values: layers.concat() }
    }
}

fn expected_value(row: &SparseRow, next: &[f64]) -> f64 {
    row.iter().map(|&(c, p)| p * next[c]).sum()
}

/// Every `(s, a)` row of the structure under one outcome distribution,
/// padded to `width` entries.
struct ExpandedRows {
    width: usize,
    entries: Vec<(usize, f64)>,
}

impl ExpandedRows {
    fn new(structure: &StructuredTransition) -> Self {
        Self { width: structure.num_outcomes(), entries: Vec::new() }
    }

    fn fill(&mut self, structure: &StructuredTransition, theta: &[f64]) {
        let mut row = Vec::with_capacity(self.width);
        self.entries.clear();
        for s in 0..structure.num_states() {
            for a in 0..structure.num_actions() {
                structure.fill_row(s, a, theta, &mut row);
                self.entries.extend_from_slice(&row);
                self.entries.extend(std::iter::repeat_n((s, 0.0), self.width - row.len()));
            }
        }
    }

    fn row(&self, s: usize, a: usize, num_actions: usize) -> &[(usize, f64)] {
        let start = (s * num_actions + a) * self.width;
        &self.entries[start..start + self.width]
    }
}

fn backward_induction<R: RewardModel>(
    structure: &StructuredTransition,
    projection: &TransitionProjection,
    rewards: &R,
    discount: f64,
    mut on_action: impl FnMut(usize, usize, usize),
) -> ValueTable {
    let n = structure.num_states();
    let na = structure.num_actions();
    let h = projection.horizon();
    let mut values = vec![0.0; (h + 1) * n];
    let mut rows = ExpandedRows::new(structure);
    let mut cached: Option<&[f64]> = None;
    for tau in (0..h).rev() {
        let theta = projection.row(tau);
        if cached != Some(theta) {
            rows.fill(structure, theta);
            cached = Some(theta);
        }
        let (head, tail) = values.split_at_mut((tau + 1) * n);
        let next = &tail[..n];
        let layer = &mut head[tau * n..];
        for (s, v) in layer.iter_mut().enumerate() {
            let terminal = rewards.is_terminal(s);
            let mut best = (0, f64::NEG_INFINITY);
            for a in 0..na {
                let mut q = rewards.reward(s, a, tau);
                if !terminal {
                    q += discount * rows.row(s, a, na).iter().map(|&(c, p)| p * next[c]).sum::<f64>();
                }
                if q > best.1 {
                    best = (a, q);
                }
            }
            *v = best.1;
            on_action(tau, s, best.0);
        }
    }
    ValueTable { num_states: n, horizon: h, values }
}

/// Exact backward induction over the projection's horizon.
pub fn time_varying_value_iteration<R: RewardModel>(
    structure: &StructuredTransition,
    projection: &TransitionProjection,
    rewards: &R,
    discount: f64,
) -> ValueTable {
    backward_induction(structure, projection, rewards, discount, |_, _, _| {})
}

/// Value table plus the greedy action at every `(tau, s)`, stored
/// `policy[tau * num_states + s]`.
pub fn value_iteration_policy<R: RewardModel>(
    structure: &StructuredTransition,
    projection: &TransitionProjection,
    rewards: &R,
    discount: f64,
) -> (ValueTable, Vec<usize>) {
    let n = structure.num_states();
    let mut policy = vec![0; projection.horizon() * n];
    let vt = backward_induction(structure, projection, rewards, discount, |tau, s, a| policy[tau * n + s] = a);
    (vt, policy)
}

/// Belief-weighted lookahead objective of every action:
/// `sum_s b(s) [R_0(s, a) + gamma sum_s' T_0(s, a, s') V_1(s')]`.
pub fn action_values<R: RewardModel>(
    b: &Belief,
    vt: &ValueTable,
    structure: &StructuredTransition,
    projection: &TransitionProjection,
    rewards: &R,
    discount: f64,
) -> Vec<f64> {
    let theta = projection.row(0);
    let next = vt.layer(1);
    let mut row = Vec::with_capacity(structure.num_outcomes());
    let mut q = vec![0.0; structure.num_actions()];
    for (s, &w) in b.probs().iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let terminal = rewards.is_terminal(s);
        for (a, qa) in q.iter_mut().enumerate() {
            let mut v = rewards.reward(s, a, 0);
            if !terminal {
                structure.fill_row(s, a, theta, &mut row);
                v += discount * expected_value(&row, next);
            }
            *qa += w * v;
        }
    }
    q
}

/// Argmax of [`action_values`]; ties go to the lowest action index.
pub fn select_action<R: RewardModel>(
    b: &Belief,
    vt: &ValueTable,
    structure: &StructuredTransition,
    projection: &TransitionProjection,
    rewards: &R,
    discount: f64,
) -> usize {
    let q = action_values(b, vt, structure, projection, rewards, discount);
    let mut best = 0;
    for (a, v) in q.iter().enumerate() {
        if *v > q[best] {
            best = a;
        }
    }
    best
}
