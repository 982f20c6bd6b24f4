//! Comparison estimators and a planner that plans with an assumed schedule
//! over time-indexed states.

use serde::{Deserialize, Serialize};

use crate::envsim::GridWorld;
use crate::estimator::{scalar_success_mle, EstimatorError};
use crate::memory::{MemoryRecord, MemoryWindow};
use crate::model::TransitionSchedule;
use crate::planner::{value_iteration_policy, RewardModel, TransitionProjection, ValueTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BaselineKind {
    UnweightedWindowMle,
    FullHistoryMle,
    MostRecentOnly,
    TimeAugmentedVi,
}

/// Every record with weight one.
pub fn uniform_weights<'a, I>(records: I) -> Vec<(MemoryRecord, f64)>
where
    I: IntoIterator<Item = &'a MemoryRecord>,
{
    records.into_iter().map(|r| (*r, 1.0)).collect()
}

/// Window success frequency, clipped to `p_prev ± delta_max`.
pub fn unweighted_window_mle(window: &MemoryWindow, p_prev: f64, delta_max: f64) -> Result<f64, EstimatorError> {
    scalar_success_mle(window.records().map(|r| (r.success, 1.0)), p_prev, delta_max)
}

/// Success frequency over the whole run, clipped to `p_prev ± delta_max`.
pub fn full_history_mle(records: &[MemoryRecord], p_prev: f64, delta_max: f64) -> Result<f64, EstimatorError> {
    scalar_success_mle(records.iter().map(|r| (r.success, 1.0)), p_prev, delta_max)
}

/// Last observed outcome only, clipped to `p_prev ± delta_max`.
pub fn most_recent_mle(window: &MemoryWindow, p_prev: f64, delta_max: f64) -> Result<f64, EstimatorError> {
    scalar_success_mle(window.newest().map(|r| (r.success, 1.0)), p_prev, delta_max)
}

/// Greedy policy over `(offset, state)` from value iteration on the product
/// of states and time layers.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeAugmentedPolicy {
    pub values: ValueTable,
    actions: Vec<usize>,
    start_step: u64,
}

impl TimeAugmentedPolicy {
    pub fn start_step(&self) -> u64 {
        self.start_step
    }

    pub fn horizon(&self) -> usize {
        self.values.horizon()
    }

    pub fn action(&self, offset: usize, s: usize) -> usize {
        self.actions[offset * self.values.num_states() + s]
    }

    pub fn layer(&self, offset: usize) -> &[usize] {
        let n = self.values.num_states();
        &self.actions[offset * n..(offset + 1) * n]
    }
}

/// Plans `horizon` steps from `start_step` trusting `schedule` for the
/// success probability at each future step.
pub fn time_augmented_vi_planner<R: RewardModel>(
    schedule: &TransitionSchedule,
    env: &GridWorld,
    rewards: &R,
    discount: f64,
    horizon: usize,
    start_step: u64,
) -> TimeAugmentedPolicy {
    let projection =
        TransitionProjection::from_schedule(schedule, start_step, env.time_scale(), horizon, env.deviation_weights());
    let (values, actions) = value_iteration_policy(env.structure(), &projection, rewards, discount);
    TimeAugmentedPolicy { values, actions, start_step }
}
