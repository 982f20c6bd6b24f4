//! Builtin scenarios.
//!
//! The waypoint presets run on the 40x40 sine course and the `hw_*` presets
//! on the 30x10 corridor. Steps are `0.4` schedule time units apart, except
//! for the switching presets, which step at `0.2` with a looser rate bound.

use super::config::{AgentKind, AgentSelection, EnvironmentSpec, ScenarioConfig};
use crate::model::TransitionSchedule;

pub const PRESET_NAMES: [&str; 6] = ["scenario1", "scenario2", "scenario3", "hw_constant", "hw_exp", "hw_switch"];

/// Agents compared in the benchmark suite.
pub const BENCH_AGENTS: [AgentKind; 4] = [AgentKind::Mpse, AgentKind::DtWindow, AgentKind::FullHistory, AgentKind::TaVi];

/// Presets run by the benchmark suite.
pub const BENCH_SCENARIOS: [&str; 3] = ["scenario2", "hw_exp", "hw_switch"];

fn waypoints(name: &str, schedule: TransitionSchedule) -> ScenarioConfig {
    ScenarioConfig {
        name: name.into(),
        environment: EnvironmentSpec::Builtin("waypoints".into()),
        schedule,
        time_scale: 0.4,
        agent: AgentSelection::Many(BENCH_AGENTS.to_vec()),
        delta_max: 0.02,
        horizon: 20,
        num_steps: 51,
        seeds: (0..50).collect(),
        ..ScenarioConfig::default()
    }
}

fn corridor(name: &str, schedule: TransitionSchedule) -> ScenarioConfig {
    ScenarioConfig {
        environment: EnvironmentSpec::Builtin("corridor".into()),
        horizon: 40,
        ..waypoints(name, schedule)
    }
}

fn switching(base: ScenarioConfig) -> ScenarioConfig {
    ScenarioConfig { time_scale: 0.2, delta_max: 0.03, num_steps: 101, ..base }
}

pub fn preset(name: &str) -> Option<ScenarioConfig> {
    let switch = TransitionSchedule::SigmoidGaussianSwitch { switch_time: 10.0 };
    Some(match name {
        "scenario1" => waypoints(name, TransitionSchedule::Constant(0.7)),
        "scenario2" => waypoints(name, TransitionSchedule::Linear { p0: 1.0, slope: -0.05 }),
        "scenario3" => switching(waypoints(name, switch)),
        "hw_constant" => corridor(name, TransitionSchedule::Constant(0.9)),
        "hw_exp" => corridor(name, TransitionSchedule::Exponential { p0: 0.9, rate: 0.05 }),
        "hw_switch" => switching(corridor(name, switch)),
        _ => return None,
    })
}

/// The benchmark matrix: three scenarios, four agents, fifty seeds each.
pub fn bench_suite() -> Vec<ScenarioConfig> {
    BENCH_SCENARIOS.iter().map(|n| preset(n).expect("builtin preset")).collect()
}
