//! Scenario configuration files.
//!
//! A config file is JSON holding one scenario object, an array of them, or
//! `{"scenarios": [...]}`. A scenario may name a `preset`; its remaining
//! keys override the preset's values.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use super::presets;
use crate::envsim::{EnvError, GridMap, GridWorld};
use crate::estimator::EstimatorMode;
use crate::memory::PriorityConfig;
use crate::model::{TransitionSchedule, TvPomdpSpec};
use crate::planner::ProjectionMode;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("malformed config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("unknown preset {0:?}")]
    UnknownPreset(String),
    #[error("unknown agent {0:?}")]
    UnknownAgent(String),
    #[error("scenario {scenario:?}: {problems}", problems = .problems.join("; "))]
    Invalid { scenario: String, problems: Vec<String> },
    #[error("map {path}: {source}")]
    Map { path: PathBuf, source: EnvError },
    #[error("config contains no scenarios")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKind {
    Mpse,
    DtWindow,
    FullHistory,
    MostRecent,
    TaVi,
}

impl AgentKind {
    pub const ALL: [AgentKind; 5] =
        [AgentKind::Mpse, AgentKind::DtWindow, AgentKind::FullHistory, AgentKind::MostRecent, AgentKind::TaVi];

    pub fn name(self) -> &'static str {
        match self {
            AgentKind::Mpse => "mpse",
            AgentKind::DtWindow => "dt_window",
            AgentKind::FullHistory => "full_history",
            AgentKind::MostRecent => "most_recent",
            AgentKind::TaVi => "ta_vi",
        }
    }
}

impl fmt::Display for AgentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AgentKind {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL.into_iter().find(|a| a.name() == s).ok_or_else(|| ConfigError::UnknownAgent(s.to_string()))
    }
}

/// One agent or a list of agents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AgentSelection {
    One(AgentKind),
    Many(Vec<AgentKind>),
}

impl AgentSelection {
    pub fn to_vec(&self) -> Vec<AgentKind> {
        match self {
            AgentSelection::One(a) => vec![*a],
            AgentSelection::Many(v) => v.clone(),
        }
    }
}

/// A builtin world name or a text map file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EnvironmentSpec {
    Builtin(String),
    Map { map: PathBuf },
}

/// What the time-augmented planner believes the schedule to be.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaViSource {
    /// The true schedule's value at `t = 0`, held constant.
    #[default]
    StaleInitial,
    /// The true schedule.
    TrueSchedule,
    /// The unweighted window estimate, held over the horizon.
    WindowEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub environment: EnvironmentSpec,
    pub schedule: TransitionSchedule,
    /// Schedule time per environment step.
    pub time_scale: f64,
    pub agent: AgentSelection,
    pub window_size: usize,
    pub w_a: f64,
    pub w_r: f64,
    pub w_d: f64,
    pub epsilon: f64,
    pub delta_max: f64,
    pub estimator_mode: EstimatorMode,
    pub horizon: usize,
    pub projection_mode: ProjectionMode,
    pub discount: f64,
    pub obs_sigma: f64,
    pub num_steps: usize,
    pub seeds: Vec<u64>,
    pub initial_estimate: f64,
    /// Left/right slip weights.
    pub deviation_weights: [f64; 2],
    pub capture_radius: f64,
    pub ta_vi_source: TaViSource,
    /// Error band that ends the recovery period after a schedule switch.
    pub recovery_band: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let p = PriorityConfig::default();
        Self {
            name: "custom".into(),
            environment: EnvironmentSpec::Builtin("waypoints".into()),
            schedule: TransitionSchedule::Constant(0.7),
            time_scale: 0.4,
            agent: AgentSelection::One(AgentKind::Mpse),
            window_size: 20,
            w_a: p.w_a,
            w_r: p.w_r,
            w_d: p.w_d,
            epsilon: p.epsilon,
            delta_max: 0.02,
            estimator_mode: EstimatorMode::Scalar,
            horizon: 20,
            projection_mode: ProjectionMode::Hold,
            discount: 0.95,
            obs_sigma: 1.5,
            num_steps: 51,
            seeds: vec![0],
            initial_estimate: 0.5,
            deviation_weights: [0.5, 0.5],
            capture_radius: 1.0,
            ta_vi_source: TaViSource::StaleInitial,
            recovery_band: 0.1,
        }
    }
}

impl ScenarioConfig {
    pub fn priority(&self) -> PriorityConfig {
        PriorityConfig { w_a: self.w_a, w_r: self.w_r, w_d: self.w_d, epsilon: self.epsilon }
    }

    pub fn agents(&self) -> Vec<AgentKind> {
        self.agent.to_vec()
    }

    pub fn with_agents(mut self, agents: &[AgentKind]) -> Self {
        self.agent = AgentSelection::Many(agents.to_vec());
        self
    }

    pub fn with_seeds(mut self, seeds: impl IntoIterator<Item = u64>) -> Self {
        self.seeds = seeds.into_iter().collect();
        self
    }

    fn base_world(&self) -> Result<GridWorld, ConfigError> {
        match &self.environment {
            EnvironmentSpec::Builtin(name) => GridWorld::builtin(name).ok_or_else(|| ConfigError::Invalid {
                scenario: self.name.clone(),
                problems: vec![format!("unknown builtin environment {name:?} (expected waypoints or corridor)")],
            }),
            EnvironmentSpec::Map { map } => {
                let text = std::fs::read_to_string(map).map_err(|source| ConfigError::Read { path: map.clone(), source })?;
                let parsed = GridMap::parse(&text).map_err(|source| ConfigError::Map { path: map.clone(), source })?;
                Ok(parsed.into_world())
            }
        }
    }

    /// The configured world with schedule, sensor and slip settings applied.
    pub fn build_env(&self) -> Result<GridWorld, ConfigError> {
        let invalid = |e: EnvError| ConfigError::Invalid { scenario: self.name.clone(), problems: vec![e.to_string()] };
        self.base_world()?
            .with_schedule(self.schedule.clone(), self.time_scale)
            .with_obs_sigma(self.obs_sigma.max(0.0))
            .with_capture_radius(self.capture_radius)
            .map_err(invalid)?
            .with_deviation_weights(self.deviation_weights)
            .map_err(invalid)
    }

    /// Every violated invariant, reported together.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        let spec = TvPomdpSpec {
            num_states: 1,
            num_actions: 8,
            num_observations: 1,
            discount: self.discount,
            delta_max: self.delta_max,
            horizon: self.horizon,
            obs_sigma: self.obs_sigma,
        };
        out.extend(spec.validate().into_iter().map(|v| v.to_string()));
        if let Err(e) = self.schedule.validate() {
            out.push(e.to_string());
        }
        if let Err(e) = self.priority().validate() {
            out.push(e.to_string());
        }
        if !(self.time_scale > 0.0 && self.time_scale.is_finite()) {
            out.push("time_scale must be positive".into());
        }
        if self.window_size == 0 {
            out.push("window_size must be at least 1".into());
        }
        if self.num_steps == 0 {
            out.push("num_steps must be at least 1".into());
        }
        if self.seeds.is_empty() {
            out.push("seeds must not be empty".into());
        }
        if self.agents().is_empty() {
            out.push("agent list must not be empty".into());
        }
        if !(0.0..=1.0).contains(&self.initial_estimate) {
            out.push("initial_estimate must lie in [0, 1]".into());
        }
        if self.recovery_band.is_nan() || self.recovery_band <= 0.0 {
            out.push("recovery_band must be positive".into());
        }
        if let Err(e) = self.build_env() {
            out.push(e.to_string());
        }
        out
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let problems = self.problems();
        if problems.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid { scenario: self.name.clone(), problems })
        }
    }
}

fn overlay(base: &mut Value, patch: Value) {
    if let (Value::Object(b), Value::Object(p)) = (base, patch) {
        for (k, v) in p {
            b.insert(k, v);
        }
    }
}

fn scenario_from_value(mut v: Value, base_dir: Option<&Path>) -> Result<ScenarioConfig, ConfigError> {
    if let Some(obj) = v.as_object_mut() {
        if let Some(preset) = obj.remove("preset") {
            let name = preset.as_str().ok_or_else(|| ConfigError::UnknownPreset(preset.to_string()))?;
            let cfg = presets::preset(name).ok_or_else(|| ConfigError::UnknownPreset(name.to_string()))?;
            let mut merged = serde_json::to_value(cfg)?;
            overlay(&mut merged, v);
            v = merged;
        }
    }
    let mut cfg: ScenarioConfig = serde_json::from_value(v)?;
    if let (EnvironmentSpec::Map { map }, Some(dir)) = (&mut cfg.environment, base_dir) {
        if map.is_relative() {
            *map = dir.join(&*map);
        }
    }
    Ok(cfg)
}

/// Parses config text. Relative map paths resolve against `base_dir`.
pub fn parse_config(text: &str, base_dir: Option<&Path>) -> Result<Vec<ScenarioConfig>, ConfigError> {
    let root: Value = serde_json::from_str(text)?;
    let items = match root {
        Value::Array(items) => items,
        Value::Object(mut obj) if obj.contains_key("scenarios") => match obj.remove("scenarios") {
            Some(Value::Array(items)) => items,
            _ => return Err(ConfigError::Parse(serde::de::Error::custom("\"scenarios\" must be an array"))),
        },
        other => vec![other],
    };
    if items.is_empty() {
        return Err(ConfigError::Empty);
    }
    items.into_iter().map(|v| scenario_from_value(v, base_dir)).collect()
}

/// Reads and validates every scenario in a config file.
pub fn load_config(path: &Path) -> Result<Vec<ScenarioConfig>, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.to_path_buf(), source })?;
    let cfgs = parse_config(&text, path.parent())?;
    for cfg in &cfgs {
        cfg.validate()?;
    }
    Ok(cfgs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        ScenarioConfig::default().validate().unwrap();
    }

    #[test]
    fn preset_overlay_replaces_keys() {
        let cfgs = parse_config(r#"{"preset": "scenario2", "delta_max": 0.05, "agent": ["mpse", "ta_vi"]}"#, None).unwrap();
        assert_eq!(cfgs.len(), 1);
        assert_eq!(cfgs[0].delta_max, 0.05);
        assert_eq!(cfgs[0].agents(), vec![AgentKind::Mpse, AgentKind::TaVi]);
        assert_eq!(cfgs[0].schedule, TransitionSchedule::Linear { p0: 1.0, slope: -0.05 });
    }

    #[test]
    fn several_scenarios() {
        let text = r#"{"scenarios": [{"preset": "scenario1"}, {"preset": "hw_switch", "seeds": [4]}]}"#;
        let cfgs = parse_config(text, None).unwrap();
        assert_eq!(cfgs.iter().map(|c| c.name.as_str()).collect::<Vec<_>>(), vec!["scenario1", "hw_switch"]);
        assert_eq!(cfgs[1].seeds, vec![4]);
        assert_eq!(parse_config("[]", None).unwrap_err().to_string(), "config contains no scenarios");
    }

    #[test]
    fn validation_collects_problems() {
        let cfg = ScenarioConfig { discount: 1.5, delta_max: -0.1, seeds: vec![], ..Default::default() };
        match cfg.validate() {
            Err(ConfigError::Invalid { problems, .. }) => {
                assert!(problems.contains(&"discount out of range".to_string()));
                assert!(problems.contains(&"delta_max out of range".to_string()));
                assert!(problems.contains(&"seeds must not be empty".to_string()));
            }
            other => panic!("expected invalid config, got {other:?}"),
        }
    }

    #[test]
    fn unknown_keys_and_names_are_rejected() {
        assert!(matches!(parse_config(r#"{"windw_size": 3}"#, None), Err(ConfigError::Parse(_))));
        assert!(matches!(parse_config(r#"{"preset": "nope"}"#, None), Err(ConfigError::UnknownPreset(_))));
        assert!(matches!("greedy".parse::<AgentKind>(), Err(ConfigError::UnknownAgent(_))));
        let cfg = parse_config(r#"{"environment": "ocean"}"#, None).unwrap().remove(0);
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn map_paths_resolve_against_config_dir() {
        let cfg = parse_config(r#"{"environment": {"map": "maps/a.txt"}}"#, Some(Path::new("/etc/x"))).unwrap().remove(0);
        assert_eq!(cfg.environment, EnvironmentSpec::Map { map: PathBuf::from("/etc/x/maps/a.txt") });
    }

    #[test]
    fn agent_names_round_trip() {
        for a in AgentKind::ALL {
            assert_eq!(a.name().parse::<AgentKind>().unwrap(), a);
            assert_eq!(serde_json::to_string(&a).unwrap(), format!("\"{}\"", a.name()));
        }
    }
}
