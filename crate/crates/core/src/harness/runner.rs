//! The per-step control loop and the parallel benchmark driver.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{AgentKind, ScenarioConfig, TaViSource};
use super::HarnessError;
use crate::baselines::{time_augmented_vi_planner, uniform_weights};
use crate::belief::{belief_update, Belief, BeliefError, EstimatedTransition};
use crate::envsim::{EnvStreams, GridWorld};
use crate::estimator::{estimate_from_weighted, estimate_step, TransitionEstimate};
use crate::memory::{MemoryRecord, MemoryWindow, PriorityConfig};
use crate::model::TransitionSchedule;
use crate::planner::{
    project_transition_forward, select_action, time_varying_value_iteration, TransitionProjection,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    /// Schedule time of the step.
    pub t: f64,
    pub p_true: f64,
    pub p_hat: f64,
    pub action: usize,
    pub reward: f64,
    pub cum_reward: f64,
    pub mae_step: f64,
    pub belief_entropy: f64,
    pub success: bool,
    pub observation: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTotals {
    pub mae: f64,
    pub cumulative_reward: f64,
    pub waypoints_followed: usize,
    pub goals_reached: usize,
    /// Largest `|p_hat_t - p_hat_{t-1}|` over the run.
    pub max_estimate_step: f64,
    /// Largest `|sum(b) - 1|` over every belief held during the run.
    pub max_belief_sum_error: f64,
    pub min_belief_entry: f64,
    /// Observations the filter could not explain; the predictive belief was kept.
    pub belief_fallbacks: usize,
    /// Steps into the corridor's unsafe cells.
    pub unsafe_steps: usize,
    /// Steps after the schedule switch until the estimate is back within the
    /// recovery band. `None` without a switch or without recovery.
    pub recovery_steps: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub scenario: String,
    pub agent: AgentKind,
    pub seed: u64,
    pub steps: Vec<StepRecord>,
    pub totals: RunTotals,
}

/// Mutable state of one agent's estimator.
struct Estimator<'a> {
    kind: AgentKind,
    cfg: &'a ScenarioConfig,
    priority: PriorityConfig,
    window: MemoryWindow,
    history: Vec<MemoryRecord>,
    assumed: Option<TransitionSchedule>,
    est: TransitionEstimate,
}

impl<'a> Estimator<'a> {
    fn new(kind: AgentKind, cfg: &'a ScenarioConfig, env: &GridWorld) -> Self {
        let assumed = match (kind, cfg.ta_vi_source) {
            (AgentKind::TaVi, TaViSource::StaleInitial) => Some(TransitionSchedule::Constant(env.success_prob_at(0))),
            (AgentKind::TaVi, TaViSource::TrueSchedule) => Some(cfg.schedule.clone()),
            _ => None,
        };
        let p0 = match &assumed {
            Some(s) => s.eval(0.0),
            None => cfg.initial_estimate,
        };
        let mode = if assumed.is_some() { Default::default() } else { cfg.estimator_mode };
        Self {
            kind,
            cfg,
            priority: cfg.priority(),
            window: MemoryWindow::new(cfg.window_size),
            history: Vec::new(),
            assumed,
            est: TransitionEstimate::initial(p0, env.deviation_weights(), mode),
        }
    }

    fn advance(&mut self, now: u64) -> Result<(), HarnessError> {
        let delta = self.cfg.delta_max;
        let prev = &self.est;
        self.est = if let Some(s) = &self.assumed {
            let p = s.eval(now as f64 * self.cfg.time_scale);
            let p = p.clamp(prev.p_hat - delta, prev.p_hat + delta).clamp(0.0, 1.0);
            TransitionEstimate { t: now, p_hat: p, rows: None, prev_p_hat: Some(prev.p_hat), prev_rows: None }
        } else {
            match self.kind {
                AgentKind::Mpse => estimate_step(&self.window, prev, now, &self.priority, delta)?,
                AgentKind::DtWindow | AgentKind::TaVi => {
                    estimate_from_weighted(&uniform_weights(self.window.records()), prev, now, delta)?
                }
                AgentKind::FullHistory => estimate_from_weighted(&uniform_weights(&self.history), prev, now, delta)?,
                AgentKind::MostRecent => {
                    estimate_from_weighted(&uniform_weights(self.window.newest()), prev, now, delta)?
                }
            }
        };
        Ok(())
    }

    fn push(&mut self, record: MemoryRecord) -> Result<(), HarnessError> {
        self.window.push(record)?;
        if self.kind == AgentKind::FullHistory {
            self.history.push(record);
        }
        Ok(())
    }

    fn projection(&self, env: &GridWorld) -> TransitionProjection {
        project_transition_forward(
            &self.est,
            env.deviation_weights(),
            self.cfg.delta_max,
            self.cfg.projection_mode,
            self.cfg.horizon,
        )
    }
}

fn track_belief(b: &Belief, totals: &mut RunTotals) {
    totals.max_belief_sum_error = totals.max_belief_sum_error.max((b.sum() - 1.0).abs());
    totals.min_belief_entry = totals.min_belief_entry.min(b.min_entry());
}

fn recovery_steps(steps: &[StepRecord], switch: Option<f64>, band: f64) -> Option<usize> {
    let switch = switch?;
    let first_after = steps.iter().position(|s| s.t > switch)?;
    steps[first_after..].iter().position(|s| (s.p_hat - s.p_true).abs() < band)
}

/// One seeded run of one agent. Deterministic in `(cfg, agent, seed)`.
pub fn run_agent(cfg: &ScenarioConfig, agent: AgentKind, seed: u64) -> Result<RunResult, HarnessError> {
    cfg.validate()?;
    let env = cfg.build_env()?;
    run_in(&env, cfg, agent, seed)
}

fn run_in(env: &GridWorld, cfg: &ScenarioConfig, agent: AgentKind, seed: u64) -> Result<RunResult, HarnessError> {
    let structure = env.structure();
    let n = env.num_cells();
    let mut streams = EnvStreams::new(seed);
    let mut state = env.reset(seed);
    let mut belief = Belief::point_mass(n, state.cell);
    let mut estimator = Estimator::new(agent, cfg, env);
    let mut steps = Vec::with_capacity(cfg.num_steps);
    let mut totals = RunTotals {
        mae: 0.0,
        cumulative_reward: 0.0,
        waypoints_followed: 0,
        goals_reached: 0,
        max_estimate_step: 0.0,
        max_belief_sum_error: 0.0,
        min_belief_entry: 1.0,
        belief_fallbacks: 0,
        unsafe_steps: 0,
        recovery_steps: None,
    };
    track_belief(&belief, &mut totals);

    for k in 0..cfg.num_steps {
        let now = k as u64;
        if k > 0 {
            estimator.advance(now)?;
            let e = &estimator.est;
            let prev = e.prev_p_hat.expect("advanced estimates keep their predecessor");
            totals.max_estimate_step = totals.max_estimate_step.max((e.p_hat - prev).abs());
        }
        let rewards = env.planning_rewards(state.next_waypoint_index);
        let action = match &estimator.assumed {
            Some(schedule) => {
                let policy = time_augmented_vi_planner(schedule, env, &rewards, cfg.discount, cfg.horizon, now);
                let proj = TransitionProjection::from_schedule(
                    schedule,
                    now,
                    cfg.time_scale,
                    cfg.horizon,
                    env.deviation_weights(),
                );
                select_action(&belief, &policy.values, structure, &proj, &rewards, cfg.discount)
            }
            None => {
                let proj = estimator.projection(env);
                let vt = time_varying_value_iteration(structure, &proj, &rewards, cfg.discount);
                select_action(&belief, &vt, structure, &proj, &rewards, cfg.discount)
            }
        };

        let out = env.step(&state, action, &mut streams);
        let theta = estimator.est.outcome_distribution(env.deviation_weights());
        let t_hat = EstimatedTransition { structure, theta: &theta };
        let next_belief = match belief_update(&belief, action, out.observation, &t_hat, env.observation_model()) {
            Ok(b) => b,
            Err(BeliefError::ImpossibleObservation { predictive, .. }) => {
                totals.belief_fallbacks += 1;
                predictive
            }
            Err(e) => return Err(e.into()),
        };
        track_belief(&next_belief, &mut totals);
        estimator.push(MemoryRecord {
            t: now,
            state: belief.map_state(),
            action,
            successor: next_belief.map_state(),
            success: out.success,
            outcome: out.outcome,
            observation: out.observation,
        })?;

        totals.cumulative_reward += out.reward;
        totals.waypoints_followed += out.next.next_waypoint_index - state.next_waypoint_index;
        totals.unsafe_steps += usize::from(!env.is_safe(out.next.cell));
        let p_hat = estimator.est.p_hat;
        steps.push(StepRecord {
            step: k,
            t: now as f64 * cfg.time_scale,
            p_true: out.p_true,
            p_hat,
            action,
            reward: out.reward,
            cum_reward: totals.cumulative_reward,
            mae_step: (p_hat - out.p_true).abs(),
            belief_entropy: belief.entropy(),
            success: out.success,
            observation: out.observation,
        });

        if out.goal_reached {
            totals.goals_reached += 1;
            state = env.respawn(out.next);
            belief = Belief::point_mass(n, state.cell);
        } else {
            state = out.next;
            belief = next_belief;
        }
    }

    totals.mae = steps.iter().map(|s| s.mae_step).sum::<f64>() / steps.len() as f64;
    totals.recovery_steps = recovery_steps(&steps, cfg.schedule.switch_time(), cfg.recovery_band);
    Ok(RunResult { scenario: cfg.name.clone(), agent, seed, steps, totals })
}

/// One run per configured agent at `seed`.
pub fn run_episode(cfg: &ScenarioConfig, seed: u64) -> Result<Vec<RunResult>, HarnessError> {
    cfg.validate()?;
    let env = cfg.build_env()?;
    cfg.agents().into_iter().map(|a| run_in(&env, cfg, a, seed)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Sample standard deviation; zero for a single run.
    pub std: f64,
}

impl MeanStd {
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let std = if xs.len() > 1 {
            (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Self { mean, std }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentAggregate {
    pub scenario: String,
    pub agent: AgentKind,
    pub runs: usize,
    pub mae: MeanStd,
    pub cumulative_reward: MeanStd,
    pub waypoints_followed: MeanStd,
    pub goals_reached: MeanStd,
    pub belief_fallbacks: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub runs: Vec<RunResult>,
    pub aggregates: Vec<AgentAggregate>,
}

impl BenchmarkReport {
    pub fn aggregate(&self, scenario: &str, agent: AgentKind) -> Option<&AgentAggregate> {
        self.aggregates.iter().find(|a| a.scenario == scenario && a.agent == agent)
    }

    /// Runs of one scenario and agent, in seed order.
    pub fn runs_of<'a>(&'a self, scenario: &'a str, agent: AgentKind) -> impl Iterator<Item = &'a RunResult> + 'a {
        self.runs.iter().filter(move |r| r.scenario == scenario && r.agent == agent)
    }
}

/// Mean and sample deviation per `(scenario, agent)`, in first-seen order.
pub fn aggregate(runs: &[RunResult]) -> Vec<AgentAggregate> {
    let mut keys: Vec<(&str, AgentKind)> = Vec::new();
    for r in runs {
        if !keys.contains(&(r.scenario.as_str(), r.agent)) {
            keys.push((r.scenario.as_str(), r.agent));
        }
    }
    keys.into_iter()
        .map(|(scenario, agent)| {
            let group: Vec<&RunResult> = runs.iter().filter(|r| r.scenario == scenario && r.agent == agent).collect();
            let stat = |f: &dyn Fn(&RunTotals) -> f64| MeanStd::of(&group.iter().map(|r| f(&r.totals)).collect::<Vec<_>>());
            AgentAggregate {
                scenario: scenario.to_string(),
                agent,
                runs: group.len(),
                mae: stat(&|t| t.mae),
                cumulative_reward: stat(&|t| t.cumulative_reward),
                waypoints_followed: stat(&|t| t.waypoints_followed as f64),
                goals_reached: stat(&|t| t.goals_reached as f64),
                belief_fallbacks: group.iter().map(|r| r.totals.belief_fallbacks).sum(),
            }
        })
        .collect()
}

/// Thread cap from `TVPOMDP_THREADS`; unset means rayon's default.
pub fn thread_limit() -> Result<Option<usize>, HarnessError> {
    match std::env::var("TVPOMDP_THREADS") {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(HarnessError::Threads(v)),
        },
    }
}

/// Every `(scenario, agent, seed)` run of the given configs, in parallel.
pub fn run_suite(cfgs: &[ScenarioConfig]) -> Result<BenchmarkReport, HarnessError> {
    let mut envs = Vec::with_capacity(cfgs.len());
    for cfg in cfgs {
        cfg.validate()?;
        envs.push(cfg.build_env()?);
    }
    let jobs: Vec<(usize, AgentKind, u64)> = cfgs
        .iter()
        .enumerate()
        .flat_map(|(i, cfg)| cfg.agents().into_iter().flat_map(move |a| cfg.seeds.iter().map(move |&s| (i, a, s))))
        .collect();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_limit()? {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| HarnessError::Runtime(e.to_string()))?;
    let runs = pool.install(|| {
        jobs.par_iter()
            .map(|&(i, agent, seed)| run_in(&envs[i], &cfgs[i], agent, seed))
            .collect::<Result<Vec<_>, _>>()
    })?;
    let aggregates = aggregate(&runs);
    Ok(BenchmarkReport { runs, aggregates })
}

pub fn run_benchmark(cfg: &ScenarioConfig) -> Result<BenchmarkReport, HarnessError> {
    run_suite(std::slice::from_ref(cfg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::presets::preset;

    fn small(name: &str) -> ScenarioConfig {
        ScenarioConfig { num_steps: 12, seeds: vec![1, 2], ..preset(name).unwrap() }
    }

    #[test]
    fn runs_are_deterministic() {
        let cfg = small("scenario2");
        let a = run_agent(&cfg, AgentKind::Mpse, 3).unwrap();
        let b = run_agent(&cfg, AgentKind::Mpse, 3).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn estimates_respect_rate_bound() {
        let cfg = small("scenario2");
        for agent in AgentKind::ALL {
            let r = run_agent(&cfg, agent, 5).unwrap();
            assert!(r.totals.max_estimate_step <= cfg.delta_max + 1e-12, "{agent}");
            assert!(r.totals.max_belief_sum_error <= 1e-9);
            assert!(r.totals.min_belief_entry >= 0.0);
        }
    }

    #[test]
    fn environment_draws_do_not_depend_on_agent() {
        let cfg = small("hw_constant");
        let a = run_agent(&cfg, AgentKind::Mpse, 8).unwrap();
        let b = run_agent(&cfg, AgentKind::FullHistory, 8).unwrap();
        let slips = |r: &RunResult| r.steps.iter().map(|s| s.success).collect::<Vec<_>>();
        assert_eq!(slips(&a), slips(&b));
    }

    #[test]
    fn mae_is_mean_of_step_errors() {
        let r = run_agent(&small("hw_exp"), AgentKind::DtWindow, 2).unwrap();
        let mean = r.steps.iter().map(|s| s.mae_step).sum::<f64>() / r.steps.len() as f64;
        assert_eq!(r.totals.mae, mean);
        assert_eq!(r.steps.len(), 12);
    }

    #[test]
    fn single_seed_aggregate_equals_run() {
        let cfg = ScenarioConfig { seeds: vec![4], ..small("scenario1") }.with_agents(&[AgentKind::Mpse]);
        let report = run_benchmark(&cfg).unwrap();
        let agg = &report.aggregates[0];
        assert_eq!(agg.runs, 1);
        assert_eq!(agg.mae.mean, report.runs[0].totals.mae);
        assert_eq!(agg.mae.std, 0.0);
        assert_eq!(agg.cumulative_reward.mean, report.runs[0].totals.cumulative_reward);
    }

    #[test]
    fn empty_seeds_are_rejected() {
        let cfg = ScenarioConfig { seeds: vec![], ..small("scenario1") };
        assert!(matches!(run_benchmark(&cfg), Err(HarnessError::Config(_))));
    }

    #[test]
    fn recovery_counts_from_first_step_after_switch() {
        let step = |t: f64, p_hat: f64, p_true: f64| StepRecord {
            step: 0,
            t,
            p_true,
            p_hat,
            action: 0,
            reward: 0.0,
            cum_reward: 0.0,
            mae_step: 0.0,
            belief_entropy: 0.0,
            success: true,
            observation: 0,
        };
        let steps = vec![step(9.0, 0.5, 0.5), step(10.5, 0.9, 0.5), step(11.0, 0.7, 0.5), step(11.5, 0.55, 0.5)];
        assert_eq!(recovery_steps(&steps, Some(10.0), 0.1), Some(2));
        assert_eq!(recovery_steps(&steps, None, 0.1), None);
        assert_eq!(recovery_steps(&steps[..3], Some(10.0), 0.1), None);
    }
}
