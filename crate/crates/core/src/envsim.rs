//! Grid-world environments with schedule-driven slip and a noisy position
//! sensor.
//!
//! Cells are indexed `row * width + col`. Actions are the eight compass
//! headings in clockwise order starting at north; a failed move slips to one
//! of the two lateral neighbours of the intended heading. Moves that would
//! leave the grid are truncated to the boundary.

use std::fmt;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::belief::ObservationModel;
use crate::model::{outcome_distribution, StructuredTransition, TransitionSchedule};
use crate::planner::RewardModel;
use crate::rng::{stream, Stream};

pub const NUM_HEADINGS: usize = 8;

/// Row/column offsets of the headings N, NE, E, SE, S, SW, W, NW.
pub const HEADINGS: [(i64, i64); NUM_HEADINGS] =
    [(-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1)];

pub const HEADING_NAMES: [&str; NUM_HEADINGS] = ["N", "NE", "E", "SE", "S", "SW", "W", "NW"];

pub const WAYPOINT_REWARD: f64 = 10.0;
pub const GOAL_REWARD: f64 = 50.0;
pub const SAFE_REWARD: f64 = -1.0;
pub const UNSAFE_REWARD: f64 = -10.0;
pub const OBJECTIVE_REWARD: f64 = 5.0;

const CORRIDOR_MAP: &str = "\
##############################
##############################
#...........##################
#S............################
#................#############
############.................#
##############..............G#
#################............#
##############################
##############################
";

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("map is empty")]
    EmptyMap,
    #[error("map row {row} has length {len}, expected {expected}")]
    RaggedMap { row: usize, len: usize, expected: usize },
    #[error("unknown map character {ch:?} at row {row}, column {col}")]
    UnknownSymbol { ch: char, row: usize, col: usize },
    #[error("map needs exactly one {symbol:?}, found {count}")]
    MarkerCount { symbol: char, count: usize },
    #[error("cell ({row}, {col}) lies outside a {width}x{height} grid")]
    OutOfBounds { row: usize, col: usize, width: usize, height: usize },
    #[error("invalid environment: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardScheme {
    /// +10 per waypoint in order, +50 at the goal once all are collected.
    Waypoints,
    /// −1 inside the safe corridor, −10 outside, +5 at the objective.
    Corridor,
}

#[derive(Debug, Clone)]
pub struct GridWorld {
    width: usize,
    height: usize,
    safe: Vec<bool>,
    waypoints: Vec<usize>,
    capture_radius: f64,
    goal: usize,
    start: usize,
    schedule: TransitionSchedule,
    time_scale: f64,
    deviation_weights: Vec<f64>,
    scheme: RewardScheme,
    structure: StructuredTransition,
    observation: ObservationModel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnvState {
    pub cell: usize,
    pub t: u64,
    pub next_waypoint_index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub next: EnvState,
    pub reward: f64,
    pub observation: usize,
    pub success: bool,
    pub intended: usize,
    /// 0 for the intended move, 1 and 2 for the left and right slips.
    pub outcome: usize,
    /// Success probability the environment used for this step.
    pub p_true: f64,
    /// Set when the step completed the course; see [`GridWorld::respawn`].
    pub goal_reached: bool,
}

/// The environment's random draws for one run, split into independent
/// streams so the agent's choices never shift the sensor noise.
#[derive(Debug, Clone)]
pub struct EnvStreams {
    pub transition: ChaCha8Rng,
    pub observation: ChaCha8Rng,
}

impl EnvStreams {
    pub fn new(seed: u64) -> Self {
        Self {
            transition: stream(seed, Stream::Environment),
            observation: stream(seed, Stream::Observation),
        }
    }
}

fn step_cell(width: usize, height: usize, cell: usize, heading: usize) -> usize {
    let (dr, dc) = HEADINGS[heading];
    let r = (cell / width) as i64 + dr;
    let c = (cell % width) as i64 + dc;
    let r = r.clamp(0, height as i64 - 1) as usize;
    let c = c.clamp(0, width as i64 - 1) as usize;
    r * width + c
}

fn build_structure(width: usize, height: usize, deviation_weights: &[f64]) -> StructuredTransition {
    let mut successors = Vec::with_capacity(width * height * NUM_HEADINGS);
    for s in 0..width * height {
        for a in 0..NUM_HEADINGS {
            successors.push(vec![
                step_cell(width, height, s, a),
                step_cell(width, height, s, (a + NUM_HEADINGS - 1) % NUM_HEADINGS),
                step_cell(width, height, s, (a + 1) % NUM_HEADINGS),
            ]);
        }
    }
    StructuredTransition::new(width * height, NUM_HEADINGS, successors, 1.0, deviation_weights.to_vec())
        .expect("grid successor lists are well formed")
}

fn normalize_weights(w: [f64; 2]) -> Result<Vec<f64>, EnvError> {
    let sum = w[0] + w[1];
    if !(w[0] >= 0.0 && w[1] >= 0.0 && sum > 0.0 && sum.is_finite()) {
        return Err(EnvError::Invalid(format!("deviation weights {w:?} must be non-negative with positive sum")));
    }
    Ok(vec![w[0] / sum, w[1] / sum])
}

impl GridWorld {
    /// Open `width x height` field, all cells safe, no waypoints, goal at the
    /// far corner. Useful for tests and as a base for the builder methods.
    pub fn open(width: usize, height: usize, start: (usize, usize)) -> Self {
        assert!(width > 0 && height > 0, "grid must be non-empty");
        assert!(start.0 < height && start.1 < width, "start outside the grid");
        let deviation_weights = vec![0.5, 0.5];
        Self {
            width,
            height,
            safe: vec![true; width * height],
            waypoints: Vec::new(),
            capture_radius: 1.0,
            goal: width * height - 1,
            start: start.0 * width + start.1,
            schedule: TransitionSchedule::Constant(1.0),
            time_scale: 1.0,
            structure: build_structure(width, height, &deviation_weights),
            deviation_weights,
            scheme: RewardScheme::Waypoints,
            observation: ObservationModel::gaussian(width, height, 0.0),
        }
    }

    /// 40x40 open field with 15 waypoints along a sine path.
    pub fn builtin_waypoints() -> Self {
        let mut w = Self::open(40, 40, (20, 2));
        let waypoints = (1..=15)
            .map(|i| {
                let row = 20.0 + (6.0 * (i as f64 * std::f64::consts::PI / 5.0).sin()).round();
                (row as usize, 2 + 2 * i)
            })
            .collect::<Vec<_>>();
        w.set_waypoints(&waypoints).expect("builtin waypoints are in bounds");
        w.set_goal((20, 36)).expect("builtin goal is in bounds");
        w
    }

    /// 30x10 occupancy grid with a bending three-cell corridor.
    pub fn builtin_corridor() -> Self {
        GridMap::parse(CORRIDOR_MAP).expect("builtin corridor map parses").into_world()
    }

    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "waypoints" => Some(Self::builtin_waypoints()),
            "corridor" => Some(Self::builtin_corridor()),
            _ => None,
        }
    }

    fn cell_of(&self, (row, col): (usize, usize)) -> Result<usize, EnvError> {
        if row >= self.height || col >= self.width {
            return Err(EnvError::OutOfBounds { row, col, width: self.width, height: self.height });
        }
        Ok(row * self.width + col)
    }

    pub fn set_waypoints(&mut self, cells: &[(usize, usize)]) -> Result<(), EnvError> {
        self.waypoints = cells.iter().map(|&rc| self.cell_of(rc)).collect::<Result<_, _>>()?;
        Ok(())
    }

    pub fn set_goal(&mut self, cell: (usize, usize)) -> Result<(), EnvError> {
        self.goal = self.cell_of(cell)?;
        Ok(())
    }

    pub fn set_start(&mut self, cell: (usize, usize)) -> Result<(), EnvError> {
        self.start = self.cell_of(cell)?;
        Ok(())
    }

    pub fn set_unsafe(&mut self, cell: (usize, usize)) -> Result<(), EnvError> {
        let c = self.cell_of(cell)?;
        self.safe[c] = false;
        Ok(())
    }

    pub fn with_schedule(mut self, schedule: TransitionSchedule, time_scale: f64) -> Self {
        self.schedule = schedule;
        self.time_scale = time_scale;
        self
    }

    pub fn with_obs_sigma(mut self, sigma: f64) -> Self {
        self.observation = ObservationModel::gaussian(self.width, self.height, sigma);
        self
    }

    pub fn with_capture_radius(mut self, radius: f64) -> Result<Self, EnvError> {
        if !(radius >= 0.0 && radius.is_finite()) {
            return Err(EnvError::Invalid(format!("capture radius {radius} must be non-negative")));
        }
        self.capture_radius = radius;
        Ok(self)
    }

    pub fn with_reward_scheme(mut self, scheme: RewardScheme) -> Self {
        self.scheme = scheme;
        self
    }

    /// Left/right slip weights; they are normalized to sum to one.
    pub fn with_deviation_weights(mut self, weights: [f64; 2]) -> Result<Self, EnvError> {
        self.deviation_weights = normalize_weights(weights)?;
        self.structure = build_structure(self.width, self.height, &self.deviation_weights);
        Ok(self)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn num_cells(&self) -> usize {
        self.width * self.height
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn goal(&self) -> usize {
        self.goal
    }

    pub fn waypoints(&self) -> &[usize] {
        &self.waypoints
    }

    pub fn capture_radius(&self) -> f64 {
        self.capture_radius
    }

    pub fn is_safe(&self, cell: usize) -> bool {
        self.safe[cell]
    }

    pub fn schedule(&self) -> &TransitionSchedule {
        &self.schedule
    }

    pub fn time_scale(&self) -> f64 {
        self.time_scale
    }

    pub fn reward_scheme(&self) -> RewardScheme {
        self.scheme
    }

    pub fn deviation_weights(&self) -> &[f64] {
        &self.deviation_weights
    }

    /// Transition structure with success probability 1; pair it with an
    /// outcome distribution to get actual rows.
    pub fn structure(&self) -> &StructuredTransition {
        &self.structure
    }

    pub fn transition_structure(&self, p: f64) -> StructuredTransition {
        self.structure.with_success_prob(p)
    }

    pub fn observation_model(&self) -> &ObservationModel {
        &self.observation
    }

    pub fn coords(&self, cell: usize) -> (usize, usize) {
        (cell / self.width, cell % self.width)
    }

    pub fn distance(&self, a: usize, b: usize) -> f64 {
        let (ar, ac) = self.coords(a);
        let (br, bc) = self.coords(b);
        let dr = ar as f64 - br as f64;
        let dc = ac as f64 - bc as f64;
        (dr * dr + dc * dc).sqrt()
    }

    fn captures(&self, cell: usize, target: usize) -> bool {
        self.distance(cell, target) <= self.capture_radius + 1e-12
    }

    /// Ground-truth success probability at integer step `t`.
    pub fn success_prob_at(&self, t: u64) -> f64 {
        self.schedule.eval(t as f64 * self.time_scale)
    }

    pub fn reset(&self, _seed: u64) -> EnvState {
        EnvState { cell: self.start, t: 0, next_waypoint_index: 0 }
    }

    /// Back to the start with waypoint progress cleared; time keeps running.
    pub fn respawn(&self, s: EnvState) -> EnvState {
        EnvState { cell: self.start, t: s.t, next_waypoint_index: 0 }
    }

    pub fn step(&self, s: &EnvState, a: usize, streams: &mut EnvStreams) -> StepOutcome {
        assert!(a < NUM_HEADINGS, "action {a} is not a heading");
        let p = self.success_prob_at(s.t);
        let theta = outcome_distribution(p, &self.deviation_weights);
        let u_success: f64 = streams.transition.random();
        let u_kernel: f64 = streams.transition.random();
        let (cell, outcome) = self.structure.sample(s.cell, a, &theta, u_success, u_kernel);
        let intended = step_cell(self.width, self.height, s.cell, a);
        let arrived = EnvState { cell, t: s.t + 1, next_waypoint_index: s.next_waypoint_index };
        let (reward, next_waypoint_index, goal_reached) = match self.scheme {
            RewardScheme::Waypoints => {
                let (r, idx) = self.waypoint_reward(&arrived);
                let goal = idx == self.waypoints.len() && r == GOAL_REWARD;
                (r, idx, goal)
            }
            RewardScheme::Corridor => (self.corridor_reward(cell), s.next_waypoint_index, cell == self.goal),
        };
        let observation = self.observe(&arrived, &mut streams.observation);
        StepOutcome {
            next: EnvState { next_waypoint_index, ..arrived },
            reward,
            observation,
            success: cell == intended,
            intended,
            outcome,
            p_true: p,
            goal_reached,
        }
    }

    pub fn waypoint_reward(&self, s: &EnvState) -> (f64, usize) {
        let idx = s.next_waypoint_index;
        match self.waypoints.get(idx) {
            Some(&w) if self.captures(s.cell, w) => (WAYPOINT_REWARD, idx + 1),
            Some(_) => (0.0, idx),
            None if self.captures(s.cell, self.goal) => (GOAL_REWARD, idx),
            None => (0.0, idx),
        }
    }

    pub fn corridor_reward(&self, cell: usize) -> f64 {
        if cell == self.goal {
            OBJECTIVE_REWARD
        } else if self.safe[cell] {
            SAFE_REWARD
        } else {
            UNSAFE_REWARD
        }
    }

    /// Always draws two uniforms, even when the sensor is noiseless.
    pub fn observe(&self, s: &EnvState, rng: &mut ChaCha8Rng) -> usize {
        let u_row: f64 = rng.random();
        let u_col: f64 = rng.random();
        self.observation.sample(s.cell, u_row, u_col)
    }

    /// State rewards the agent plans against, given its waypoint progress.
    pub fn planning_rewards(&self, next_waypoint_index: usize) -> CellRewards {
        let n = self.num_cells();
        match self.scheme {
            RewardScheme::Waypoints => {
                let (target, value) = match self.waypoints.get(next_waypoint_index) {
                    Some(&w) => (w, WAYPOINT_REWARD),
                    None => (self.goal, GOAL_REWARD),
                };
                let terminal: Vec<bool> = (0..n).map(|c| self.captures(c, target)).collect();
                let reward = terminal.iter().map(|&t| if t { value } else { 0.0 }).collect();
                CellRewards { reward, terminal }
            }
            RewardScheme::Corridor => {
                let reward = (0..n).map(|c| self.corridor_reward(c)).collect();
                let terminal = (0..n).map(|c| c == self.goal).collect();
                CellRewards { reward, terminal }
            }
        }
    }

    pub fn info(&self) -> MapInfo {
        MapInfo {
            width: self.width,
            height: self.height,
            safe_cells: self.safe.iter().filter(|s| **s).count(),
            unsafe_cells: self.safe.iter().filter(|s| !**s).count(),
            start: self.coords(self.start),
            goal: self.coords(self.goal),
            waypoints: self.waypoints.iter().map(|&w| self.coords(w)).collect(),
            reward_scheme: self.scheme,
        }
    }
}

/// Reward collected on arrival in a cell. Terminal cells end the lookahead.
#[derive(Debug, Clone, PartialEq)]
pub struct CellRewards {
    pub reward: Vec<f64>,
    pub terminal: Vec<bool>,
}

impl RewardModel for CellRewards {
    fn reward(&self, s: usize, _a: usize, _offset: usize) -> f64 {
        self.reward[s]
    }

    fn is_terminal(&self, s: usize) -> bool {
        self.terminal[s]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapInfo {
    pub width: usize,
    pub height: usize,
    pub safe_cells: usize,
    pub unsafe_cells: usize,
    pub start: (usize, usize),
    pub goal: (usize, usize),
    pub waypoints: Vec<(usize, usize)>,
    pub reward_scheme: RewardScheme,
}

impl fmt::Display for MapInfo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "size: {}x{} ({} cells)", self.width, self.height, self.width * self.height)?;
        writeln!(f, "safe cells: {}", self.safe_cells)?;
        writeln!(f, "unsafe cells: {}", self.unsafe_cells)?;
        writeln!(f, "start: {:?}", self.start)?;
        writeln!(f, "goal: {:?}", self.goal)?;
        writeln!(f, "reward scheme: {:?}", self.reward_scheme)?;
        write!(f, "waypoints ({}):", self.waypoints.len())?;
        for w in &self.waypoints {
            write!(f, " {w:?}")?;
        }
        Ok(())
    }
}

/// Parsed text map: `#` unsafe, `.` safe, `W` waypoint, `G` goal, `S` start.
#[derive(Debug, Clone, PartialEq)]
pub struct GridMap {
    pub width: usize,
    pub height: usize,
    pub safe: Vec<bool>,
    pub start: (usize, usize),
    pub goal: (usize, usize),
    /// Ordered by greedy nearest neighbour from the start.
    pub waypoints: Vec<(usize, usize)>,
}

impl GridMap {
    pub fn parse(text: &str) -> Result<Self, EnvError> {
        let lines: Vec<&str> = text.lines().map(str::trim_end).filter(|l| !l.is_empty()).collect();
        let width = lines.first().ok_or(EnvError::EmptyMap)?.chars().count();
        let mut safe = Vec::with_capacity(width * lines.len());
        let mut starts = Vec::new();
        let mut goals = Vec::new();
        let mut marked = Vec::new();
        for (row, line) in lines.iter().enumerate() {
            let len = line.chars().count();
            if len != width {
                return Err(EnvError::RaggedMap { row, len, expected: width });
            }
            for (col, ch) in line.chars().enumerate() {
                match ch {
                    '#' => safe.push(false),
                    '.' => safe.push(true),
                    'W' => {
                        safe.push(true);
                        marked.push((row, col));
                    }
                    'G' => {
                        safe.push(true);
                        goals.push((row, col));
                    }
                    'S' => {
                        safe.push(true);
                        starts.push((row, col));
                    }
                    _ => return Err(EnvError::UnknownSymbol { ch, row, col }),
                }
            }
        }
        if starts.len() != 1 {
            return Err(EnvError::MarkerCount { symbol: 'S', count: starts.len() });
        }
        if goals.len() != 1 {
            return Err(EnvError::MarkerCount { symbol: 'G', count: goals.len() });
        }
        let start = starts[0];
        let mut waypoints = Vec::with_capacity(marked.len());
        let mut here = start;
        while !marked.is_empty() {
            let d2 = |p: &(usize, usize)| {
                let dr = p.0 as i64 - here.0 as i64;
                let dc = p.1 as i64 - here.1 as i64;
                dr * dr + dc * dc
            };
            // min_by_key keeps the first minimum, i.e. reading order on ties
            let (i, _) = marked.iter().enumerate().min_by_key(|(_, p)| d2(p)).expect("non-empty");
            here = marked.remove(i);
            waypoints.push(here);
        }
        Ok(Self { width, height: lines.len(), safe, start, goal: goals[0], waypoints })
    }

    /// Maps with unsafe cells use the corridor rewards, open maps the
    /// waypoint rewards.
    pub fn reward_scheme(&self) -> RewardScheme {
        if self.safe.iter().any(|s| !s) {
            RewardScheme::Corridor
        } else {
            RewardScheme::Waypoints
        }
    }

    pub fn into_world(self) -> GridWorld {
        let scheme = self.reward_scheme();
        let mut w = GridWorld::open(self.width, self.height, self.start);
        w.safe = self.safe;
        w.set_goal(self.goal).expect("parsed goal is in bounds");
        w.set_waypoints(&self.waypoints).expect("parsed waypoints are in bounds");
        w.with_reward_scheme(scheme)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn world(schedule: TransitionSchedule) -> GridWorld {
        GridWorld::open(9, 9, (4, 4)).with_schedule(schedule, 1.0)
    }

    /// Steps east from the centre, re-centring each time, and returns the
    /// success count.
    fn count_successes(w: &GridWorld, n: usize, seed: u64) -> usize {
        let mut streams = EnvStreams::new(seed);
        let s0 = w.reset(seed);
        let mut s = s0;
        let mut hits = 0;
        for _ in 0..n {
            let out = w.step(&s, 2, &mut streams);
            hits += out.success as usize;
            s = EnvState { cell: s0.cell, ..out.next };
        }
        hits
    }

    #[test]
    fn reset_is_deterministic_at_the_configured_start() {
        let w = GridWorld::builtin_waypoints();
        assert_eq!(w.reset(1), w.reset(1));
        assert_eq!(w.reset(1).cell, w.reset(2).cell);
        assert_eq!(w.reset(99).t, 0);
        assert_eq!(w.reset(99).next_waypoint_index, 0);
    }

    #[test]
    fn certain_and_impossible_success() {
        assert_eq!(count_successes(&world(TransitionSchedule::Constant(1.0)), 500, 3), 500);
        assert_eq!(count_successes(&world(TransitionSchedule::Constant(0.0)), 500, 3), 0);
    }

    #[test]
    fn empirical_success_rate_matches_schedule() {
        let hits = count_successes(&world(TransitionSchedule::Constant(0.7)), 10_000, 11);
        let rate = hits as f64 / 10_000.0;
        assert!((rate - 0.7).abs() <= 0.02, "rate {rate}");
    }

    #[test]
    fn success_flag_matches_intended_cell() {
        let w = world(TransitionSchedule::Constant(0.5));
        let mut streams = EnvStreams::new(5);
        let mut s = w.reset(5);
        for k in 0..200 {
            let out = w.step(&s, k % 8, &mut streams);
            assert_eq!(out.success, out.next.cell == out.intended);
            assert_eq!(out.next.t, s.t + 1);
            s = out.next;
        }
    }

    #[test]
    fn moves_truncate_at_the_boundary() {
        let w = GridWorld::open(3, 3, (0, 0));
        assert_eq!(step_cell(3, 3, 0, 0), 0);
        assert_eq!(step_cell(3, 3, 0, 7), 0);
        assert_eq!(step_cell(3, 3, 0, 1), 1);
        assert_eq!(step_cell(3, 3, 8, 3), 8);
        assert_eq!(w.structure().intended(4, 3).unwrap(), 8);
    }

    #[test]
    fn slips_go_to_lateral_neighbours() {
        let w = GridWorld::open(5, 5, (2, 2));
        // heading E from the centre slips NE or SE
        assert_eq!(w.structure().successor(12, 2, 1).unwrap(), 8);
        assert_eq!(w.structure().successor(12, 2, 2).unwrap(), 18);
    }

    #[test]
    fn noiseless_sensor_reports_true_cell() {
        let w = GridWorld::open(6, 4, (1, 1));
        let mut rng = stream(0, Stream::Observation);
        for cell in 0..w.num_cells() {
            let s = EnvState { cell, t: 0, next_waypoint_index: 0 };
            assert_eq!(w.observe(&s, &mut rng), cell);
        }
    }

    #[test]
    fn noisy_sensor_mode_is_true_cell() {
        let w = GridWorld::open(9, 9, (4, 4)).with_obs_sigma(1.5);
        let mut rng = stream(2, Stream::Observation);
        let s = w.reset(0);
        let mut counts = vec![0usize; w.num_cells()];
        for _ in 0..10_000 {
            counts[w.observe(&s, &mut rng)] += 1;
        }
        let mode = counts.iter().enumerate().max_by_key(|(_, c)| **c).unwrap().0;
        assert_eq!(mode, s.cell);
    }

    #[test]
    fn corner_observations_stay_in_bounds() {
        let w = GridWorld::open(5, 5, (0, 0)).with_obs_sigma(3.0);
        let mut rng = stream(4, Stream::Observation);
        let s = w.reset(0);
        for _ in 0..2000 {
            assert!(w.observe(&s, &mut rng) < 25);
        }
    }

    #[test]
    fn waypoint_rewards_follow_order() {
        let mut w = GridWorld::open(10, 10, (0, 0));
        w.set_waypoints(&[(0, 4), (0, 8)]).unwrap();
        w.set_goal((9, 9)).unwrap();
        let at = |cell, idx| EnvState { cell, t: 0, next_waypoint_index: idx };
        assert_eq!(w.waypoint_reward(&at(5, 0)), (10.0, 1));
        assert_eq!(w.waypoint_reward(&at(8, 0)), (0.0, 0));
        assert_eq!(w.waypoint_reward(&at(99, 0)), (0.0, 0));
        assert_eq!(w.waypoint_reward(&at(99, 2)), (50.0, 2));
        assert_eq!(w.waypoint_reward(&at(50, 2)), (0.0, 2));
    }

    #[test]
    fn corridor_rewards() {
        let w = GridWorld::builtin_corridor();
        let safe = 3 * 30 + 2;
        let wall = 0;
        assert_eq!(w.corridor_reward(safe), -1.0);
        assert_eq!(w.corridor_reward(wall), -10.0);
        assert_eq!(w.corridor_reward(w.goal()), 5.0);
    }

    #[test]
    fn builtins_have_expected_shape() {
        let wp = GridWorld::builtin_waypoints();
        assert_eq!((wp.width(), wp.height(), wp.waypoints().len()), (40, 40, 15));
        assert_eq!(wp.reward_scheme(), RewardScheme::Waypoints);
        let c = GridWorld::builtin_corridor();
        assert_eq!((c.width(), c.height()), (30, 10));
        assert_eq!(c.reward_scheme(), RewardScheme::Corridor);
        assert!(c.is_safe(c.start()) && c.is_safe(c.goal()));
    }

    #[test]
    fn map_parsing_orders_waypoints_from_start() {
        let m = GridMap::parse("S..W\n....\nW..G\n").unwrap();
        assert_eq!(m.width, 4);
        assert_eq!(m.height, 3);
        assert_eq!(m.start, (0, 0));
        assert_eq!(m.goal, (2, 3));
        assert_eq!(m.waypoints, vec![(2, 0), (0, 3)]);
        assert_eq!(m.reward_scheme(), RewardScheme::Waypoints);
    }

    #[test]
    fn map_parsing_errors() {
        assert!(matches!(GridMap::parse(""), Err(EnvError::EmptyMap)));
        assert!(matches!(GridMap::parse("S.\n.G.\n"), Err(EnvError::RaggedMap { row: 1, .. })));
        assert!(matches!(GridMap::parse("S?G\n"), Err(EnvError::UnknownSymbol { ch: '?', .. })));
        assert!(matches!(GridMap::parse("..G\n"), Err(EnvError::MarkerCount { symbol: 'S', count: 0 })));
        assert!(matches!(GridMap::parse("SGG\n"), Err(EnvError::MarkerCount { symbol: 'G', count: 2 })));
    }

    #[test]
    fn planning_rewards_target_next_waypoint() {
        let w = GridWorld::builtin_waypoints();
        let r = w.planning_rewards(0);
        let target = w.waypoints()[0];
        assert!(r.is_terminal(target));
        assert_eq!(r.reward(target, 0, 0), 10.0);
        assert!(!r.is_terminal(w.start()));
        let r = w.planning_rewards(15);
        assert_eq!(r.reward(w.goal(), 0, 0), 50.0);
    }

    proptest! {
        #[test]
        fn trajectories_are_deterministic(seed in any::<u64>(), actions in prop::collection::vec(0usize..8, 1..40)) {
            let w = GridWorld::builtin_corridor()
                .with_schedule(TransitionSchedule::Linear { p0: 1.0, slope: -0.05 }, 0.4)
                .with_obs_sigma(1.5);
            let run = || {
                let mut streams = EnvStreams::new(seed);
                let mut s = w.reset(seed);
                let mut out = Vec::new();
                for &a in &actions {
                    let o = w.step(&s, a, &mut streams);
                    out.push((o.next, o.reward.to_bits(), o.observation, o.success));
                    s = o.next;
                }
                out
            };
            prop_assert_eq!(run(), run());
        }

        #[test]
        fn waypoint_index_never_skips(seed in any::<u64>(), actions in prop::collection::vec(0usize..8, 1..80)) {
            let w = GridWorld::builtin_waypoints().with_schedule(TransitionSchedule::Constant(0.8), 1.0);
            let mut streams = EnvStreams::new(seed);
            let mut s = w.reset(seed);
            for &a in &actions {
                let o = w.step(&s, a, &mut streams);
                prop_assert!(o.next.next_waypoint_index == s.next_waypoint_index
                    || o.next.next_waypoint_index == s.next_waypoint_index + 1);
                prop_assert!(o.next.next_waypoint_index <= w.waypoints().len());
                s = if o.goal_reached { w.respawn(o.next) } else { o.next };
            }
        }
    }
}
