//! Time-varying POMDPs with prioritized-memory transition estimation.
//!
//! The crate is organized bottom-up:
//!
//! - [`model`]: the problem tuple, ground-truth transition schedules and the
//!   structured (intended successor + deviation kernel) transition model.
//! - [`memory`]: a bounded window of transition records and the
//!   autocorrelation / recency / deviation priority weights.
//! - [`estimator`]: weighted maximum likelihood under a per-step
//!   rate-of-change box, solved by water-filling, plus a grid-search oracle.
//! - [`belief`]: exact Bayesian belief tracking against the estimated model.
//! - [`planner`]: time-indexed value iteration and belief-weighted action
//!   selection over a projected transition model.
//! - [`envsim`]: grid-world environments for waypoint following and
//!   corridor navigation with schedule-driven slip.
//! - [`baselines`]: comparison estimators and the time-augmented planner.
//! - [`harness`]: scenario configuration, seeded episodes, benchmarks and
//!   result emission.
//!
//! See the `examples/` directory of this crate for one runnable program per
//! capability.

pub mod baselines;
pub mod belief;
pub mod envsim;
pub mod estimator;
pub mod harness;
pub mod memory;
pub mod model;
pub mod planner;
pub mod rng;

pub use belief::{Belief, ObservationModel};
pub use estimator::{TransitionEstimate, WeightedCounts};
pub use memory::{MemoryRecord, MemoryWindow, PriorityConfig};
pub use model::{StructuredTransition, TransitionSchedule, TvPomdpSpec};
