//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::time::{Duration, Instant};

use tvpomdp::envsim::GridWorld;
use tvpomdp::estimator::oracle;
use tvpomdp::harness::{bench_suite, preset, run_suite, AgentKind, BenchmarkReport, RunResult, ScenarioConfig};
use tvpomdp::model::{StructuredTransition, TransitionSchedule};
use tvpomdp::planner::{time_varying_value_iteration, value_iteration_policy, RewardModel, TransitionProjection};

struct Outcome {
    pass: bool,
    detail: String,
}

fn report(id: usize, name: &str, o: &Outcome) {
    println!("{} [{id}] {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let checks = oracle::run_suite(2024, 50).expect("oracle instances are valid");
    let elapsed = start.elapsed();
    let ok = checks.iter().filter(|c| c.passes(1e-4)).count();
    let worst = checks.iter().map(|c| c.oracle_ll - c.solver_ll).fold(f64::NEG_INFINITY, f64::max);
    Outcome {
        pass: ok == checks.len() && checks.len() == 50 && elapsed < Duration::from_secs(30),
        detail: format!(
            "{ok}/{} instances with solver >= oracle - 1e-4 (worst gap {worst:.2e}), {:.2} s (limit 30 s)",
            checks.len(),
            elapsed.as_secs_f64()
        ),
    }
}

fn stationary_consistency() -> Outcome {
    let cfg = ScenarioConfig {
        name: "stationary".into(),
        schedule: TransitionSchedule::Constant(0.7),
        window_size: 50,
        num_steps: 500,
        // recency only with an infinite offset: every record weighs the same
        w_a: 0.0,
        w_r: 1.0,
        w_d: 0.0,
        epsilon: 1e300,
        seeds: (0..20).collect(),
        ..preset("scenario1").unwrap()
    }
    .with_agents(&[AgentKind::Mpse]);
    let report = run_suite(&[cfg]).expect("stationary runs");
    let finals: Vec<f64> = report.runs.iter().map(|r| r.steps.last().unwrap().p_hat).collect();
    let ok = finals.iter().filter(|p| (*p - 0.7).abs() <= 0.05).count();
    let worst = finals.iter().map(|p| (p - 0.7).abs()).fold(0.0, f64::max);
    Outcome {
        pass: ok >= 18,
        detail: format!("{ok}/20 seeds with |p_final - 0.7| <= 0.05 (need 18, worst {worst:.4})"),
    }
}

fn paired<'a>(report: &'a BenchmarkReport, scenario: &'a str, a: AgentKind, b: AgentKind) -> Vec<(&'a RunResult, &'a RunResult)> {
    report
        .runs_of(scenario, a)
        .map(|ra| {
            let rb = report.runs_of(scenario, b).find(|rb| rb.seed == ra.seed).expect("paired seed");
            (ra, rb)
        })
        .collect()
}

fn table_one(report: &BenchmarkReport) -> Outcome {
    let m = report.aggregate("scenario2", AgentKind::Mpse).unwrap();
    let w = report.aggregate("scenario2", AgentKind::DtWindow).unwrap();
    let pass = m.mae.mean < w.mae.mean && m.waypoints_followed.mean >= w.waypoints_followed.mean;
    Outcome {
        pass,
        detail: format!(
            "MAE mpse {:.5} vs dt_window {:.5}; waypoints mpse {:.2} vs dt_window {:.2} ({} seeds)",
            m.mae.mean, w.mae.mean, m.waypoints_followed.mean, w.waypoints_followed.mean, m.runs
        ),
    }
}

fn shorter(a: Option<usize>, b: Option<usize>) -> bool {
    match (a, b) {
        (Some(a), Some(b)) => a < b,
        (Some(_), None) => true,
        (None, _) => false,
    }
}

fn table_two(report: &BenchmarkReport) -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    for scenario in ["hw_exp", "hw_switch"] {
        let pairs = paired(report, scenario, AgentKind::Mpse, AgentKind::FullHistory);
        let wins = pairs.iter().filter(|(m, f)| m.totals.mae < f.totals.mae).count();
        pass &= pairs.len() == 50 && wins * 10 >= pairs.len() * 8;
        parts.push(format!("{scenario} MAE wins {wins}/{}", pairs.len()));
    }
    let pairs = paired(report, "hw_switch", AgentKind::Mpse, AgentKind::FullHistory);
    let wins = pairs.iter().filter(|(m, f)| shorter(m.totals.recovery_steps, f.totals.recovery_steps)).count();
    pass &= wins * 10 >= pairs.len() * 8;
    parts.push(format!("hw_switch recovery wins {wins}/{} (need 80%)", pairs.len()));
    Outcome { pass, detail: parts.join("; ") }
}

fn clipping(report: &BenchmarkReport, delta_of: impl Fn(&str) -> f64) -> Outcome {
    let bad = report.runs.iter().filter(|r| r.totals.max_estimate_step > delta_of(&r.scenario) + 1e-12).count();
    let worst = report
        .runs
        .iter()
        .map(|r| r.totals.max_estimate_step - delta_of(&r.scenario))
        .fold(f64::NEG_INFINITY, f64::max);
    Outcome {
        pass: bad == 0,
        detail: format!("{bad}/{} runs exceed the rate bound (max step minus bound {worst:.2e})", report.runs.len()),
    }
}

fn belief_validity(report: &BenchmarkReport) -> Outcome {
    let sum_err = report.runs.iter().map(|r| r.totals.max_belief_sum_error).fold(0.0, f64::max);
    let min_entry = report.runs.iter().map(|r| r.totals.min_belief_entry).fold(f64::INFINITY, f64::min);
    let fallbacks: usize = report.runs.iter().map(|r| r.totals.belief_fallbacks).sum();
    Outcome {
        pass: sum_err <= 1e-9 && min_entry >= 0.0,
        detail: format!("max |sum - 1| {sum_err:.2e}, min entry {min_entry:.2e}, {fallbacks} impossible-observation fallbacks"),
    }
}

/// Plain infinite-horizon value iteration on dense rows.
fn classic_vi(st: &StructuredTransition, r: &dyn Fn(usize, usize) -> f64, gamma: f64) -> Vec<usize> {
    let n = st.num_states();
    let rows: Vec<Vec<Vec<f64>>> =
        (0..n).map(|s| (0..st.num_actions()).map(|a| st.dense_row(s, a).unwrap()).collect()).collect();
    let q = |v: &[f64], s: usize, a: usize| r(s, a) + gamma * rows[s][a].iter().zip(v).map(|(p, x)| p * x).sum::<f64>();
    let mut v = vec![0.0; n];
    loop {
        let next: Vec<f64> =
            (0..n).map(|s| (0..st.num_actions()).map(|a| q(&v, s, a)).fold(f64::NEG_INFINITY, f64::max)).collect();
        let diff = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        v = next;
        if diff < 1e-13 {
            break;
        }
    }
    (0..n)
        .map(|s| (0..st.num_actions()).fold(0, |best, a| if q(&v, s, a) > q(&v, s, best) { a } else { best }))
        .collect()
}

struct GridReward {
    goal: usize,
    pits: [usize; 3],
}

impl RewardModel for GridReward {
    fn reward(&self, s: usize, a: usize, _offset: usize) -> f64 {
        let base = if s == self.goal {
            10.0
        } else if self.pits.contains(&s) {
            -5.0
        } else {
            -1.0
        };
        base - 0.01 * a as f64
    }
}

fn planner_sanity() -> Outcome {
    let st = GridWorld::open(5, 5, (0, 0)).transition_structure(0.8);
    let rewards = GridReward { goal: 24, pits: [7, 12, 17] };
    let gamma = 0.9;
    let proj = TransitionProjection::stationary(st.outcome_distribution(), 400);
    let (_, policy) = value_iteration_policy(&st, &proj, &rewards, gamma);
    let oracle = classic_vi(&st, &|s, a| rewards.reward(s, a, 0), gamma);
    let mismatches = (0..25).filter(|&s| policy[s] != oracle[s]).count();

    let single = StructuredTransition::new(1, 1, vec![vec![0]], 1.0, vec![]).unwrap();
    let vt = time_varying_value_iteration(&single, &TransitionProjection::stationary(vec![1.0], 50), &|_, _, _| 1.0, 0.9);
    let closed = (1.0 - 0.9f64.powi(50)) / (1.0 - 0.9);
    let err = (vt.value(0, 0) - closed).abs();
    Outcome {
        pass: mismatches == 0 && err <= 1e-9,
        detail: format!("5x5 policy mismatches {mismatches}/25; absorbing value error {err:.2e} (limit 1e-9)"),
    }
}

fn main() {
    let mut all = Vec::new();
    let mut record = |id: usize, name: &str, o: Outcome| {
        report(id, name, &o);
        all.push(o.pass);
    };

    record(1, "oracle equivalence", oracle_equivalence());
    record(2, "stationary consistency", stationary_consistency());

    let suite = bench_suite();
    let start = Instant::now();
    let report = run_suite(&suite).expect("benchmark suite runs");
    let elapsed = start.elapsed();
    let delta_of = |name: &str| suite.iter().find(|c| c.name == name).unwrap().delta_max;

    record(3, "waypoint scenario ordering", table_one(&report));
    record(4, "slip-schedule ordering", table_two(&report));
    record(5, "rate-bound clipping", clipping(&report, delta_of));
    record(6, "belief validity", belief_validity(&report));
    record(7, "planner sanity", planner_sanity());
    record(
        8,
        "benchmark runtime",
        Outcome {
            pass: elapsed < Duration::from_secs(300) && report.runs.len() == 600,
            detail: format!("{} runs in {:.1} s (limit 300 s)", report.runs.len(), elapsed.as_secs_f64()),
        },
    );

    let failed = all.iter().filter(|p| !**p).count();
    println!("{} of {} criteria passed", all.len() - failed, all.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
