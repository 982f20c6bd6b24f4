//! One seeded run of the waypoint course under a decaying slip schedule.

use tvpomdp::harness::{preset, run_agent, AgentKind};

fn main() {
    let cfg = preset("scenario2").unwrap();
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    for agent in [AgentKind::Mpse, AgentKind::DtWindow] {
        let run = run_agent(&cfg, agent, seed).unwrap();
        println!("== {agent} (seed {seed})");
        println!("step     t  p_true  p_hat  reward");
        for s in run.steps.iter().step_by(5) {
            println!("{:>4} {:>5.1}  {:.3}   {:.3}  {:>6.1}", s.step, s.t, s.p_true, s.p_hat, s.cum_reward);
        }
        let t = &run.totals;
        println!("mae {:.4}, waypoints {}, reward {}\n", t.mae, t.waypoints_followed, t.cumulative_reward);
    }
}
