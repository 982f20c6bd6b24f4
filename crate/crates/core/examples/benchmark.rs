//! The three-scenario benchmark with a configurable seed count; writes CSV.
//!
//! `cargo run --release --example benchmark -- 10 /tmp/bench`

use std::path::PathBuf;
use std::time::Instant;

use tvpomdp::harness::{bench_suite, emit_results, emit_summary, run_suite, OutputFormat};

fn main() {
    let mut args = std::env::args().skip(1);
    let seeds: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(10);
    let out = args.next().map(PathBuf::from);
    let suite: Vec<_> = bench_suite().into_iter().map(|c| c.with_seeds(0..seeds)).collect();

    let start = Instant::now();
    let report = run_suite(&suite).unwrap();
    println!("{} runs in {:.1} s", report.runs.len(), start.elapsed().as_secs_f64());
    for a in &report.aggregates {
        println!(
            "{:<10} {:<13} mae {:.4} ± {:.4}  reward {:>7.1} ± {:<5.1}  waypoints {:>5.2}",
            a.scenario, a.agent.name(), a.mae.mean, a.mae.std, a.cumulative_reward.mean, a.cumulative_reward.std,
            a.waypoints_followed.mean
        );
    }
    if let Some(dir) = out {
        std::fs::create_dir_all(&dir).unwrap();
        emit_results(&report.runs, OutputFormat::Csv, &dir.join("runs.csv")).unwrap();
        emit_summary(&report.aggregates, OutputFormat::Csv, &dir.join("summary.csv")).unwrap();
        println!("wrote {}", dir.display());
    }
}
