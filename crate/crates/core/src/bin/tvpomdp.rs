use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tvpomdp::envsim::GridMap;
use tvpomdp::estimator::oracle;
use tvpomdp::harness::{
    emit_results, emit_summary, load_config, run_episode, run_suite, AgentAggregate, AgentKind, HarnessError,
    OutputFormat, ScenarioConfig,
};

#[derive(Parser)]
#[command(name = "tvpomdp", version, about = "Time-varying POMDP estimation and planning benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every scenario in a config for one seed and print per-run totals.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: u64,
        /// Override the configured agents.
        #[arg(long)]
        agent: Option<String>,
        /// Print the full run records as JSON instead of a summary.
        #[arg(long)]
        json: bool,
    },
    /// Run every scenario, agent and seed in a config and write result files.
    Bench {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "csv")]
        format: OutputFormat,
    },
    /// Compare the constrained solver against the brute-force grid oracle.
    OracleCheck {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 50)]
        instances: usize,
        #[arg(long, default_value_t = 1e-4)]
        tolerance: f64,
    },
    /// Describe a text map file.
    MapInfo {
        #[arg(long)]
        map: PathBuf,
    },
}

enum Failure {
    Validation(String),
    Runtime(String),
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        if e.is_validation() {
            Failure::Validation(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

fn load(path: &Path, agent: Option<&str>) -> Result<Vec<ScenarioConfig>, Failure> {
    let mut cfgs = load_config(path).map_err(HarnessError::from)?;
    if let Some(name) = agent {
        let a: AgentKind = name.parse().map_err(|e: tvpomdp::harness::ConfigError| Failure::Validation(e.to_string()))?;
        cfgs = cfgs.into_iter().map(|c| c.with_agents(&[a])).collect();
    }
    Ok(cfgs)
}

fn print_aggregates(aggs: &[AgentAggregate]) {
    println!(
        "{:<14} {:<13} {:>4} {:>17} {:>19} {:>15}",
        "scenario", "agent", "runs", "mae", "reward", "waypoints"
    );
    for a in aggs {
        println!(
            "{:<14} {:<13} {:>4} {:>8.5} ± {:<6.4} {:>9.2} ± {:<7.2} {:>6.2} ± {:<5.2}",
            a.scenario,
            a.agent.name(),
            a.runs,
            a.mae.mean,
            a.mae.std,
            a.cumulative_reward.mean,
            a.cumulative_reward.std,
            a.waypoints_followed.mean,
            a.waypoints_followed.std
        );
    }
}

fn execute(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Run { config, seed, agent, json } => {
            let cfgs = load(&config, agent.as_deref())?;
            let mut all = Vec::new();
            for cfg in &cfgs {
                all.extend(run_episode(cfg, seed)?);
            }
            if json {
                println!("{}", serde_json::to_string_pretty(&all).map_err(|e| Failure::Runtime(e.to_string()))?);
            } else {
                for r in &all {
                    let t = &r.totals;
                    println!(
                        "{} {} seed={} steps={} mae={:.5} reward={:.1} waypoints={} goals={} fallbacks={}",
                        r.scenario,
                        r.agent,
                        r.seed,
                        r.steps.len(),
                        t.mae,
                        t.cumulative_reward,
                        t.waypoints_followed,
                        t.goals_reached,
                        t.belief_fallbacks
                    );
                }
            }
        }
        Command::Bench { config, out, format } => {
            let cfgs = load(&config, None)?;
            let report = run_suite(&cfgs)?;
            std::fs::create_dir_all(&out)
                .map_err(|e| Failure::Runtime(format!("cannot create {}: {e}", out.display())))?;
            let runs = out.join(format!("runs.{}", format.extension()));
            let summary = out.join(format!("summary.{}", format.extension()));
            emit_results(&report.runs, format, &runs)?;
            emit_summary(&report.aggregates, format, &summary)?;
            print_aggregates(&report.aggregates);
            println!("wrote {} and {}", runs.display(), summary.display());
        }
        Command::OracleCheck { seed, instances, tolerance } => {
            let checks = oracle::run_suite(seed, instances).map_err(|e| Failure::Runtime(e.to_string()))?;
            let failed: Vec<_> = checks.iter().filter(|c| !c.passes(tolerance)).collect();
            for c in &failed {
                println!(
                    "mismatch: K={} delta={} counts={:?} solver_ll={} oracle_ll={}",
                    c.counts.len(),
                    c.delta_max,
                    c.counts,
                    c.solver_ll,
                    c.oracle_ll
                );
            }
            println!("{}/{} instances within {tolerance:e} of the oracle", checks.len() - failed.len(), checks.len());
            if !failed.is_empty() {
                return Err(Failure::Runtime("solver fell below the oracle".into()));
            }
        }
        Command::MapInfo { map } => {
            let text = std::fs::read_to_string(&map)
                .map_err(|e| Failure::Validation(format!("cannot read {}: {e}", map.display())))?;
            let parsed = GridMap::parse(&text).map_err(|e| Failure::Validation(format!("{}: {e}", map.display())))?;
            println!("{}", parsed.into_world().info());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
