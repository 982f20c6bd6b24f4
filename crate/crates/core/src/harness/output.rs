//! CSV and JSON result files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::runner::{AgentAggregate, RunResult};
use super::HarnessError;

pub const CSV_COLUMNS: [&str; 11] =
    ["scenario", "agent", "seed", "step", "t", "p_true", "p_hat", "action", "reward", "cum_reward", "mae_step"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            _ => Err(format!("unknown format {s:?} (expected csv or json)")),
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, HarnessError> {
    let file = File::create(path).map_err(|source| HarnessError::Write { path: path.to_path_buf(), source })?;
    Ok(BufWriter::new(file))
}

fn finish(mut w: BufWriter<File>, path: &Path) -> Result<(), HarnessError> {
    w.flush().map_err(|source| HarnessError::Write { path: path.to_path_buf(), source })
}

/// Writes the per-step CSV table to any writer.
pub fn write_csv<W: Write>(results: &[RunResult], out: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for r in results {
        for s in &r.steps {
            w.write_record([
                r.scenario.clone(),
                r.agent.to_string(),
                r.seed.to_string(),
                s.step.to_string(),
                s.t.to_string(),
                s.p_true.to_string(),
                s.p_hat.to_string(),
                s.action.to_string(),
                s.reward.to_string(),
                s.cum_reward.to_string(),
                s.mae_step.to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| HarnessError::Csv(e.into()))?;
    Ok(())
}

/// Per-step results: one CSV row per step, or the full JSON run records.
pub fn emit_results(results: &[RunResult], format: OutputFormat, path: &Path) -> Result<(), HarnessError> {
    if results.is_empty() {
        return Err(HarnessError::Runtime("no results to write".into()));
    }
    let mut w = create(path)?;
    match format {
        OutputFormat::Csv => write_csv(results, &mut w)?,
        OutputFormat::Json => {
            serde_json::to_writer_pretty(&mut w, results)?;
            writeln!(w).map_err(|source| HarnessError::Write { path: path.to_path_buf(), source })?;
        }
    }
    finish(w, path)
}

/// Aggregated metrics per scenario and agent.
pub fn emit_summary(aggregates: &[AgentAggregate], format: OutputFormat, path: &Path) -> Result<(), HarnessError> {
    let mut w = create(path)?;
    match format {
        OutputFormat::Csv => {
            let mut c = csv::Writer::from_writer(&mut w);
            c.write_record([
                "scenario",
                "agent",
                "runs",
                "mae_mean",
                "mae_std",
                "reward_mean",
                "reward_std",
                "waypoints_mean",
                "waypoints_std",
                "goals_mean",
                "goals_std",
                "belief_fallbacks",
            ])?;
            for a in aggregates {
                c.write_record([
                    a.scenario.clone(),
                    a.agent.to_string(),
                    a.runs.to_string(),
                    a.mae.mean.to_string(),
                    a.mae.std.to_string(),
                    a.cumulative_reward.mean.to_string(),
                    a.cumulative_reward.std.to_string(),
                    a.waypoints_followed.mean.to_string(),
                    a.waypoints_followed.std.to_string(),
                    a.goals_reached.mean.to_string(),
                    a.goals_reached.std.to_string(),
                    a.belief_fallbacks.to_string(),
                ])?;
            }
            c.flush().map_err(|e| HarnessError::Csv(e.into()))?;
        }
        OutputFormat::Json => {
            serde_json::to_writer_pretty(&mut w, aggregates)?;
            writeln!(w).map_err(|source| HarnessError::Write { path: path.to_path_buf(), source })?;
        }
    }
    finish(w, path)
}

/// Inverse of the JSON form of [`emit_results`].
pub fn read_json_results(path: &Path) -> Result<Vec<RunResult>, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Runtime(format!("{}: {e}", path.display())))?;
    Ok(serde_json::from_str(&text)?)
}
