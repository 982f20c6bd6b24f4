//! Loads a text map and runs a scenario on it.

use tvpomdp::envsim::GridMap;
use tvpomdp::harness::{parse_config, run_episode};

const MAP: &str = "\
################
#S.....#########
#......#.....G.#
#..............#
#########......#
################
";

fn main() {
    let map = GridMap::parse(MAP).unwrap();
    println!("{}\n", map.clone().into_world().info());

    let dir = tempfile_dir();
    let path = dir.join("shortcut.txt");
    std::fs::write(&path, MAP).unwrap();
    let config = format!(
        r#"{{"name": "shortcut", "environment": {{"map": "{}"}},
            "schedule": {{"exponential": {{"p0": 0.95, "rate": 0.04}}}},
            "num_steps": 60, "horizon": 30, "agent": ["mpse", "full_history", "ta_vi"]}}"#,
        path.display()
    );
    let cfg = parse_config(&config, None).unwrap().remove(0);
    for run in run_episode(&cfg, 11).unwrap() {
        let t = &run.totals;
        println!(
            "{:<13} mae {:.4}  reward {:>6.1}  goals {}  unsafe steps {}",
            run.agent.name(),
            t.mae,
            t.cumulative_reward,
            t.goals_reached,
            t.unsafe_steps
        );
    }
}

fn tempfile_dir() -> std::path::PathBuf {
    let dir = std::env::temp_dir().join("tvpomdp-custom-map");
    std::fs::create_dir_all(&dir).unwrap();
    dir
}
