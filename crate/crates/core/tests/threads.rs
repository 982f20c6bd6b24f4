use tvpomdp::harness::{preset, run_benchmark, AgentKind, HarnessError, ScenarioConfig};

// One test per binary owns the environment variable.
#[test]
fn thread_cap_changes_nothing_but_parallelism() {
    let cfg = ScenarioConfig { num_steps: 15, ..preset("hw_constant").unwrap() }
        .with_agents(&[AgentKind::Mpse, AgentKind::DtWindow])
        .with_seeds(0..4);
    std::env::set_var("TVPOMDP_THREADS", "1");
    let serial = run_benchmark(&cfg).unwrap();
    std::env::set_var("TVPOMDP_THREADS", "3");
    let parallel = run_benchmark(&cfg).unwrap();
    assert_eq!(serial, parallel);
    std::env::set_var("TVPOMDP_THREADS", "zero");
    assert!(matches!(run_benchmark(&cfg), Err(HarnessError::Threads(_))));
    std::env::remove_var("TVPOMDP_THREADS");
}
