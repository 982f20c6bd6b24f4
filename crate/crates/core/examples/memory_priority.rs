//! Priority weights over a window of slip observations.

use tvpomdp::memory::{
    autocorrelation, autocorrelation_score, deviation_score, recency_score, weigh_all, MemoryRecord, MemoryWindow,
    PriorityConfig,
};

fn main() {
    let outcomes = [true, true, false, true, true, true, false, false, true, false, false, false];
    let mut window = MemoryWindow::new(10);
    for (t, &success) in outcomes.iter().enumerate() {
        let record = MemoryRecord {
            t: t as u64,
            state: 0,
            action: 0,
            successor: 0,
            success,
            outcome: usize::from(!success),
            observation: 0,
        };
        window.push(record).unwrap();
    }
    let now = outcomes.len() as u64;
    let series = window.indicator_series();
    println!("window holds {} of {} records, mean {:.2}", window.len(), outcomes.len(), window.mean_indicator().unwrap());
    for lag in 1..4 {
        println!("autocorrelation at lag {lag}: {:+.4}", autocorrelation(&series, lag).unwrap());
    }

    let cfg = PriorityConfig::default();
    let weights = weigh_all(&window, now, &cfg).unwrap();
    println!("\n  t  success      A       R       D   weight");
    for (r, w) in &weights {
        println!(
            "{:>3}  {:<7} {:+.3}  {:.3}  {:.3}  {:.4}",
            r.t,
            r.success,
            autocorrelation_score(&window, r, now),
            recency_score(r, now, cfg.epsilon),
            deviation_score(r, &window),
            w
        );
    }
}
