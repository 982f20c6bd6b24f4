//! Rate-constrained maximum likelihood and its brute-force check.

use tvpomdp::estimator::oracle::{brute_force_oracle, default_resolution, run_suite};
use tvpomdp::estimator::{constrained_mle, log_likelihood, scalar_success_mle, unconstrained_mle, WeightedCounts};

fn main() {
    let counts = WeightedCounts(vec![6.0, 3.0, 1.0]);
    let prev = [0.4, 0.4, 0.2];
    println!("unconstrained: {:?}", unconstrained_mle(&counts).unwrap());
    for delta in [0.01, 0.05, 0.1, 0.5] {
        let theta = constrained_mle(&counts, &prev, delta).unwrap();
        let oracle = brute_force_oracle(&counts, &prev, delta, default_resolution(3)).unwrap();
        println!(
            "delta {delta:<4}: solver {:?} ll {:.6} | grid oracle ll {:.6}",
            theta.iter().map(|x| (x * 1e4).round() / 1e4).collect::<Vec<_>>(),
            log_likelihood(&counts, &theta),
            log_likelihood(&counts, &oracle)
        );
    }

    let samples = [(true, 1.0), (true, 0.5), (false, 2.0)];
    println!("\nscalar success estimate from p_prev 0.5:");
    for delta in [0.05, 1.0] {
        println!("  delta {delta}: {:.4}", scalar_success_mle(samples, 0.5, delta).unwrap());
    }

    let checks = run_suite(7, 50).unwrap();
    let worst = checks.iter().map(|c| c.oracle_ll - c.solver_ll).fold(f64::NEG_INFINITY, f64::max);
    println!("\n{} random instances, worst oracle advantage {worst:.2e}", checks.len());
}
