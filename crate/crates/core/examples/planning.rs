//! Value iteration on a projected model and belief-weighted action choice.

use tvpomdp::belief::Belief;
use tvpomdp::envsim::{GridWorld, HEADING_NAMES};
use tvpomdp::estimator::TransitionEstimate;
use tvpomdp::planner::{
    action_values, project_transition_forward, select_action, time_varying_value_iteration, ProjectionMode,
};

fn main() {
    let world = GridWorld::builtin_corridor();
    let structure = world.structure();
    let rewards = world.planning_rewards(0);
    let est = TransitionEstimate { t: 10, p_hat: 0.7, rows: None, prev_p_hat: Some(0.72), prev_rows: None };

    for mode in [ProjectionMode::Hold, ProjectionMode::LinearExtrapolate] {
        let proj = project_transition_forward(&est, world.deviation_weights(), 0.02, mode, 40);
        let vt = time_varying_value_iteration(structure, &proj, &rewards, 0.95);
        let start = world.start();
        let sharp = Belief::point_mass(world.num_cells(), start);
        let a = select_action(&sharp, &vt, structure, &proj, &rewards, 0.95);
        let p = proj.success_probs();
        println!("{mode:?}: p over horizon {:.3} .. {:.3}, V_0(start) = {:.2}, action {}", p[0], p[39], vt.value(0, start), HEADING_NAMES[a]);

        // half the mass one cell south of the start
        let mut probs = vec![0.0; world.num_cells()];
        probs[start] = 0.5;
        probs[start + world.width()] = 0.5;
        let spread = Belief::new(probs).unwrap();
        let q = action_values(&spread, &vt, structure, &proj, &rewards, 0.95);
        let a = select_action(&spread, &vt, structure, &proj, &rewards, 0.95);
        let q: Vec<String> = q.iter().zip(HEADING_NAMES).map(|(v, n)| format!("{n}:{v:.1}")).collect();
        println!("  split belief -> {} [{}]", HEADING_NAMES[a], q.join(" "));
    }
}
