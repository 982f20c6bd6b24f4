//! Bayes filter over grid cells with a noisy position sensor.

use tvpomdp::belief::{belief_update, Belief, EstimatedTransition};
use tvpomdp::envsim::{EnvStreams, GridWorld};
use tvpomdp::model::{outcome_distribution, TransitionSchedule};

fn main() {
    let world = GridWorld::open(15, 15, (7, 2)).with_schedule(TransitionSchedule::Constant(0.75), 1.0).with_obs_sigma(1.5);
    let theta = outcome_distribution(0.75, world.deviation_weights());
    let t_hat = EstimatedTransition { structure: world.structure(), theta: &theta };
    let mut streams = EnvStreams::new(3);
    let mut state = world.reset(3);
    let mut belief = Belief::point_mass(world.num_cells(), state.cell);

    println!("step  true      observed  map       p(map)  entropy");
    for step in 0..12 {
        let out = world.step(&state, 2, &mut streams);
        belief = belief_update(&belief, 2, out.observation, &t_hat, world.observation_model()).unwrap();
        let map = belief.map_state();
        println!(
            "{step:>4}  {:<8}  {:<8}  {:<8}  {:.3}   {:.3}",
            format!("{:?}", world.coords(out.next.cell)),
            format!("{:?}", world.coords(out.observation)),
            format!("{:?}", world.coords(map)),
            belief.probs()[map],
            belief.entropy()
        );
        state = out.next;
    }
}
