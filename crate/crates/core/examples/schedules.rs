//! Ground-truth schedules and the slip model they drive.

use tvpomdp::envsim::{GridWorld, HEADING_NAMES};
use tvpomdp::model::{Segment, TransitionSchedule};

fn main() {
    let schedules = [
        ("constant", TransitionSchedule::Constant(0.7)),
        ("linear", TransitionSchedule::Linear { p0: 1.0, slope: -0.05 }),
        ("exponential", TransitionSchedule::Exponential { p0: 0.9, rate: 0.05 }),
        ("switch", TransitionSchedule::SigmoidGaussianSwitch { switch_time: 10.0 }),
        (
            "piecewise",
            TransitionSchedule::Piecewise(vec![
                Segment { start: 0.0, end: 5.0, schedule: Box::new(TransitionSchedule::Constant(0.9)) },
                Segment { start: 5.0, end: 15.0, schedule: Box::new(TransitionSchedule::Constant(0.4)) },
            ]),
        ),
    ];

    print!("{:>6}", "t");
    for (name, _) in &schedules {
        print!("{name:>13}");
    }
    println!();
    for step in 0..=10 {
        let t = step as f64 * 2.0;
        print!("{t:>6.1}");
        for (_, s) in &schedules {
            print!("{:>13.4}", s.eval(t));
        }
        println!();
    }

    let world = GridWorld::open(5, 5, (2, 2));
    let st = world.transition_structure(0.7);
    println!("\nrows from the centre cell (2, 2) with p = 0.7:");
    for (a, name) in HEADING_NAMES.iter().enumerate() {
        let row: Vec<String> = st
            .transition_row(12, a)
            .unwrap()
            .iter()
            .map(|(c, p)| format!("{:?}:{p:.2}", world.coords(*c)))
            .collect();
        println!("  {name:<2} {}", row.join("  "));
    }
    let corner: Vec<_> = st.transition_row(0, 0).unwrap();
    println!("heading N from the corner (0, 0) truncates to {corner:?}");
}
