//! Plateaus kill forward wandering, jumps kill backward wandering.

use rotorlab::cfrac::AlphaHandle;
use rotorlab::circle_map::*;
use rotorlab::wandering::{default_candidate, theorem_a_experiment};

fn main() {
    let golden = AlphaHandle::golden();
    let gap = [OrbitGapSpec { seed: 0.1, mass: 0.25 }];
    let maps = [
        ("cherry return", build_cherry_return(&golden, &gap, None).unwrap()),
        ("jump return", build_jump_return(&golden, &gap, None).unwrap()),
        ("tuned flat spot", rotorlab::rotation_number::build_flat_spot_with_rotation(&golden, 0.05, 0.3, 5000).unwrap()),
    ];
    for (name, m) in &maps {
        let c = default_candidate(m).unwrap();
        let r = theorem_a_experiment(m, &c, &c, 1000).unwrap();
        println!(
            "{name:>16}: forward wanders {}, backward wanders {}, first failure {}",
            r.forward.wandering, r.backward.wandering, r.first_failure
        );
    }
}
