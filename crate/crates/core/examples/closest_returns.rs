//! Orbit scaffold of a rotation: three distances and the multiplicity bound.

use rotorlab::cfrac::AlphaHandle;
use rotorlab::closest_returns::ReturnScaffold;
use rotorlab::exact::QuadNumber;

fn main() {
    let alpha: AlphaHandle = "[0;(1,2)]".parse().unwrap();
    for n in 2..6 {
        let sc = ReturnScaffold::exact(&alpha, QuadNumber::from_ratio(0, 1), n).unwrap();
        let td = sc.three_distance_points().unwrap();
        let lengths: Vec<f64> = td.histogram.iter().map(|(l, _)| *l).collect();
        println!("n = {n}: {} points, gap lengths {:?}", td.points.len(), lengths);

        // every gap arc of the orbit, checked exactly
        let worst = sc
            .gap_arcs()
            .iter()
            .map(|t| sc.im_bound_check(t).unwrap())
            .max_by_key(|r| r.im)
            .unwrap();
        println!("    max multiplicity {} against bound {}", worst.im, worst.bound);
    }
}
