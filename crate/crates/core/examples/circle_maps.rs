//! The circle-map builders and what they produce.

use rotorlab::cfrac::AlphaHandle;
use rotorlab::circle_map::*;

fn describe(name: &str, m: &PiecewiseMonotoneCircleMap) {
    let v = variation_log_derivative(m).unwrap();
    // truncated gap orbits leave one tiny plateau or jump at the far end
    let plateau = m.plateaus().iter().map(|p| p.length).fold(0.0, f64::max);
    let jump = m.jumps().iter().map(|j| j.right - j.left).fold(0.0, f64::max);
    println!(
        "{name:>14}: {:5} pieces, largest plateau {plateau:.2e}, largest jump {jump:.2e}, V = {:.4}",
        m.pieces().len(),
        v.v
    );
}

fn main() {
    let golden = AlphaHandle::golden();
    let flat = build_flat_spot(0.3, 0.1, 0.5).unwrap();
    let denjoy = build_denjoy(&golden, GapWeights::inverse_square(0.4), 0.0, None).unwrap();
    let cherry = build_cherry_return(&golden, &[OrbitGapSpec { seed: 0.2, mass: 0.3 }], None).unwrap();
    let jump = build_jump_return(&golden, &[OrbitGapSpec { seed: 0.2, mass: 0.3 }], None).unwrap();

    describe("flat spot", &flat);
    describe("denjoy", &denjoy);
    describe("cherry return", &cherry);
    describe("jump return", &jump);
    // plateaus and jumps trade places under inversion
    describe("inverse cherry", &cherry.inverse().unwrap());

    let p = cherry.plateaus()[0];
    println!("plateau [{:.6}, {:.6}] maps to {:.6}", p.start, p.end(), cherry.eval(p.start));
    println!("table: {}", &serde_json::to_string(&flat).unwrap()[..120]);
}
