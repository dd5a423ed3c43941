//! Closing the recurrent orbit of a Cherry flow through the plateau value.
//!
//! Tuning the slope and sampling the return maps takes about a minute in
//! release mode.

use rotorlab::cfrac::AlphaHandle;
use rotorlab::torus_flow::*;
use rotorlab::twist_closing::*;

fn main() {
    let cells = [CellSpec {
        seed: [0.5, 0.5],
        kind: CellKind::Backward,
        width: 0.01,
        length: 0.03,
    }];
    let lp = TransverseLoop::vertical(0.0);
    let (f, tuned) = tune_blowup(&AlphaHandle::golden(), &cells, &lp, &ReturnOptions::default(), 1_000_000).unwrap();
    println!("slope {} between {:?} and {:?}", f.alpha, tuned.lower, tuned.upper);

    let fam = build_twist_family(&f, &lp, 0.15, Profile::Poly, 0.5).unwrap();
    let ind = induced_family(&fam, 1024).unwrap();
    let p = ind.f0.basins[0].value.rem_euclid(1.0);
    let res = closing_search(&fam, &ind, p, 4).unwrap();
    println!("p = {p:.10}");
    for e in &res.entries {
        println!(
            "{:>3}/{:<3} a = {:.4e}  |x - p| = {:.2e}  residual {:.1e}  jet distance {:.4e}",
            e.p_n, e.q_n, e.a_n, e.distance_to_p, e.closure_residual, e.approx_cr_distance
        );
    }
    for s in &res.skipped {
        println!("skipped {}/{}: {}", s.p, s.q, s.reason);
    }
}
