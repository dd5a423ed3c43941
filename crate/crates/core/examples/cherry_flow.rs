//! A Cherry flow: singularities, the return map on a loop, black cells.

use rotorlab::cfrac::AlphaHandle;
use rotorlab::circle_map::CircleMap;
use rotorlab::torus_flow::*;

fn main() {
    let cell = CellSpec {
        seed: [0.5, 0.5],
        kind: CellKind::Backward,
        width: 0.05,
        length: 0.1,
    };
    let untuned = build_blowup(&AlphaHandle::golden(), &[cell]).unwrap();
    let lp = default_loop(&untuned);
    let rm = induced_return_map(&untuned, &lp, 256).unwrap();
    let rho = rotorlab::rotation_number::estimate(&rm.map, 0.0, 2000).unwrap();
    println!("slope = golden mean: ρ = {:.6}, {:?}", rho.value, rho.rational_hit.map(|h| (h.p, h.q)));

    // every orbit ends in the sink until the slope is tuned
    let opts = ReturnOptions {
        resolution: 256,
        map_tol: 1e-7,
        ..Default::default()
    };
    let (f, tuned) = tune_blowup(&AlphaHandle::golden(), &[cell], &lp, &opts, 300).unwrap();
    println!("tuned slope {:.10}: ρ between {:?} and {:?}", f.alpha, tuned.lower, tuned.upper);
    for s in &f.singularities {
        println!("{:?} at ({:.4}, {:.4}), divergence {:.2e}", s.kind, s.position[0], s.position[1], s.divergence);
    }

    let rm = induced_return_map_with(&f, &lp, &opts).unwrap();
    println!(
        "return map on x = {}: {} pieces, plateaus {:?}",
        lp.x0,
        rm.map.pieces().len(),
        rm.map.plateaus().iter().map(|p| (p.start, p.length)).collect::<Vec<_>>()
    );
    for b in &rm.basins {
        println!("  basin [{:.5}, {:.5}] of singularity {}", b.from, b.to, b.singularity);
    }

    let rep = classify_cells(&f, 64, 1000.0);
    for c in &rep.cells {
        println!("cell {:?}: area {:.4}", c.kind, c.area);
    }
    println!("co-directed: {}, resolved {:.1}%", rep.co_directed, 100.0 * rep.resolved_fraction);
}
