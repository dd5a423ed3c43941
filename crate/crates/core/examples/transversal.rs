//! Transverse loops: straight for a linear flow, bent around a cell otherwise.

use rotorlab::cfrac::AlphaHandle;
use rotorlab::torus_flow::*;

fn main() {
    let f = TorusVectorField::linear(AlphaHandle::golden().to_f64());
    let lp = construct_transversal(&f, [0.3, 0.7], 0.05).unwrap();
    println!("linear flow: x = {} (straight: {})", lp.x0, lp.is_straight());

    let cell = CellSpec {
        seed: [0.5, 0.5],
        kind: CellKind::Backward,
        width: 0.05,
        length: 0.1,
    };
    let opts = ReturnOptions {
        resolution: 256,
        map_tol: 1e-7,
        ..Default::default()
    };
    let lp0 = TransverseLoop::vertical(0.0);
    let (f, _) = tune_blowup(&AlphaHandle::golden(), &[cell], &lp0, &opts, 300).unwrap();
    // almost every point falls into the cell; the plateau value does not.
    // follow its orbit to a point on the vertical through the cell
    let rm = induced_return_map_with(&f, &lp0, &opts).unwrap();
    let mut y = rm.basins[0].value;
    let p = loop {
        let yc = (y + f.alpha * 0.5).rem_euclid(1.0);
        if (yc - 0.5).abs() > 0.4 {
            break [0.5, yc];
        }
        y = rotorlab::circle_map::CircleMap::lift(&rm.map, y);
    };
    let lp = construct_transversal(&f, p, 0.02).unwrap();
    println!("through ({:.4}, {:.4}):", p[0], p[1]);
    println!(
        "cherry flow: straight {}, largest deflection {:.4}, margin {:.4}",
        lp.is_straight(),
        lp.max_deflection(),
        lp.transversality_margin(&f, 4096)
    );
    match construct_transversal(&f, [0.49, 0.49], 0.02) {
        Ok(_) => println!("loop through the cell?"),
        Err(e) => println!("next to the sink: {e}"),
    }
}
