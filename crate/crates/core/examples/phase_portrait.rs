//! Writes an SVG phase portrait of a flow with one sink cell and one source cell.

use rotorlab::cfrac::AlphaHandle;
use rotorlab::cli::svg::Svg;
use rotorlab::torus_flow::*;

fn main() {
    let cells = [
        CellSpec {
            seed: [0.25, 0.3],
            kind: CellKind::Backward,
            width: 0.05,
            length: 0.1,
        },
        CellSpec {
            seed: [0.75, 0.7],
            kind: CellKind::Forward,
            width: 0.05,
            length: 0.1,
        },
    ];
    let f = build_blowup(&AlphaHandle::golden(), &cells).unwrap();
    let mut svg = Svg::new();
    for i in 0..16 {
        let z = [(i as f64 * 0.618034).fract(), (i as f64 * 0.381966 + 0.05).fract()];
        let seg = integrate(&f, z, 8.0, 1e-8, None);
        let pts: Vec<[f64; 2]> = seg.points.iter().map(|p| [p[1], p[2]]).collect();
        svg.path(&pts, "#1f77b4", 1.0);
    }
    for s in &f.singularities {
        svg.dot(s.position, 5.0, "#000000");
    }
    let out = std::env::temp_dir().join("rotorlab_portrait.svg");
    std::fs::write(&out, svg.finish()).unwrap();
    println!("wrote {}", out.display());
}
