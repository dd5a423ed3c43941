//! Rotation numbers, mode locking and parameter tuning.

use std::sync::Arc;

use rotorlab::cfrac::AlphaHandle;
use rotorlab::circle_map::*;
use rotorlab::rotation_number::*;

fn main() {
    let golden = AlphaHandle::golden();
    let r = build_rotation_handle(&golden);
    let e = estimate(&r, 0.0, 1000).unwrap();
    println!("rotation: {:.12} ± {:.1e}", e.value, e.radius);

    // a flat spot locks every rational over an interval of ω
    let base: Arc<dyn CircleMap> = Arc::new(build_flat_spot(0.0, 0.1, 0.5).unwrap());
    let fam = MonotoneFamily::new(base, Homeo::Rotation, (0.0, 1.0), 0.6).unwrap();
    for (p, q) in [(1, 3), (2, 5), (1, 2), (3, 5), (2, 3)] {
        let lock = solve_parameter_for_rational(&fam, p, q, (0.0, 1.0)).unwrap();
        println!("  ρ = {p}/{q} for ω in [{:.6}, {:.6}]", lock.s_lo, lock.s_hi);
    }

    let tuned = build_flat_spot_with_rotation(&golden, 0.1, 0.5, 5000).unwrap();
    let e = estimate(&tuned, 0.0, 5000).unwrap();
    println!("tuned flat spot: ρ ≈ {:.8} (target {:.8})", e.value, golden.to_f64());
    println!("rational check: {:?}", detect_rational(&tuned, 200));
}
