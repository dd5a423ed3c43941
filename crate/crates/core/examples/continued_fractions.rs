//! Expansions, convergents and closest-return times.

use rotorlab::cfrac::{closest_return_times, convergents, determinant, expand_rational, reconstruct, AlphaHandle};

fn main() {
    let cf = expand_rational(355, 113).unwrap();
    println!("355/113 = {cf}");
    let conv = convergents(&cf);
    for c in &conv {
        println!("  p_{} / q_{} = {}/{}", c.n, c.n, c.p, c.q);
    }
    println!("  reconstructed: {}", reconstruct(&cf));
    println!("  det at the last level: {}", determinant(&conv, conv.len() - 1));

    for s in ["golden", "silver", "[0;2,(1,3)]", "0.41421356"] {
        let h: AlphaHandle = s.parse().unwrap();
        let cf = h.expand(10).unwrap();
        println!("{:>12} = {}  q_n: {:?}", s, h.label(), closest_return_times(&cf));
    }

    print!("{}", AlphaHandle::golden().expand(8).unwrap().convergent_table_csv());
}
