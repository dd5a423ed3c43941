//! A Denjoy counterexample: a wandering gap, the semiconjugacy, distortion.

use rotorlab::cfrac::AlphaHandle;
use rotorlab::circle_map::{build_denjoy, GapWeights};
use rotorlab::wandering::*;

fn main() {
    let m = build_denjoy(&AlphaHandle::golden(), GapWeights::inverse_square(0.5), 0.0, None).unwrap();
    let gap = m.gap_measure().unwrap().gap(0, 0).unwrap();
    println!("gap 0: [{:.6}, {:.6}]", gap.start, gap.end());

    let rep = scan_wandering(&m, &gap, Direction::TwoSided, 1000).unwrap();
    println!(
        "wandering both ways for {} steps: {} (smallest iterate {:.2e})",
        rep.disjoint_up_to, rep.wandering, rep.min_length_seen
    );

    let h = compute_semiconjugacy(&m, 1e-9).unwrap();
    let s = h.summary(3);
    println!("semiconjugacy residual {:.2e}, {} collapsed gaps", s.residual, s.collapsed_count);

    let d = distortion_check(&m, &gap, 100, 1000, 7).unwrap();
    println!(
        "log distortion of f^100 on the gap: {:.4} ≤ {:.4}: {}",
        d.observed_max_log_ratio, d.log_beta, d.passed
    );
}
