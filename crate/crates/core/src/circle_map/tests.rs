use super::*;
use crate::cfrac::{AlphaHandle, QuadraticIrrational};

fn golden() -> AlphaHandle {
    AlphaHandle::golden()
}

#[test]
fn rotation_basics() {
    let r = build_rotation(0.3);
    assert!((r.eval(0.8) - 0.1).abs() < 1e-15);
    assert_eq!(r.derivative(0.42), 1.0);
    assert!(r.plateaus().is_empty() && r.jumps().is_empty());
    assert_eq!(variation_log_derivative(&r).unwrap().v, 0.0);
}

#[test]
fn plateau_has_zero_derivative() {
    let m = build_piecewise_affine(&[(0.0, 0.2), (0.3, 0.2), (0.6, 0.5)]).unwrap();
    assert_eq!(m.derivative(0.1), 0.0);
    assert!(m.derivative(0.4) > 0.0);
    assert_eq!(m.plateaus().len(), 1);
    let (lo, hi) = m.preimage(0.2);
    assert!((lo - 0.0).abs() < 1e-15 && (hi - 0.3).abs() < 1e-15);
}

#[test]
fn up_down_slopes_variation() {
    // slope 2 on [0, 1/3], slope 1/2 on [1/3, 1]
    let m = build_piecewise_affine(&[(0.0, 0.0), (1.0 / 3.0, 2.0 / 3.0)]).unwrap();
    let v = variation_log_derivative(&m).unwrap();
    assert!((v.v - 4.0 * 2f64.ln()).abs() < 1e-12, "{}", v.v);
    assert!(v.finite);
}

#[test]
fn variation_invariant_under_rotation_conjugacy() {
    let m = build_flat_spot(0.37, 0.05, 0.6).unwrap();
    let v0 = variation_log_derivative(&m).unwrap().v;
    let v1 = variation_log_derivative(&m.conjugate_by_rotation(0.123)).unwrap().v;
    assert!((v0 - v1).abs() < 1e-8);
    // the sine branch swings log Df between log(1 + b) and log(1 − b)
    assert!((v0 - 2.0 * (1.6f64 / 0.4).ln()).abs() < 1e-12);
}

#[test]
fn jump_requires_side() {
    let m = build_flat_spot(0.2, 0.1, 0.0).unwrap().inverse().unwrap();
    let j = m.jumps();
    assert_eq!(j.len(), 1);
    let at = j[0].at;
    assert!(matches!(m.lift_sided(at, None), Err(CircleMapError::AtJump { .. })));
    let l = m.lift_sided(at, Some(Side::Left)).unwrap();
    let r = m.lift_sided(at, Some(Side::Right)).unwrap();
    assert!((r - l - 0.1).abs() < 1e-12);
}

#[test]
fn inverse_undoes_map_off_plateau() {
    let f = build_flat_spot(0.41, 0.08, 0.5).unwrap();
    let g = f.inverse().unwrap();
    check_lift_invariants(&g, 1000).unwrap();
    for i in 1..100 {
        let x = 0.08 + 0.92 * i as f64 / 100.0;
        assert!((g.lift(f.lift(x)) - x).abs() < 1e-12);
    }
}

#[test]
fn denjoy_map_is_degree_one_with_wandering_gap() {
    let w = GapWeights::inverse_square(0.5);
    let m = build_denjoy(&golden(), w, 0.0, Some(2048)).unwrap();
    check_lift_invariants(&m, 1000).unwrap();
    let gm = m.gap_measure().unwrap();
    // each gap is carried onto the next one
    for k in -100..100 {
        let g = gm.gap(0, k).unwrap();
        let h = gm.gap(0, k + 1).unwrap();
        assert!((m.eval(g.start) - h.start).abs() < 1e-15);
        assert!((m.eval(g.start + g.length) - (h.start + h.length)).abs() < 1e-15);
    }
    let g0 = gm.gap(0, 0).unwrap();
    let c = 0.5 / (-2048i64..=2048).map(|k| 1.0 / ((k * k) as f64 + 4.0)).sum::<f64>();
    assert!((g0.length - c / 4.0).abs() < 1e-15);
    let v = variation_log_derivative(&m).unwrap();
    assert!(v.finite && v.v > 0.0);
}

#[test]
fn denjoy_rejects_heavy_weights_and_accepts_zero() {
    let bad = build_denjoy(&golden(), GapWeights::inverse_square(1.2), 0.0, Some(64));
    assert!(matches!(bad, Err(CircleMapError::GapMassTooLarge(_))));
    let plain = build_denjoy(&golden(), GapWeights::inverse_square(0.0), 0.0, None).unwrap();
    assert_eq!(plain.pieces().len(), 1);
}

#[test]
fn denjoy_needs_bounded_type() {
    let r = build_denjoy(&AlphaHandle::Real { value: 0.3 }, GapWeights::inverse_square(0.5), 0.0, None);
    assert!(matches!(r, Err(CircleMapError::NotBoundedType(_))));
}

#[test]
fn cherry_return_is_continuous_up_to_truncation() {
    let spec = [OrbitGapSpec { seed: 0.1, mass: 0.3 }];
    let m = build_cherry_return(&golden(), &spec, Some(1024)).unwrap();
    check_lift_invariants(&m, 2000).unwrap();
    assert_eq!(m.plateaus().len(), 1);
    let gm = m.gap_measure().unwrap();
    let defect: f64 = gm.defects().iter().map(|d| d.size).sum();
    for j in m.jumps() {
        assert!(j.right - j.left <= defect + 1e-15);
    }
    let empty = build_cherry_return(&golden(), &[], None).unwrap();
    assert!(empty.plateaus().is_empty());
    let two = [OrbitGapSpec { seed: 0.1, mass: 0.6 }, OrbitGapSpec { seed: 0.3, mass: 0.5 }];
    assert!(build_cherry_return(&golden(), &two, None).is_err());
}

#[test]
fn jump_return_skips_gap_zero() {
    let spec = [OrbitGapSpec { seed: 0.2, mass: 0.3 }];
    let m = build_jump_return(&golden(), &spec, Some(1024)).unwrap();
    let gm = m.gap_measure().unwrap();
    let g0 = gm.gap(0, 0).unwrap();
    let big: Vec<_> = m.jumps().into_iter().filter(|j| j.right - j.left > 1e-6).collect();
    assert_eq!(big.len(), 1);
    assert!((frac(big[0].left) - g0.start).abs() < 1e-15);
    assert!((big[0].right - big[0].left - g0.length).abs() < 1e-15);
}

#[test]
fn inverse_handle_is_reflected() {
    let m = build_rotation_handle(&golden());
    let inv = m.inverse().unwrap();
    match inv.rotation_handle() {
        Some(AlphaHandle::Quadratic(q)) => {
            assert!((q.to_f64() - (1.0 - golden().to_f64())).abs() < 1e-15);
        }
        other => panic!("{other:?}"),
    }
    let silver = AlphaHandle::Quadratic(QuadraticIrrational::constant(2));
    let inv = build_rotation_handle(&silver).inverse().unwrap();
    let v = inv.rotation_handle().unwrap().to_f64();
    assert!((v - (1.0 - silver.to_f64())).abs() < 1e-15);
}

#[test]
fn monotone_families() {
    let base: Arc<dyn CircleMap> = Arc::new(build_rotation(0.3));
    let fam = MonotoneFamily::new(base.clone(), Homeo::Rotation, (0.0, 0.2), 0.0).unwrap();
    assert!((fam.member(0.1).eval(0.0) - 0.4).abs() < 1e-15);
    let bump = Homeo::Bump { center: 0.5, width: 0.25 };
    assert!(MonotoneFamily::new(base.clone(), bump, (0.0, 0.1), 0.2).is_ok());
    // F_0(0.9) = 1.2 lies outside the bump
    let err = MonotoneFamily::new(base.clone(), bump, (0.0, 0.1), 0.9).unwrap_err();
    assert!(matches!(err, CircleMapError::NonMonotoneFamily(_)));
    assert!(MonotoneFamily::new(base, bump, (0.0, 0.3), 0.2).is_err());
}

#[test]
fn table_round_trips_through_json() {
    let m = build_flat_spot(0.25, 0.1, 0.3).unwrap().with_handle(golden());
    let s = serde_json::to_string(&m).unwrap();
    let back: PiecewiseMonotoneCircleMap = serde_json::from_str(&s).unwrap();
    assert_eq!(back.pieces(), m.pieces());
    assert_eq!(back.rotation_handle(), m.rotation_handle());
}

