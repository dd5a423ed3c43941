use super::*;
use crate::cfrac::AlphaHandle;
use crate::circle_map::{variation_log_derivative, CircleMap};

fn cell(seed: [f64; 2], kind: CellKind) -> CellSpec {
    CellSpec {
        seed,
        kind,
        width: 0.05,
        length: 0.1,
    }
}

fn cherry(kind: CellKind) -> TorusVectorField {
    build_blowup(&AlphaHandle::golden(), &[cell([0.5, 0.5], kind)]).unwrap()
}

fn golden() -> f64 {
    AlphaHandle::golden().to_f64()
}

#[test]
fn linear_flow_is_exact_over_long_spans() {
    let f = TorusVectorField::linear(golden());
    let seg = integrate(&f, [0.1, 0.2], 100.0, 1e-9, None);
    assert_eq!(seg.outcome, Outcome::Completed);
    assert!((seg.end[0] - 100.1).abs() < 1e-9);
    assert!((seg.end[1] - (0.2 + 100.0 * golden())).abs() < 1e-9);
}

#[test]
fn forward_then_backward_returns_to_start() {
    let f = cherry(CellKind::Forward);
    let tol = 1e-9;
    for z in [[0.1, 0.05], [0.3, 0.9], [0.05, 0.62]] {
        let fwd = integrate(&f, z, 6.0, tol, None);
        let back = integrate(&f, fwd.end, -6.0, tol, None);
        let err = (back.end[0] - z[0]).hypot(back.end[1] - z[1]);
        assert!(err < 10.0 * tol, "start {z:?}: error {err:e}");
    }
}

#[test]
fn backward_seed_gives_sink_and_trace_free_saddle() {
    let f = cherry(CellKind::Backward);
    let kinds: Vec<SingularityKind> = f.singularities.iter().map(|s| s.kind).collect();
    assert_eq!(kinds.len(), 2);
    assert!(kinds.contains(&SingularityKind::Sink) && kinds.contains(&SingularityKind::Saddle));
    let saddle = f.singularities.iter().find(|s| s.kind == SingularityKind::Saddle).unwrap();
    assert_eq!(saddle.divergence, 0.0);
    assert!(saddle.zero_divergence_saddle());
    assert!(divergence_at(&f, saddle.position).abs() < 1e-9);

    let rev = cherry(CellKind::Forward);
    assert!(rev.has_sources() && !rev.has_sinks());
}

#[test]
fn listed_jacobians_match_the_field() {
    for kind in [CellKind::Backward, CellKind::Forward] {
        let f = cherry(kind);
        for s in &f.singularities {
            let v = f.velocity(s.position[0], s.position[1]);
            assert!(v[0].hypot(v[1]) < 1e-12);
            let j = f.jacobian(s.position[0], s.position[1]);
            for r in 0..2 {
                for c in 0..2 {
                    assert!((j[r][c] - s.jacobian[r][c]).abs() < 1e-8 * (1.0 + s.jacobian[r][c].abs()));
                }
            }
            assert_eq!(Singularity::classify(&j), s.kind);
        }
    }
}

#[test]
fn zeros_on_a_grid_are_exactly_the_listed_ones() {
    let f = build_blowup(
        &AlphaHandle::golden(),
        &[cell([0.2, 0.3], CellKind::Backward), cell([0.7, 0.8], CellKind::Forward)],
    )
    .unwrap();
    let zeros = f.find_zeros(256);
    assert_eq!(zeros.len(), f.singularities.len());
    assert!(zeros.iter().all(|(_, m)| m.is_some()));
}

#[test]
fn field_is_periodic() {
    let f = cherry(CellKind::Backward);
    for (x, y) in [(0.47, 0.52), (0.1, 0.9), (0.55, 0.49)] {
        let v = f.velocity(x, y);
        for (dx, dy) in [(1.0, 0.0), (0.0, 1.0), (-1.0, 2.0)] {
            let w = f.velocity(x + dx, y + dy);
            assert!((v[0] - w[0]).abs() < 1e-12 && (v[1] - w[1]).abs() < 1e-12);
        }
    }
}

#[test]
fn overlapping_cells_are_rejected() {
    let r = build_blowup(
        &AlphaHandle::golden(),
        &[cell([0.5, 0.5], CellKind::Backward), cell([0.55, 0.5], CellKind::Backward)],
    );
    assert!(matches!(r, Err(FlowError::OverlappingCells(0, 1))));
}

#[test]
fn no_seeds_means_no_singularities() {
    let f = build_blowup(&AlphaHandle::golden(), &[]).unwrap();
    assert!(f.singularities.is_empty());
    assert!(f.find_zeros(64).is_empty());
}

#[test]
fn jet_distance_vanishes_on_itself_and_scales_with_the_twist() {
    let f = cherry(CellKind::Backward);
    assert_eq!(jet_norm_distance(&f, &f, 4, 32).unwrap(), 0.0);
    let twist = |a: f64| {
        f.clone()
            .with_twist(TwistTerm {
                x0: 0.0,
                half_width: 0.15,
                profile: Profile::Poly,
                a,
            })
            .unwrap()
    };
    let d1 = jet_norm_distance(&twist(1e-3), &f, 4, 64).unwrap();
    let d2 = jet_norm_distance(&twist(2e-3), &f, 4, 64).unwrap();
    assert!(d1 > 0.0);
    assert!((d2 - 2.0 * d1).abs() < 1e-9 * d2);
    assert!(matches!(jet_norm_distance(&f, &f, 5, 8), Err(FlowError::Smoothness { r: 5, .. })));
}

#[test]
fn linear_return_map_is_the_rotation() {
    let f = TorusVectorField::linear(golden());
    let lp = TransverseLoop::vertical(0.0);
    let rm = induced_return_map(&f, &lp, 256).unwrap();
    for i in 0..100 {
        let y = i as f64 / 100.0 + 0.003;
        assert!((rm.map.lift(y) - y - golden()).abs() < 1e-9);
    }
    assert!(rm.map.plateaus().is_empty() && rm.map.jumps().is_empty());
    assert!((rm.return_time.0 - 1.0).abs() < 1e-9 && (rm.return_time.1 - 1.0).abs() < 1e-9);
    assert!(variation_log_derivative(&rm.map).unwrap().v < 1e-9);
}

#[test]
fn backward_cell_gives_a_plateau_and_no_jump() {
    let f = cherry(CellKind::Backward);
    let lp = default_loop(&f);
    let rm = induced_return_map(&f, &lp, 512).unwrap();
    assert!(rm.unresolved.is_empty());
    assert_eq!(rm.map.plateaus().len(), 1);
    assert!(rm.map.jumps().is_empty());
    assert_eq!(rm.basins.len(), 1);
}

#[test]
fn forward_cell_gives_a_jump_and_no_plateau() {
    let f = cherry(CellKind::Forward);
    let lp = default_loop(&f);
    let rm = induced_return_map(&f, &lp, 512).unwrap();
    assert!(rm.map.plateaus().is_empty());
    assert_eq!(rm.map.jumps().len(), 1);
}

#[test]
fn orbit_entering_the_basin_never_returns() {
    let f = cherry(CellKind::Backward);
    let lp = default_loop(&f);
    let rm = induced_return_map(&f, &lp, 256).unwrap();
    let b = rm.basins[0];
    let y = 0.5 * (b.from + b.to);
    assert!(matches!(first_return(&f, &lp, y, 1e-9, 1e4), ReturnPoint::Captured { .. }));
    let mut tr = Tracer::new(&f);
    tr.section = Some(&lp);
    let seg = tr.run(lp.point(y.rem_euclid(1.0)), 1e3);
    assert!(seg.crossings.is_empty());
}

#[test]
fn cherry_flow_has_one_backward_black_cell() {
    let r = classify_cells(&cherry(CellKind::Backward), 48, 1e3);
    assert_eq!(r.count(CellType::BackwardBlack), 1);
    assert_eq!(r.cells.len(), 1);
    assert!(r.co_directed && !r.low_confidence && r.grey_candidates == 0);
}

#[test]
fn linear_flow_has_no_cells() {
    let r = classify_cells(&TorusVectorField::linear(golden()), 32, 100.0);
    assert!(r.cells.is_empty());
    assert_eq!(r.resolved_fraction, 1.0);
    assert!(r.labels.iter().all(|l| l.forward == Label::Quasiminimal && l.backward == Label::Quasiminimal));
}

#[test]
fn two_backward_seeds_give_two_co_directed_cells() {
    let f = build_blowup(
        &AlphaHandle::golden(),
        &[cell([0.25, 0.25], CellKind::Backward), cell([0.75, 0.6], CellKind::Backward)],
    )
    .unwrap();
    let r = classify_cells(&f, 48, 1e3);
    assert_eq!(r.count(CellType::BackwardBlack), 2);
    assert!(r.co_directed && !r.opposed_nodes);
}

#[test]
fn opposed_seeds_are_flagged() {
    let f = build_blowup(
        &AlphaHandle::golden(),
        &[cell([0.25, 0.25], CellKind::Backward), cell([0.75, 0.6], CellKind::Forward)],
    )
    .unwrap();
    let r = classify_cells(&f, 32, 1e3);
    assert!(r.opposed_nodes);
    assert!(r.count(CellType::MedialBlack) >= 1);
}

#[test]
fn transversal_of_the_linear_flow_is_vertical() {
    let f = TorusVectorField::linear(golden());
    let lp = construct_transversal(&f, [0.3, 0.7], 0.05).unwrap();
    assert!(lp.is_straight());
    assert_eq!(lp.x0, 0.3);
}

#[test]
fn transversal_through_a_cherry_point_bends_around_the_cell() {
    // needs an irrational rotation number, or the plateau value falls back
    // into the basin
    let lp0 = TransverseLoop::vertical(0.0);
    let opts = ReturnOptions {
        resolution: 256,
        map_tol: 1e-7,
        ..Default::default()
    };
    let cells = [cell([0.5, 0.5], CellKind::Backward)];
    let (f, _) = tune_blowup(&AlphaHandle::golden(), &cells, &lp0, &opts, 300).unwrap();
    let rm = induced_return_map_with(&f, &lp0, &opts).unwrap();
    // the plateau value lies in the recurrent set; follow its orbit to a
    // point on the vertical through the cell, far from the cell
    let mut y = rm.basins[0].value;
    let p = loop {
        let yc = (y + f.alpha * (0.5 - lp0.x0)).rem_euclid(1.0);
        if (yc - 0.5).abs() > 0.4 {
            break [0.5, yc];
        }
        y = rm.map.lift(y);
    };
    let lp = construct_transversal(&f, p, 0.02).unwrap();
    assert!(!lp.is_straight());
    assert_eq!(lp.point(p[1]), p);
    assert!(lp.transversality_margin(&f, 4096) > 0.0);
    assert!(lp.avoids_singularities(&f, 0.02));
    let bent = induced_return_map(&f, &lp, 256).unwrap();
    assert_eq!(bent.map.plateaus().len(), 1);
    assert!(bent.map.jumps().is_empty());
}

#[test]
fn points_in_a_black_cell_are_rejected() {
    let f = cherry(CellKind::Backward);
    let sink = f.singularities.iter().find(|s| s.kind == SingularityKind::Sink).unwrap();
    let p = [sink.position[0] + 0.01, sink.position[1]];
    assert!(matches!(construct_transversal(&f, p, 0.02), Err(FlowError::NoTransversal(_))));
}
