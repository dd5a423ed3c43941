//! Runs every acceptance criterion at its stated size and tolerance and
//! prints one line per criterion.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rotorlab::cfrac::*;
use rotorlab::circle_map::*;
use rotorlab::closest_returns::ReturnScaffold;
use rotorlab::exact::{QuadNumber, Rational, Scalar};
use rotorlab::rotation_number::*;
use rotorlab::torus_flow::*;
use rotorlab::twist_closing::*;
use rotorlab::wandering::*;

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn random_handle(rng: &mut ChaCha8Rng, max_quotient: u64) -> QuadraticIrrational {
    let pre = (0..rng.gen_range(0..3)).map(|_| rng.gen_range(1..=max_quotient)).collect();
    let per = (0..rng.gen_range(1..4)).map(|_| rng.gen_range(1..=max_quotient)).collect();
    QuadraticIrrational::new(pre, per).unwrap()
}

fn handle(label: &str) -> AlphaHandle {
    label.parse().unwrap()
}

fn cf_exactness() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..100 {
        let q = rng.gen_range(1..=10_000i128);
        let p = rng.gen_range(0..=q);
        let cf = expand_rational(p, q).map_err(|e| e.to_string())?;
        ensure(reconstruct(&cf) == Rational::new(p, q), || format!("{p}/{q} does not reconstruct"))?;
        let conv = convergents(&cf);
        for n in 1..conv.len() {
            let d = conv[n].p * conv[n - 1].q - conv[n - 1].p * conv[n].q;
            ensure(d.abs() == 1, || format!("{p}/{q}: determinant {d} at n = {n}"))?;
        }
    }
    Ok("100 rationals".into())
}

fn closest_returns() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..50 {
        let h = random_handle(&mut rng, 6);
        let times = closest_return_times(&h.expand(6));
        let mut expected = times.clone();
        expected.dedup();
        let brute = common::record_times(h.to_f64(), *times.last().unwrap());
        ensure(brute == expected, || format!("{h}: {times:?} vs brute force {brute:?}"))?;
    }
    Ok("50 handles up to q_6".into())
}

fn im_bound() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let alpha = AlphaHandle::Quadratic(random_handle(&mut rng, 4));
        let n = rng.gen_range(1..=6);
        let sc = ReturnScaffold::exact(&alpha, QuadNumber::from_ratio(0, 1), n).map_err(|e| e.to_string())?;
        let gaps = sc.gap_arcs();
        let t = &gaps[rng.gen_range(0..gaps.len())];
        let im = common::translate_multiplicity(&sc, t, sc.q(n as isize) as i64);
        let bound = 2 * (sc.a(n) as usize + 1);
        ensure(im <= bound, || format!("{}, n = {n}: multiplicity {im} > {bound}", alpha.label()))?;
        let rep = sc.im_bound_check(t).map_err(|e| e.to_string())?;
        ensure(rep.im == im, || format!("{}, n = {n}: sweep {} vs brute force {im}", alpha.label(), rep.im))?;
        worst = worst.max(im as f64 / bound as f64);
    }
    Ok(format!("100 instances, largest im/bound {worst:.2}"))
}

fn three_distance() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..50 {
        let alpha = AlphaHandle::Quadratic(random_handle(&mut rng, 5));
        let n = rng.gen_range(1..=7);
        let sc = ReturnScaffold::exact(&alpha, QuadNumber::from_ratio(0, 1), n).map_err(|e| e.to_string())?;
        let td = sc.three_distance_points().map_err(|e| e.to_string())?;
        let mut lengths: Vec<f64> = td.gaps.iter().map(|g| g.to_f64()).collect();
        lengths.sort_by(f64::total_cmp);
        lengths.dedup_by(|a, b| (*a - *b).abs() <= 1e-12);
        ensure(lengths.len() <= 2, || format!("{}, n = {n}: lengths {lengths:?}", alpha.label()))?;
    }
    Ok("50 instances".into())
}

fn rotation_certificates() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let alpha = rng.gen::<f64>();
        let e = estimate(&build_rotation(alpha), rng.gen::<f64>(), rng.gen_range(10..5000)).map_err(|e| e.to_string())?;
        ensure(e.contains(alpha), || format!("α = {alpha}: {} ± {}", e.value, e.radius))?;
    }
    let golden = AlphaHandle::golden();
    let n = 1000;
    let m = build_denjoy(&golden, GapWeights::inverse_square(0.5), 0.0, None).map_err(|e| e.to_string())?;
    let e = estimate(&m, 0.0, n).map_err(|e| e.to_string())?;
    let err = (e.value - golden.to_f64()).abs();
    ensure(err <= 1.0 / n as f64, || format!("Denjoy estimate off by {err:e}"))?;
    Ok(format!("100/100 rotations, Denjoy off by {err:.1e}"))
}

fn denjoy_certificate() -> Check {
    let golden = AlphaHandle::golden();
    let m = build_denjoy(&golden, GapWeights::inverse_square(0.5), 0.0, None).map_err(|e| e.to_string())?;
    let gm = m.gap_measure().ok_or("no stored gaps")?;
    let n = 1000i64;
    let mut arcs = Vec::new();
    let mut drift = 0.0f64;
    for k in -n..=n {
        let g = gm.gap(0, k).ok_or_else(|| format!("gap {k} not stored"))?;
        if k < n {
            // the map carries each stored gap onto the next one
            let next = gm.gap(0, k + 1).unwrap();
            let img = forward_image(&m, &g);
            let d = |a: f64, b: f64| (frac(a - b + 0.5) - 0.5).abs();
            drift = drift.max(d(img.start, next.start)).max(d(img.end(), next.end()));
        }
        arcs.push((k, g));
    }
    ensure(drift < 1e-9, || format!("images miss the stored gaps by {drift:e}"))?;
    arcs.sort_by(|a, b| a.1.start.total_cmp(&b.1.start));
    for (i, (k, g)) in arcs.iter().enumerate() {
        let (k2, h) = &arcs[(i + 1) % arcs.len()];
        let gap_between = frac(h.start - g.end());
        ensure(gap_between > 0.0 && g.end() - g.start < 1.0, || format!("gaps {k} and {k2} meet"))?;
    }
    let scan = scan_wandering(&m, &gm.gap(0, 0).unwrap(), Direction::TwoSided, n as usize).map_err(|e| e.to_string())?;
    ensure(scan.wandering, || format!("scan stopped: {:?}", scan.stop))?;
    let h = compute_semiconjugacy(&m, 1e-9).map_err(|e| e.to_string())?;
    ensure(h.residual < 1e-6, || format!("semiconjugacy residual {:e}", h.residual))?;
    Ok(format!(
        "2001 stored gaps disjoint, image drift {drift:.1e}, residual {:.1e}",
        h.residual
    ))
}

fn distortion() -> Check {
    let mut lines = Vec::new();
    let cases: Vec<(String, PiecewiseMonotoneCircleMap, i64)> = vec![
        ("Denjoy golden".into(), build_denjoy(&handle("golden"), GapWeights::inverse_square(0.5), 0.0, None).unwrap(), 0),
        ("Denjoy silver".into(), build_denjoy(&handle("silver"), GapWeights::inverse_square(0.3), 0.2, None).unwrap(), 0),
        ("Denjoy [0;(1,2)]".into(), build_denjoy(&handle("[0;(1,2)]"), GapWeights::inverse_square(0.4), 0.5, None).unwrap(), 0),
        (
            "Cherry golden".into(),
            build_cherry_return(&handle("golden"), &[OrbitGapSpec { seed: 0.1, mass: 0.3 }], None).unwrap(),
            -101,
        ),
        (
            "Cherry silver".into(),
            build_cherry_return(&handle("silver"), &[OrbitGapSpec { seed: 0.6, mass: 0.2 }], None).unwrap(),
            -101,
        ),
        (
            "Cherry [0;(3)]".into(),
            build_cherry_return(&handle("[0;(3)]"), &[OrbitGapSpec { seed: 0.3, mass: 0.4 }], None).unwrap(),
            -101,
        ),
    ];
    for (i, (name, m, k0)) in cases.iter().enumerate() {
        // a gap whose first 100 images stay off the plateau
        let t = m.gap_measure().unwrap().gap(0, *k0).ok_or("gap not stored")?;
        let d = distortion_check(m, &t, 100, 1000, 70 + i as u64).map_err(|e| e.to_string())?;
        ensure(d.passed && d.samples == 1000, || {
            format!(
                "{name}: log ratio {} > {} ({} samples)",
                d.observed_max_log_ratio, d.log_beta, d.samples
            )
        })?;
        lines.push(format!("{:.2}/{:.2}", d.observed_max_log_ratio, d.log_beta));
    }
    Ok(format!("6 maps, log ratio vs log β: {}", lines.join(" ")))
}

fn dichotomy() -> Check {
    let mut maps: Vec<(String, PiecewiseMonotoneCircleMap)> = Vec::new();
    for label in ["golden", "silver", "[0;(1,2)]", "[0;(3)]"] {
        let m = build_flat_spot_with_rotation(&handle(label), 0.1, 0.5, 2000).map_err(|e| e.to_string())?;
        maps.push((format!("inverse flat spot {label}"), m.inverse().map_err(|e| e.to_string())?));
        maps.push((format!("flat spot {label}"), m));
    }
    for (label, seed, mass) in [("golden", 0.1, 0.3), ("silver", 0.4, 0.2)] {
        let spec = [OrbitGapSpec { seed, mass }];
        maps.push((format!("cherry return {label}"), build_cherry_return(&handle(label), &spec, None).unwrap()));
        maps.push((format!("jump return {label}"), build_jump_return(&handle(label), &spec, None).unwrap()));
    }
    let mut summary = Vec::new();
    for (name, m) in &maps {
        let c = default_candidate(m).ok_or_else(|| format!("{name}: no candidate"))?;
        let rep = theorem_a_experiment(m, &c, &c, 1000).map_err(|e| format!("{name}: {e}"))?;
        ensure(rep.v.is_finite(), || format!("{name}: V = {}", rep.v))?;
        ensure(!rep.both_survive, || format!("{name}: both directions survive"))?;
        summary.push(rep.first_failure);
    }
    let fwd = summary.iter().filter(|s| *s == "forward").count();
    Ok(format!(
        "{} maps, forward fails on {fwd}, backward on {}",
        maps.len(),
        maps.len() - fwd
    ))
}

fn cells(label: &str, seeds: &[([f64; 2], CellKind)]) -> Check {
    let specs: Vec<CellSpec> = seeds
        .iter()
        .map(|&(seed, kind)| CellSpec {
            seed,
            kind,
            width: 0.01,
            length: 0.03,
        })
        .collect();
    let lp = TransverseLoop::vertical(0.0);
    let opts = ReturnOptions {
        map_tol: 1e-7,
        ..ReturnOptions::with_resolution(256)
    };
    let t0 = Instant::now();
    let (f, _) = tune_blowup(&handle(label), &specs, &lp, &opts, 300).map_err(|e| e.to_string())?;
    let tuning = t0.elapsed();
    ensure(f.singularities.iter().all(|s| s.kind != SingularityKind::Saddle || s.zero_divergence_saddle()), || {
        "saddle with nonzero divergence".into()
    })?;
    let t1 = Instant::now();
    let r = classify_cells(&f, 256, 1e3);
    let classify = t1.elapsed();
    ensure(r.co_directed && r.grey_candidates == 0 && r.resolved_fraction >= 0.99, || {
        format!(
            "co-directed {}, grey {}, resolved {:.4}",
            r.co_directed, r.grey_candidates, r.resolved_fraction
        )
    })?;
    ensure(classify < Duration::from_secs(300), || format!("classification took {classify:.0?}"))?;
    Ok(format!(
        "{label} {}: {} cells, resolved {:.4}, classify {:.1?}, tune {:.1?}",
        seeds.iter().map(|s| format!("{:?}", s.1).to_lowercase()).collect::<Vec<_>>().join("+"),
        r.cells.len(),
        r.resolved_fraction,
        classify,
        tuning
    ))
}

fn cell_classification() -> Check {
    use CellKind::{Backward, Forward};
    let fields: [(&str, Vec<([f64; 2], CellKind)>); 5] = [
        ("golden", vec![([0.5, 0.5], Backward)]),
        ("golden", vec![([0.5, 0.5], Forward)]),
        ("silver", vec![([0.3, 0.6], Backward), ([0.7, 0.1], Backward)]),
        ("[0;(1,2)]", vec![([0.5, 0.2], Forward)]),
        ("silver", vec![([0.4, 0.4], Forward), ([0.8, 0.9], Forward)]),
    ];
    let mut lines = Vec::new();
    for (label, seeds) in &fields {
        lines.push(cells(label, seeds)?);
    }
    Ok(format!("{} fields\n    {}", fields.len(), lines.join("\n    ")))
}

fn cherry_closing() -> Check {
    let specs = [CellSpec {
        seed: [0.5, 0.5],
        kind: CellKind::Backward,
        width: 0.01,
        length: 0.03,
    }];
    let lp = TransverseLoop::vertical(0.0);
    let golden = AlphaHandle::golden();
    let (f, _) = tune_blowup(&golden, &specs, &lp, &ReturnOptions::default(), 1_000_000).map_err(|e| e.to_string())?;
    ensure(f.singularities.iter().any(|s| s.zero_divergence_saddle()), || "no zero-divergence saddle".into())?;
    let fam = build_twist_family(&f, &lp, 0.15, Profile::Poly, 0.5).map_err(|e| e.to_string())?;
    let ind = induced_family(&fam, 1024).map_err(|e| e.to_string())?;
    let p = ind.f0.basins.first().ok_or("no plateau")?.value.rem_euclid(1.0);
    let res = closing_search(&fam, &ind, p, 4).map_err(|e| e.to_string())?;
    let e = &res.entries;
    ensure(e.len() >= 3, || format!("{} closing parameters", e.len()))?;
    let conv = convergents(&golden.expand(40).unwrap());
    for w in e.windows(2) {
        ensure(w[1].a_n < w[0].a_n, || format!("a_n not decreasing: {} then {}", w[0].a_n, w[1].a_n))?;
        ensure(w[1].distance_to_p <= w[0].distance_to_p, || "|x_n − p| increases".into())?;
    }
    let mut ratios = Vec::new();
    for x in e {
        ensure(x.closure_residual < 1e-6, || format!("{}/{}: residual {:e}", x.p_n, x.q_n, x.closure_residual))?;
        let c = conv[x.n];
        ensure(
            (x.p_n, x.q_n) == (c.p as i64, c.q as i64) && x.homology == (c.p as i64, c.q as i64),
            || format!("homology {:?} vs convergent {}/{}", x.homology, c.p, c.q),
        )?;
        ratios.push(x.approx_cr_distance / x.a_n);
    }
    let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0f64), |(l, h), r| (l.min(*r), h.max(*r)));
    ensure(hi / lo - 1.0 < 1e-3, || format!("jet distance / a_n ranges over {lo}..{hi}"))?;
    Ok(format!(
        "{} orbits, a_n {:.3e}..{:.3e}, jet distance / a_n = {:.1} (spread {:.1e})",
        e.len(),
        e[0].a_n,
        e[e.len() - 1].a_n,
        lo,
        hi / lo - 1.0
    ))
}

fn rigid_closing() -> Check {
    let h = 0.15;
    let c = h * common::simpson(|t| (1.0 - t * t).powi(5), -1.0, 1.0, 2000);
    let mut checked = 0;
    let mut worst = 0.0f64;
    for label in ["golden", "silver", "[0;(1,2)]", "[0;1,(3)]"] {
        let alpha = handle(label);
        let f = build_blowup(&alpha, &[]).map_err(|e| e.to_string())?;
        let lp = TransverseLoop::vertical(0.3);
        let fam = build_twist_family(&f, &lp, h, Profile::Poly, 0.5).map_err(|e| e.to_string())?;
        let ind = induced_family(&fam, 256).map_err(|e| e.to_string())?;
        let res = closing_search(&fam, &ind, 0.3, 3).map_err(|e| e.to_string())?;
        let conv = convergents(&alpha.expand(20).unwrap());
        ensure(!res.entries.is_empty(), || format!("{label}: no closing parameters"))?;
        for e in &res.entries {
            let k = conv[e.n];
            let closed_form = (k.p as f64 / k.q as f64 - alpha.to_f64()) / c;
            let err = (e.a_n - closed_form).abs();
            ensure(err < 1e-8, || format!("{label} {}/{}: a_n {} vs {closed_form}", k.p, k.q, e.a_n))?;
            worst = worst.max(err);
            checked += 1;
        }
    }
    Ok(format!("{checked} parameters on 4 handles, largest error {worst:.1e}"))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Check, Option<u64>); 11] = [
        ("continued-fraction exactness", cf_exactness, Some(1)),
        ("closest returns against brute force", closest_returns, Some(10)),
        ("intersection multiplicity bound", im_bound, Some(30)),
        ("three-distance structure", three_distance, None),
        ("rotation-number certification", rotation_certificates, None),
        ("Denjoy wandering certificate", denjoy_certificate, Some(30)),
        ("distortion bound", distortion, None),
        ("forward/backward dichotomy", dichotomy, None),
        ("cell classification", cell_classification, None),
        ("closing a Cherry orbit", cherry_closing, Some(600)),
        ("rigid closing closed form", rigid_closing, None),
    ];
    let mut failed = 0;
    for (i, (name, run, limit)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let mut out = run();
        let dt = t.elapsed();
        if let (Ok(_), Some(s)) = (&out, limit) {
            if dt > Duration::from_secs(*s) {
                out = Err(format!("took {dt:.1?}, limit {s} s"));
            }
        }
        match out {
            Ok(msg) => println!("[PASS] {:>2}. {name} ({dt:.2?}): {msg}", i + 1),
            Err(msg) => {
                failed += 1;
                println!("[FAIL] {:>2}. {name} ({dt:.2?}): {msg}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
