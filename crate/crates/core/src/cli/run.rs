//! Execution of single commands.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use super::output::{csv, num, Artifacts};
use super::svg::Svg;
use super::*;
use crate::cfrac::convergents;
use crate::circle_map::{variation_log_derivative, CircleMap, PiecewiseMonotoneCircleMap};
use crate::closest_returns::{ArcInterval, ReturnScaffold};
use crate::exact::QuadNumber;
use crate::rotation_number::{estimate, solve_parameter_for_rational, TunedParameter};
use crate::torus_flow::integrate::DEFAULT_TOL;
use crate::torus_flow::{
    classify_cells, construct_transversal, default_loop, integrate, tune_blowup, Label, ReturnOptions,
    SingularityKind, TorusVectorField, Tracer, TransverseLoop,
};
use crate::twist_closing::{build_twist_family, closing_search, induced_family, verify_closed_orbit};
use crate::wandering::{default_candidate, distortion_check, scan_wandering, theorem_a_experiment};

pub struct Ctx {
    pub seed: u64,
    pub tol: Option<f64>,
}

impl Ctx {
    fn tol(&self) -> f64 {
        self.tol.unwrap_or(DEFAULT_TOL)
    }
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2",
];

pub fn execute(cmd: &Command, ctx: &Ctx) -> Result<Artifacts, CliError> {
    match cmd {
        Command::Cfrac(a) => cfrac(a),
        Command::ImCheck(a) => im_check(a),
        Command::MapBuild(a) => map_build(a),
        Command::MapEval(a) => map_eval(a),
        Command::MapVar(a) => Artifacts::new(&variation_log_derivative(&load_map(&a.map)?)?),
        Command::Rotnum(a) => Artifacts::new(&estimate(&load_map(&a.map)?, a.x0, a.n)?),
        Command::SolveRho(a) => solve_rho(a),
        Command::WanderScan(a) => wander_scan(a),
        Command::DistortionCheck(a) => {
            let m = load_map(&a.map)?;
            let t = interval_or_default(&m, a.start.zip(a.len))?;
            Artifacts::new(&distortion_check(&m, &t, a.k, a.samples, ctx.seed)?)
        }
        Command::ThmA(a) => thm_a(a),
        Command::FlowSim(a) => flow_sim(a, ctx),
        Command::Cells(a) => cells(a),
        Command::Transversal(a) => transversal(a),
        Command::Portrait(a) => portrait(a, ctx),
        Command::Close(a) => close(a, ctx),
        Command::VerifyOrbit(a) => {
            let f = TorusVectorField::from_spec(&a.field.load()?)?;
            let lp = TransverseLoop::vertical(a.loop_x0);
            Artifacts::new(&verify_closed_orbit(&f, a.y, &lp, a.q, a.p))
        }
    }
}

fn load_map(src: &Source<MapSpec>) -> Result<PiecewiseMonotoneCircleMap, CliError> {
    src.load()?.build()
}

fn pair(v: &Option<Vec<f64>>, what: &str) -> Result<Option<(f64, f64)>, CliError> {
    match v.as_deref() {
        None => Ok(None),
        Some([a, b]) => Ok(Some((*a, *b))),
        Some(_) => Err(CliError::Usage(format!("{what} takes two numbers"))),
    }
}

fn interval_or_default(m: &PiecewiseMonotoneCircleMap, given: Option<(f64, f64)>) -> Result<ArcInterval, CliError> {
    match given {
        Some((s, l)) => Ok(ArcInterval::closed(s, l)),
        None => default_candidate(m)
            .ok_or_else(|| CliError::Usage("map has no plateau, jump or stored gap; give an interval".into())),
    }
}

fn cfrac(a: &CfracArgs) -> Result<Artifacts, CliError> {
    let cf = a.alpha.expand(a.depth)?;
    let big = |v: i128| i64::try_from(v).map_err(|_| CliError::Usage(format!("convergent {v} overflows; lower --depth")));
    let mut rows = Vec::new();
    for c in convergents(&cf) {
        rows.push(json!({
            "n": c.n,
            "a_n": cf.quotient(c.n).unwrap_or_default(),
            "p_n": big(c.p)?,
            "q_n": big(c.q)?,
        }));
    }
    let result = json!({
        "alpha": a.alpha.label(),
        "a0": cf.a0,
        "partial_quotients": cf.partial_quotients,
        "exact": cf.exact,
        "value": cf.value_f64(),
        "convergents": rows,
    });
    Ok(Artifacts::new(&result)?.with_csv("convergents.csv", cf.convergent_table_csv()))
}

fn im_check(a: &ImCheckArgs) -> Result<Artifacts, CliError> {
    let report = match (a.t_start.zip(a.t_len), a.alpha.exact_value()) {
        (Some((s, l)), _) => {
            ReturnScaffold::float(a.alpha.to_f64(), 0.0, a.n)?.im_bound_check(&ArcInterval::closed(s, l))?
        }
        (None, Some(_)) => {
            let sc = ReturnScaffold::exact(&a.alpha, QuadNumber::from_ratio(0, 1), a.n)?;
            let gaps = sc.gap_arcs();
            let t = gaps
                .get(a.gap)
                .ok_or_else(|| CliError::Usage(format!("only {} gap arcs at level {}", gaps.len(), a.n)))?;
            sc.im_bound_check(t)?
        }
        (None, None) => {
            let sc = ReturnScaffold::float(a.alpha.to_f64(), 0.0, a.n)?;
            let gaps = sc.gap_arcs();
            let t = gaps
                .get(a.gap)
                .ok_or_else(|| CliError::Usage(format!("only {} gap arcs at level {}", gaps.len(), a.n)))?;
            sc.im_bound_check(t)?
        }
    };
    Artifacts::new(&report)
}

fn map_build(a: &MapBuildArgs) -> Result<Artifacts, CliError> {
    let m = load_map(&a.map)?;
    let n = a.samples.max(1);
    let graph = csv(
        &["x", "lift"],
        (0..n).map(|i| {
            let x = i as f64 / n as f64;
            vec![num(x), num(m.lift(x))]
        }),
    );
    Ok(Artifacts::new(&MapSpec::Table { map: m })?.with_csv("graph.csv", graph))
}

fn map_eval(a: &MapEvalArgs) -> Result<Artifacts, CliError> {
    let m = load_map(&a.map)?;
    let mut x = a.x;
    let mut log_df = 0.0f64;
    let mut rows = vec![vec!["0".to_string(), num(x), "1".to_string()]];
    for k in 1..=a.n {
        log_df += m.derivative(x).ln();
        x = m.lift(x);
        rows.push(vec![k.to_string(), num(x), num(log_df.exp())]);
    }
    let result = json!({
        "x0": a.x,
        "n": a.n,
        "x_n": x,
        "mean_advance": if a.n > 0 { (x - a.x) / a.n as f64 } else { 0.0 },
        "log_df_n": log_df,
    });
    Ok(Artifacts::new(&result)?.with_csv("orbit.csv", csv(&["k", "x_k", "df_k"], rows)))
}

fn solve_rho(a: &SolveRhoArgs) -> Result<Artifacts, CliError> {
    let fam = a.family.load()?.build()?;
    let window = pair(&a.window, "window")?.unwrap_or(fam.window);
    Artifacts::new(&solve_parameter_for_rational(&fam, a.p, a.q, window)?)
}

fn wander_scan(a: &WanderScanArgs) -> Result<Artifacts, CliError> {
    let m = load_map(&a.map)?;
    let t = interval_or_default(&m, a.start.zip(a.len))?;
    let rep = scan_wandering(&m, &t, a.direction, a.horizon)?;
    let lengths = rep.lengths_csv();
    Ok(Artifacts::new(&rep)?.with_csv("lengths.csv", lengths))
}

fn thm_a(a: &ThmAArgs) -> Result<Artifacts, CliError> {
    let m = load_map(&a.map)?;
    let fwd = interval_or_default(&m, pair(&a.forward, "forward")?)?;
    let bwd = interval_or_default(&m, pair(&a.backward, "backward")?)?;
    let rep = theorem_a_experiment(&m, &fwd, &bwd, a.horizon)?;
    let rows = rep
        .forward
        .forward_lengths
        .iter()
        .enumerate()
        .map(|(k, l)| vec!["forward".into(), k.to_string(), num(*l)])
        .chain(
            rep.backward
                .backward_lengths
                .iter()
                .enumerate()
                .map(|(k, l)| vec!["backward".into(), k.to_string(), num(*l)]),
        );
    let table = csv(&["scan", "k", "length"], rows);
    Ok(Artifacts::new(&rep)?.with_csv("lengths.csv", table))
}

fn start_point(v: &[f64]) -> Result<[f64; 2], CliError> {
    match v {
        [x, y] => Ok([*x, *y]),
        _ => Err(CliError::Usage("a point takes two numbers".into())),
    }
}

fn flow_sim(a: &FlowSimArgs, ctx: &Ctx) -> Result<Artifacts, CliError> {
    let f = TorusVectorField::from_spec(&a.field.load()?)?;
    let lp = a.loop_x0.map(TransverseLoop::vertical);
    let seg = integrate(&f, start_point(&a.start)?, a.t, ctx.tol(), lp.as_ref());
    let table = csv(
        &["t", "x", "y"],
        seg.points.iter().map(|p| p.iter().map(|v| num(*v)).collect()),
    );
    let result = json!({
        "outcome": seg.outcome,
        "end": seg.end,
        "t_end": seg.t_end,
        "crossings": seg.crossings,
        "points": seg.points.len(),
    });
    Ok(Artifacts::new(&result)?.with_csv("orbit.csv", table))
}

/// The field of a spec, with its base slope tuned to the handle on request.
fn load_field(
    src: &Source<FieldSpec>,
    tune: bool,
    lp: Option<&TransverseLoop>,
    resolution: usize,
    q_limit: i64,
) -> Result<(TorusVectorField, Option<TunedParameter>), CliError> {
    let spec = src.load()?;
    let f = TorusVectorField::from_spec(&spec)?;
    if !tune {
        return Ok((f, None));
    }
    let lp = lp.cloned().unwrap_or_else(|| default_loop(&f));
    let opts = ReturnOptions::with_resolution(resolution);
    let (g, t) = tune_blowup(&spec.alpha, &spec.cells, &lp, &opts, q_limit)?;
    Ok((g, Some(t)))
}

fn with_field(art: Artifacts, f: &TorusVectorField, tuned: &Option<TunedParameter>) -> Result<Artifacts, CliError> {
    Ok(match tuned {
        Some(_) => art.with_file("field.json", output::to_json(&f.spec())?),
        None => art,
    })
}

fn label_text(l: Label) -> String {
    match l {
        Label::Quasiminimal => "recurrent".into(),
        Label::Node(i) => format!("singularity {i}"),
        Label::Unresolved => "unresolved".into(),
    }
}

fn cells(a: &CellsArgs) -> Result<Artifacts, CliError> {
    let (f, tuned) = load_field(&a.field, a.tune, None, a.resolution, a.q_limit)?;
    let rep = classify_cells(&f, a.grid, a.budget);
    let table = csv(
        &["i", "j", "x", "y", "forward", "backward"],
        rep.labels.iter().enumerate().map(|(k, l)| {
            let p = rep.point(k);
            vec![
                (k % rep.grid).to_string(),
                (k / rep.grid).to_string(),
                num(p[0]),
                num(p[1]),
                label_text(l.forward),
                label_text(l.backward),
            ]
        }),
    );
    let mut v = serde_json::to_value(&rep).map_err(|e| CliError::Io(e.to_string()))?;
    if let Value::Object(o) = &mut v {
        o.remove("labels");
        o.insert("tuned".into(), serde_json::to_value(&tuned).map_err(|e| CliError::Io(e.to_string()))?);
    }
    with_field(Artifacts::new(&v)?.with_csv("labels.csv", table), &f, &tuned)
}

fn transversal(a: &TransversalArgs) -> Result<Artifacts, CliError> {
    let f = TorusVectorField::from_spec(&a.field.load()?)?;
    let lp = construct_transversal(&f, start_point(&a.point)?, a.tube)?;
    let result = json!({
        "loop": lp,
        "straight": lp.is_straight(),
        "homology": lp.homology(),
        "margin": lp.transversality_margin(&f, 4096),
        "avoids_singularities": lp.avoids_singularities(&f, a.tube),
    });
    let table = csv(
        &["y", "x"],
        (0..=256).map(|i| {
            let y = i as f64 / 256.0;
            vec![num(y), num(lp.point(y)[0])]
        }),
    );
    Ok(Artifacts::new(&result)?.with_csv("loop.csv", table))
}

/// Seeded orbits run both ways from random starts, as lifted paths.
fn sample_orbits(f: &TorusVectorField, n: usize, t: f64, tol: f64, seed: u64) -> Vec<Vec<[f64; 3]>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let starts: Vec<[f64; 2]> = (0..n).map(|_| [rng.gen::<f64>(), rng.gen::<f64>()]).collect();
    starts
        .iter()
        .map(|&z| {
            let back = integrate(f, z, -0.5 * t, tol, None);
            let fwd = integrate(f, z, 0.5 * t, tol, None);
            back.points.iter().rev().chain(fwd.points.iter().skip(1)).copied().collect()
        })
        .collect()
}

fn xy(points: &[[f64; 3]]) -> Vec<[f64; 2]> {
    points.iter().map(|p| [p[1], p[2]]).collect()
}

fn draw_field(svg: &mut Svg, f: &TorusVectorField, orbits: &[Vec<[f64; 3]>], stroke: Option<&str>) {
    for (i, o) in orbits.iter().enumerate() {
        svg.path(&xy(o), stroke.unwrap_or(PALETTE[i % PALETTE.len()]), 1.0);
    }
    for s in &f.singularities {
        let fill = match s.kind {
            SingularityKind::Sink => "#1f3fbf",
            SingularityKind::Source => "#bf1f1f",
            _ => "#000000",
        };
        svg.dot(s.position, 5.0, fill);
    }
}

fn portrait(a: &PortraitArgs, ctx: &Ctx) -> Result<Artifacts, CliError> {
    let (f, tuned) = load_field(&a.field, a.tune, None, a.resolution, a.q_limit)?;
    let orbits = sample_orbits(&f, a.orbits, a.t, ctx.tol(), ctx.seed);
    let mut svg = Svg::new();
    draw_field(&mut svg, &f, &orbits, None);
    let rows = orbits.iter().enumerate().flat_map(|(i, o)| {
        o.iter()
            .map(move |p| vec![i.to_string(), num(p[0]), num(p[1]), num(p[2])])
    });
    let table = csv(&["orbit", "t", "x", "y"], rows);
    let result = json!({
        "orbits": orbits.len(),
        "points": orbits.iter().map(Vec::len).sum::<usize>(),
        "singularities": f.singularities.iter().map(|s| json!({"kind": s.kind, "position": s.position})).collect::<Vec<_>>(),
        "tuned": tuned,
    });
    let art = Artifacts::new(&result)?
        .with_csv("orbits.csv", table)
        .with_file("portrait.svg", svg.finish());
    with_field(art, &f, &tuned)
}

#[derive(Serialize)]
struct CloseSummary<'a> {
    #[serde(flatten)]
    result: &'a crate::twist_closing::ClosingResult,
    loop_x0: f64,
    composition_error: f64,
    tuned: Option<TunedParameter>,
}

fn close(a: &CloseArgs, ctx: &Ctx) -> Result<Artifacts, CliError> {
    let spec = a.field.load()?;
    let untuned = TorusVectorField::from_spec(&spec)?;
    let lp = a.loop_x0.map(TransverseLoop::vertical).unwrap_or_else(|| default_loop(&untuned));
    let (f, tuned) = load_field(&a.field, a.tune, Some(&lp), a.resolution, a.q_limit)?;
    let fam = build_twist_family(&f, &lp, a.half_width, a.profile, a.a_max)?;
    let ind = induced_family(&fam, a.resolution)?;
    let p = a
        .p
        .or_else(|| ind.f0.basins.first().map(|b| b.value.rem_euclid(1.0)))
        .unwrap_or(0.0);
    let res = closing_search(&fam, &ind, p, a.n_targets)?;
    let table = csv(
        &["n", "a_n", "x_n", "q_n", "residual", "jet_distance"],
        res.entries.iter().map(|e| {
            vec![
                e.n.to_string(),
                num(e.a_n),
                num(e.x_n),
                e.q_n.to_string(),
                num(e.closure_residual),
                num(e.approx_cr_distance),
            ]
        }),
    );
    let summary = CloseSummary {
        result: &res,
        loop_x0: lp.x0,
        composition_error: ind.composition_error,
        tuned: tuned.clone(),
    };
    let mut art = Artifacts::new(&summary)?.with_csv("closing.csv", table);
    if a.svg {
        let mut svg = Svg::new();
        let background = sample_orbits(&f, 12, 10.0, ctx.tol(), ctx.seed);
        draw_field(&mut svg, &f, &background, Some("#c8c8c8"));
        svg.path(&[[lp.x0, 0.0], [lp.x0, 1.0]], "#000000", 1.5);
        for (i, e) in res.entries.iter().enumerate() {
            let member = fam.member(e.a_n)?;
            let mut tr = Tracer::new(&member);
            tr.section = Some(&lp);
            tr.record = true;
            tr.capture = false;
            tr.max_crossings = Some(e.q_n as usize);
            let seg = tr.run(lp.point(e.x_n), 1e4 * e.q_n as f64);
            svg.path(&xy(&seg.points), PALETTE[i % PALETTE.len()], 2.0);
        }
        svg.dot(lp.point(p), 6.0, "#000000");
        art = art.with_file("closing.svg", svg.finish());
    }
    with_field(art, &f, &tuned)
}
