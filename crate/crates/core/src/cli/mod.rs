//! The `rotorlab` command line: experiment specs, dispatch and artifacts.

mod output;
mod run;
mod specs;
pub mod svg;

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::cfrac::AlphaHandle;
use crate::torus_flow::{FieldSpec, Profile};
use crate::wandering::Direction;

pub use output::{write_atomic, Artifacts};
pub use specs::{parse_json, read_json, FamilySpec, MapSpec, Source};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{origin}: invalid value at `{field}`{}: {message}", position(*.line, *.column))]
    Schema {
        origin: String,
        field: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Cfrac(#[from] crate::cfrac::CfracError),
    #[error(transparent)]
    Returns(#[from] crate::closest_returns::ReturnsError),
    #[error(transparent)]
    Map(#[from] crate::circle_map::CircleMapError),
    #[error(transparent)]
    Rotation(#[from] crate::rotation_number::RotationError),
    #[error(transparent)]
    Wandering(#[from] crate::wandering::WanderingError),
    #[error(transparent)]
    Flow(#[from] crate::torus_flow::FlowError),
    #[error(transparent)]
    Twist(#[from] crate::twist_closing::TwistError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Schema { .. } | CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

fn position(line: usize, column: usize) -> String {
    if line == 0 {
        String::new()
    } else {
        format!(" (line {line}, column {column})")
    }
}

fn enum_arg<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(Value::String(s.to_string())).map_err(|e| e.to_string())
}

macro_rules! defaults {
    ($($name:ident: $t:ty = $v:expr;)*) => {
        $(fn $name() -> $t { $v })*
    };
}

defaults! {
    d_depth: usize = 12;
    d_im_level: usize = 3;
    d_samples: usize = 1024;
    d_iterations: usize = 100;
    d_rot_n: usize = 1000;
    d_horizon: usize = 1000;
    d_distortion_k: usize = 100;
    d_pairs: usize = 1000;
    d_flow_t: f64 = 10.0;
    d_grid: usize = 256;
    d_budget: f64 = 1000.0;
    d_tube: f64 = 0.02;
    d_orbits: usize = 24;
    d_resolution: usize = 1024;
    d_q_limit: i64 = 1_000_000;
    d_targets: usize = 3;
    d_half_width: f64 = 0.15;
    d_a_max: f64 = 0.5;
}

fn direction_two_sided() -> Direction {
    Direction::TwoSided
}

/// Continued fraction and convergents of a rotation number.
#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CfracArgs {
    /// `p/q`, a decimal, `golden`, `silver` or `[0;a,b,(c,d)]`.
    pub alpha: AlphaHandle,
    #[arg(long, default_value_t = d_depth())]
    #[serde(default = "d_depth")]
    pub depth: usize,
}

/// Intersection multiplicity of the first q_{n+1} iterates of an arc.
#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImCheckArgs {
    pub alpha: AlphaHandle,
    #[arg(long, default_value_t = d_im_level())]
    #[serde(default = "d_im_level")]
    pub n: usize,
    /// Start of T; without it T is a gap arc of the orbit, computed exactly.
    #[arg(long, requires = "t_len")]
    #[serde(default)]
    pub t_start: Option<f64>,
    #[arg(long, requires = "t_start")]
    #[serde(default)]
    pub t_len: Option<f64>,
    /// Which gap arc to use when T is not given.
    #[arg(long, default_value_t = 0)]
    #[serde(default)]
    pub gap: usize,
}

/// Builds a map from its spec and stores it as a table.
#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapBuildArgs {
    /// Map spec (JSON file).
    pub map: Source<MapSpec>,
    /// Points of the graph written to the CSV.
    #[arg(long, default_value_t = d_samples())]
    #[serde(default = "d_samples")]
    pub samples: usize,
}

/// Orbit of a point with the derivative of each iterate.
#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapEvalArgs {
    pub map: Source<MapSpec>,
    #[arg(long, default_value_t = 0.0)]
    #[serde(default)]
    pub x: f64,
    #[arg(long, default_value_t = d_iterations())]
    #[serde(default = "d_iterations")]
    pub n: usize,
}

/// Total variation of log Df.
#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapVarArgs {
    pub map: Source<MapSpec>,
}

/// Rotation number with an error radius.
#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RotnumArgs {
    pub map: Source<MapSpec>,
    #[arg(long, default_value_t = d_rot_n())]
    #[serde(default = "d_rot_n")]
    pub n: usize,
    #[arg(long, default_value_t = 0.0)]
    #[serde(default)]
    pub x0: f64,
}

/// Parameter interval of a family on which the rotation number is p/q.
#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveRhoArgs {
    /// Family spec (JSON file).
    pub family: Source<FamilySpec>,
    #[arg(long)]
    pub p: i64,
    #[arg(long)]
    pub q: i64,
    /// Search window; defaults to the family's.
    #[arg(long, num_args = 2, value_names = ["LO", "HI"])]
    #[serde(default)]
    pub window: Option<Vec<f64>>,
}

/// Disjointness scan of the iterates of an interval.
#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WanderScanArgs {
    pub map: Source<MapSpec>,
    /// Interval start; defaults to the longest plateau or jump gap.
    #[arg(long, requires = "len")]
    #[serde(default)]
    pub start: Option<f64>,
    #[arg(long, requires = "start")]
    #[serde(default)]
    pub len: Option<f64>,
    #[arg(long, value_parser = enum_arg::<Direction>, default_value = "two-sided")]
    #[serde(default = "direction_two_sided")]
    pub direction: Direction,
    #[arg(long, default_value_t = d_horizon())]
    #[serde(default = "d_horizon")]
    pub horizon: usize,
}

/// Sampled distortion of f^k on an interval against its a priori bound.
#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistortionArgs {
    pub map: Source<MapSpec>,
    #[arg(long, requires = "len")]
    #[serde(default)]
    pub start: Option<f64>,
    #[arg(long, requires = "start")]
    #[serde(default)]
    pub len: Option<f64>,
    #[arg(long, default_value_t = d_distortion_k())]
    #[serde(default = "d_distortion_k")]
    pub k: usize,
    #[arg(long, default_value_t = d_pairs())]
    #[serde(default = "d_pairs")]
    pub samples: usize,
}

/// Forward and backward wandering candidates of one map, side by side.
#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThmAArgs {
    pub map: Source<MapSpec>,
    /// Forward candidate `START LEN`; defaults to the longest plateau or gap.
    #[arg(long, num_args = 2, value_names = ["START", "LEN"])]
    #[serde(default)]
    pub forward: Option<Vec<f64>>,
    #[arg(long, num_args = 2, value_names = ["START", "LEN"])]
    #[serde(default)]
    pub backward: Option<Vec<f64>>,
    #[arg(long, default_value_t = d_horizon())]
    #[serde(default = "d_horizon")]
    pub horizon: usize,
}

/// Integrates one orbit of a torus flow.
#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowSimArgs {
    /// Field spec (JSON file).
    pub field: Source<FieldSpec>,
    #[arg(long, num_args = 2, value_names = ["X", "Y"], default_values_t = [0.0, 0.0])]
    #[serde(default)]
    pub start: Vec<f64>,
    /// Signed flow time.
    #[arg(long, allow_negative_numbers = true, default_value_t = d_flow_t())]
    #[serde(default = "d_flow_t")]
    pub t: f64,
    /// Record crossings of the vertical loop at this x.
    #[arg(long)]
    #[serde(default)]
    pub loop_x0: Option<f64>,
}

/// Labels grid points by their limit sets and groups them into cells.
#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellsArgs {
    pub field: Source<FieldSpec>,
    #[arg(long, default_value_t = d_grid())]
    #[serde(default = "d_grid")]
    pub grid: usize,
    /// Flow time allowed per grid point and direction.
    #[arg(long, default_value_t = d_budget())]
    #[serde(default = "d_budget")]
    pub budget: f64,
    /// Tune the base slope to the handle first.
    #[arg(long)]
    #[serde(default)]
    pub tune: bool,
    #[arg(long, default_value_t = d_resolution())]
    #[serde(default = "d_resolution")]
    pub resolution: usize,
    #[arg(long, default_value_t = d_q_limit())]
    #[serde(default = "d_q_limit")]
    pub q_limit: i64,
}

/// Transverse loop through a point.
#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransversalArgs {
    pub field: Source<FieldSpec>,
    #[arg(long, num_args = 2, value_names = ["X", "Y"])]
    pub point: Vec<f64>,
    /// Clearance kept around cells when bending.
    #[arg(long, default_value_t = d_tube())]
    #[serde(default = "d_tube")]
    pub tube: f64,
}

/// SVG phase portrait from seeded random orbits.
#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PortraitArgs {
    pub field: Source<FieldSpec>,
    #[arg(long, default_value_t = d_orbits())]
    #[serde(default = "d_orbits")]
    pub orbits: usize,
    /// Flow time per orbit, split between both directions.
    #[arg(long, default_value_t = d_flow_t())]
    #[serde(default = "d_flow_t")]
    pub t: f64,
    #[arg(long)]
    #[serde(default)]
    pub tune: bool,
    #[arg(long, default_value_t = d_resolution())]
    #[serde(default = "d_resolution")]
    pub resolution: usize,
    #[arg(long, default_value_t = d_q_limit())]
    #[serde(default = "d_q_limit")]
    pub q_limit: i64,
}

/// Closes a recurrent orbit by twisting the field along a loop.
#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CloseArgs {
    pub field: Source<FieldSpec>,
    /// Vertical loop x = LOOP_X0; defaults to the line farthest from the cells.
    #[arg(long)]
    #[serde(default)]
    pub loop_x0: Option<f64>,
    #[arg(long, default_value_t = d_targets())]
    #[serde(default = "d_targets")]
    pub n_targets: usize,
    #[arg(long, default_value_t = d_half_width())]
    #[serde(default = "d_half_width")]
    pub half_width: f64,
    #[arg(long, value_parser = enum_arg::<Profile>, default_value = "poly")]
    #[serde(default)]
    pub profile: Profile,
    #[arg(long, default_value_t = d_a_max())]
    #[serde(default = "d_a_max")]
    pub a_max: f64,
    /// Loop parameter of the point to close; defaults to the plateau value.
    #[arg(long)]
    #[serde(default)]
    pub p: Option<f64>,
    #[arg(long, default_value_t = d_resolution())]
    #[serde(default = "d_resolution")]
    pub resolution: usize,
    #[arg(long)]
    #[serde(default)]
    pub tune: bool,
    #[arg(long, default_value_t = d_q_limit())]
    #[serde(default = "d_q_limit")]
    pub q_limit: i64,
    /// Also draw the closed orbits over a phase portrait.
    #[arg(long)]
    #[serde(default)]
    pub svg: bool,
}

/// Checks that a loop point lies on a closed orbit.
#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyOrbitArgs {
    pub field: Source<FieldSpec>,
    #[arg(long, default_value_t = 0.0)]
    #[serde(default)]
    pub loop_x0: f64,
    /// Loop parameter of the start point.
    #[arg(long)]
    pub y: f64,
    /// Expected number of loop crossings.
    #[arg(long)]
    pub q: usize,
    /// Expected winding in y.
    #[arg(long)]
    #[serde(default)]
    pub p: Option<i64>,
}

macro_rules! commands {
    ($($(#[$m:meta])* $variant:ident($args:ty) = $name:literal,)*) => {
        #[derive(Subcommand, Clone, Debug, PartialEq)]
        pub enum Command {
            $($(#[$m])* #[command(name = $name)] $variant($args),)*
        }

        impl Command {
            pub fn kind(&self) -> &'static str {
                match self {
                    $(Command::$variant(_) => $name,)*
                }
            }

            fn args_value(&self) -> Value {
                match self {
                    $(Command::$variant(a) => serde_json::to_value(a).expect("args serialize"),)*
                }
            }

            fn parse_args(kind: &str, text: &str, origin: &str) -> Result<Self, CliError> {
                match kind {
                    $($name => Ok(Command::$variant(parse_json(text, origin)?)),)*
                    other => Err(schema(origin, "kind", format!("unknown experiment kind `{other}`"))),
                }
            }
        }
    };
}

commands! {
    /// Continued fraction and convergent table
    Cfrac(CfracArgs) = "cfrac",
    /// Intersection multiplicity check for an arc
    ImCheck(ImCheckArgs) = "im-check",
    /// Build a circle map from a spec
    MapBuild(MapBuildArgs) = "map-build",
    /// Iterate a circle map
    MapEval(MapEvalArgs) = "map-eval",
    /// Variation of log Df
    MapVar(MapVarArgs) = "map-var",
    /// Rotation number estimate
    Rotnum(RotnumArgs) = "rotnum",
    /// Solve a family for a rational rotation number
    SolveRho(SolveRhoArgs) = "solve-rho",
    /// Wandering scan of an interval
    WanderScan(WanderScanArgs) = "wander-scan",
    /// Distortion bound check
    DistortionCheck(DistortionArgs) = "distortion-check",
    /// Forward/backward wandering dichotomy experiment
    ThmA(ThmAArgs) = "thm-a",
    /// Integrate one orbit of a torus flow
    FlowSim(FlowSimArgs) = "flow-sim",
    /// Classify the cells of a torus flow
    Cells(CellsArgs) = "cells",
    /// Transverse loop through a point
    Transversal(TransversalArgs) = "transversal",
    /// SVG phase portrait
    Portrait(PortraitArgs) = "portrait",
    /// Close a recurrent orbit by a twist perturbation
    Close(CloseArgs) = "close",
    /// Verify a closed orbit
    VerifyOrbit(VerifyOrbitArgs) = "verify-orbit",
}

const COMMON_KEYS: [&str; 4] = ["kind", "seed", "tol", "out_dir"];

/// One experiment: the command, its parameters, the seed and where results go.
///
/// The JSON form is flat: `{"kind": "rotnum", "map": "m.json", "n": 1000, "seed": 0}`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSpec {
    pub command: Command,
    pub seed: u64,
    /// Integrator tolerance for flow commands.
    pub tol: Option<f64>,
    pub out_dir: Option<String>,
}

#[derive(Deserialize)]
struct Common {
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    tol: Option<f64>,
    #[serde(default)]
    out_dir: Option<String>,
}

fn schema(origin: &str, field: &str, message: String) -> CliError {
    CliError::Schema {
        origin: origin.to_string(),
        field: field.to_string(),
        line: 0,
        column: 0,
        message,
    }
}

impl ExperimentSpec {
    pub fn to_value(&self) -> Value {
        let mut v = self.command.args_value();
        let obj = v.as_object_mut().expect("args are objects");
        obj.insert("kind".into(), Value::from(self.command.kind()));
        obj.insert("seed".into(), Value::from(self.seed));
        obj.insert("tol".into(), serde_json::to_value(self.tol).expect("f64"));
        obj.insert("out_dir".into(), serde_json::to_value(&self.out_dir).expect("string"));
        v
    }

    pub fn to_json(&self) -> String {
        output::to_json(&self.to_value()).expect("spec serializes")
    }

    pub fn parse(text: &str, origin: &str) -> Result<Self, CliError> {
        let v: Value = parse_json(text, origin)?;
        let Some(obj) = v.as_object() else {
            return Err(schema(origin, ".", "an experiment spec is a JSON object".into()));
        };
        let kind = match obj.get("kind") {
            Some(Value::String(k)) => k.clone(),
            Some(_) => return Err(schema(origin, "kind", "expected a string".into())),
            None => return Err(schema(origin, "kind", "missing field `kind`".into())),
        };
        let common: Common = parse_json(text, origin)?;
        let command = Command::parse_args(&kind, text, origin)?;
        let known = command.args_value();
        if let Some(k) = obj
            .keys()
            .find(|k| !COMMON_KEYS.contains(&k.as_str()) && known.get(k.as_str()).is_none())
        {
            return Err(schema(origin, k, format!("unknown field for `{kind}`")));
        }
        Ok(ExperimentSpec {
            command,
            seed: common.seed,
            tol: common.tol,
            out_dir: common.out_dir,
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string())
    }
}

impl Serialize for ExperimentSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_value().serialize(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Parser, Debug)]
#[command(name = "rotorlab", version, about = "Circle maps, rotation numbers and flows on the torus")]
pub struct Cli {
    /// Seed for every randomized sampling step.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Integrator tolerance for flow commands.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Write results, extra files and a manifest here.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// What to print on stdout.
    #[arg(long, global = true, value_enum, default_value = "json")]
    pub format: Format,
    /// Print nothing on success.
    #[arg(long, short, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: TopCommand,
}

#[derive(Subcommand, Debug)]
pub enum TopCommand {
    #[command(flatten)]
    Experiment(Command),
    /// Run an experiment spec (JSON); command-line flags override its fields.
    Run { spec: PathBuf },
}

/// What one run produced.
pub struct Outcome {
    pub artifacts: Artifacts,
    pub written: Vec<PathBuf>,
}

/// Runs a spec, writing artifacts when it names an output directory.
pub fn run(spec: &ExperimentSpec) -> Result<Outcome, CliError> {
    let start = Instant::now();
    let ctx = run::Ctx {
        seed: spec.seed,
        tol: spec.tol,
    };
    let artifacts = run::execute(&spec.command, &ctx)?;
    let written = match &spec.out_dir {
        Some(dir) => output::persist(
            Path::new(dir),
            spec.command.kind(),
            &artifacts,
            &spec.to_value(),
            spec.seed,
            start.elapsed().as_secs_f64(),
        )?,
        None => Vec::new(),
    };
    Ok(Outcome { artifacts, written })
}

fn init_threads() {
    if let Some(n) = std::env::var("ROTORLAB_THREADS").ok().and_then(|s| s.parse::<usize>().ok()) {
        // a second initialization in the same process is harmless
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

fn spec_from_cli(cli: Cli) -> Result<(ExperimentSpec, Format, bool), CliError> {
    let mut spec = match cli.command {
        TopCommand::Experiment(command) => ExperimentSpec {
            command,
            seed: 0,
            tol: None,
            out_dir: None,
        },
        TopCommand::Run { spec } => ExperimentSpec::load(&spec)?,
    };
    if let Some(s) = cli.seed {
        spec.seed = s;
    }
    if cli.tol.is_some() {
        spec.tol = cli.tol;
    }
    if let Some(d) = cli.out_dir {
        spec.out_dir = Some(d.display().to_string());
    }
    if let Some(t) = spec.tol {
        if !(t > 0.0) {
            return Err(CliError::Usage(format!("tolerance must be positive, got {t}")));
        }
    }
    Ok((spec, cli.format, cli.quiet))
}

/// Entry point of the binary; returns the process exit status.
pub fn main_entry() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    init_threads();
    let result = spec_from_cli(cli).and_then(|(spec, format, quiet)| {
        let out = run(&spec)?;
        if !quiet {
            match (format, &out.artifacts.csv) {
                (Format::Csv, Some(csv)) => print!("{csv}"),
                _ => print!("{}", output::to_json(&out.artifacts.result)?),
            }
            for p in &out.written {
                eprintln!("wrote {}", p.display());
            }
        }
        Ok(())
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
