//! JSON inputs: circle-map specs, family specs and references to them.

use std::fmt;
use std::marker::PhantomData;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use serde::de::{self, DeserializeOwned, MapAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{Map, Value};

use super::CliError;
use crate::cfrac::AlphaHandle;
use crate::circle_map::{
    build_cherry_return, build_denjoy, build_flat_spot, build_jump_return, build_piecewise_affine, build_rotation_handle,
    CircleMap, GapWeights, Homeo, MonotoneFamily, OrbitGapSpec, PiecewiseMonotoneCircleMap,
};
use crate::rotation_number::build_flat_spot_with_rotation;
use crate::torus_flow::{default_loop, induced_return_map, FieldSpec, TorusVectorField, TransverseLoop};

/// Circle maps the builders can produce.
///
/// On the wire the variant is a `"kind"` key. The derive below is the
/// externally tagged form, which keeps field paths intact when decoding.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(remote = "Self", rename_all = "snake_case")]
pub enum MapSpec {
    Rotation {
        alpha: AlphaHandle,
    },
    FlatSpot {
        omega: f64,
        width: f64,
        b: f64,
    },
    /// Flat spot with its plateau value tuned to the rotation number `alpha`.
    FlatSpotTuned {
        alpha: AlphaHandle,
        width: f64,
        b: f64,
        #[serde(default = "default_q_limit")]
        q_limit: i64,
    },
    Denjoy {
        alpha: AlphaHandle,
        weights: GapWeights,
        #[serde(default)]
        seed: f64,
        #[serde(default)]
        truncation: Option<i64>,
    },
    CherryReturn {
        alpha: AlphaHandle,
        plateaus: Vec<OrbitGapSpec>,
        #[serde(default)]
        truncation: Option<i64>,
    },
    JumpReturn {
        alpha: AlphaHandle,
        jumps: Vec<OrbitGapSpec>,
        #[serde(default)]
        truncation: Option<i64>,
    },
    PiecewiseAffine {
        knots: Vec<(f64, f64)>,
    },
    Inverse {
        of: Box<MapSpec>,
    },
    /// First-return map of a flow on a vertical loop.
    ReturnMap {
        field: FieldSpec,
        #[serde(default)]
        loop_x0: Option<f64>,
        #[serde(default = "default_resolution")]
        resolution: usize,
    },
    /// A stored table as written by `map-build`.
    Table {
        map: PiecewiseMonotoneCircleMap,
    },
}

impl Serialize for MapSpec {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::Error;
        let v = MapSpec::serialize(self, serde_json::value::Serializer).map_err(S::Error::custom)?;
        let Value::Object(outer) = v else {
            return Err(S::Error::custom("map spec is not an object"));
        };
        let (kind, body) = outer.into_iter().next().ok_or_else(|| S::Error::custom("empty map spec"))?;
        let mut obj = Map::new();
        obj.insert("kind".into(), Value::String(kind));
        if let Value::Object(fields) = body {
            obj.extend(fields);
        }
        Value::Object(obj).serialize(s)
    }
}

impl<'de> Deserialize<'de> for MapSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let mut v = Value::deserialize(d)?;
        let obj = v.as_object_mut().ok_or_else(|| D::Error::custom("expected a map spec object"))?;
        let kind = match obj.remove("kind") {
            Some(Value::String(k)) => k,
            Some(_) => return Err(D::Error::custom(mark_path("kind", "expected a string"))),
            None => return Err(D::Error::missing_field("kind")),
        };
        let mut outer = Map::new();
        outer.insert(kind.clone(), v);
        let mut track = serde_path_to_error::Track::new();
        let de = serde_path_to_error::Deserializer::new(Value::Object(outer), &mut track);
        MapSpec::deserialize(de).map_err(|e| {
            let path = track.path().to_string();
            let path = path.strip_prefix(kind.as_str()).unwrap_or(&path);
            let path = path.strip_prefix('.').unwrap_or(path);
            let (path, msg) = unmark_path(path, &e.to_string());
            D::Error::custom(mark_path(&path, &msg))
        })
    }
}

// errors raised inside a buffered value carry their own path between two
// separators, to be joined onto the path of the enclosing field
const PATH_MARK: char = '\u{1f}';

fn mark_path(path: &str, msg: &str) -> String {
    if path.is_empty() {
        msg.to_string()
    } else {
        format!("{PATH_MARK}{path}{PATH_MARK}{msg}")
    }
}

/// Joins a marked inner path onto `outer` and returns the bare message.
fn unmark_path(outer: &str, msg: &str) -> (String, String) {
    let outer = if outer == "." { "" } else { outer };
    let join = |inner: &str| match (outer.is_empty(), inner.starts_with('[')) {
        (true, _) => inner.to_string(),
        (false, true) => format!("{outer}{inner}"),
        (false, false) => format!("{outer}.{inner}"),
    };
    match msg.strip_prefix(PATH_MARK).and_then(|m| m.split_once(PATH_MARK)) {
        Some((inner, rest)) => (join(inner), rest.to_string()),
        None => (outer.to_string(), msg.to_string()),
    }
}

fn default_q_limit() -> i64 {
    2000
}

fn default_resolution() -> usize {
    1024
}

impl MapSpec {
    pub fn build(&self) -> Result<PiecewiseMonotoneCircleMap, CliError> {
        Ok(match self {
            MapSpec::Rotation { alpha } => build_rotation_handle(alpha),
            MapSpec::FlatSpot { omega, width, b } => build_flat_spot(*omega, *width, *b)?,
            MapSpec::FlatSpotTuned { alpha, width, b, q_limit } => {
                build_flat_spot_with_rotation(alpha, *width, *b, *q_limit)?
            }
            MapSpec::Denjoy {
                alpha,
                weights,
                seed,
                truncation,
            } => build_denjoy(alpha, *weights, *seed, *truncation)?,
            MapSpec::CherryReturn {
                alpha,
                plateaus,
                truncation,
            } => build_cherry_return(alpha, plateaus, *truncation)?,
            MapSpec::JumpReturn { alpha, jumps, truncation } => build_jump_return(alpha, jumps, *truncation)?,
            MapSpec::PiecewiseAffine { knots } => build_piecewise_affine(knots)?,
            MapSpec::Inverse { of } => of.build()?.inverse()?,
            MapSpec::ReturnMap {
                field,
                loop_x0,
                resolution,
            } => {
                let f = TorusVectorField::from_spec(field)?;
                let lp = loop_x0.map(TransverseLoop::vertical).unwrap_or_else(|| default_loop(&f));
                induced_return_map(&f, &lp, *resolution)?.map
            }
            MapSpec::Table { map } => map.clone(),
        })
    }
}

/// `f_ε = h_ε ∘ f_0` over a parameter window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilySpec {
    pub base: Source<MapSpec>,
    #[serde(default = "default_homeo")]
    pub homeo: Homeo,
    pub window: (f64, f64),
    /// Point where the family is strictly increasing in ε.
    #[serde(default)]
    pub point: f64,
}

fn default_homeo() -> Homeo {
    Homeo::Rotation
}

impl FamilySpec {
    pub fn build(&self) -> Result<MonotoneFamily, CliError> {
        let base: Arc<dyn CircleMap> = Arc::new(self.base.load()?.build()?);
        Ok(MonotoneFamily::new(base, self.homeo, self.window, self.point)?)
    }
}

/// Either a path to a JSON file or the value itself.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Source<T> {
    Path(String),
    Inline(T),
}

// by hand so that errors inside an inline value keep their message
impl<'de, T: Deserialize<'de>> Deserialize<'de> for Source<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V<T>(PhantomData<T>);

        impl<'de, T: Deserialize<'de>> Visitor<'de> for V<T> {
            type Value = Source<T>;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a file path or an inline object")
            }

            fn visit_str<E: de::Error>(self, s: &str) -> Result<Self::Value, E> {
                Ok(Source::Path(s.to_string()))
            }

            fn visit_map<A: MapAccess<'de>>(self, map: A) -> Result<Self::Value, A::Error> {
                T::deserialize(de::value::MapAccessDeserializer::new(map)).map(Source::Inline)
            }
        }

        d.deserialize_any(V(PhantomData))
    }
}

impl<T> FromStr for Source<T> {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(Source::Path(s.to_string()))
    }
}

impl<T: DeserializeOwned + Clone> Source<T> {
    pub fn load(&self) -> Result<T, CliError> {
        match self {
            Source::Inline(v) => Ok(v.clone()),
            Source::Path(p) => read_json(Path::new(p)),
        }
    }
}

/// Reads and decodes a JSON file, reporting the path of the offending field.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    parse_json(&text, &path.display().to_string())
}

pub fn parse_json<T: DeserializeOwned>(text: &str, origin: &str) -> Result<T, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        let inner = e.into_inner();
        let (line, column) = (inner.line(), inner.column());
        let text = inner.to_string();
        let message = text.strip_suffix(&format!(" at line {line} column {column}")).unwrap_or(&text);
        let (field, message) = unmark_path(&field, message);
        let field = if field.is_empty() { ".".to_string() } else { field };
        CliError::Schema {
            origin: origin.to_string(),
            field,
            line,
            column,
            message,
        }
    })
}
