//! Smooth flows on the two-torus: blow-ups of linear flows, orbit
//! integration, first-return maps and cell classification.

pub mod cells;
pub mod field;
pub mod integrate;
pub mod jet;
pub mod loops;
pub mod returns;

pub use cells::{classify_cells, CellLabel, CellReport, CellType, Label};
pub use field::{
    build_blowup, build_blowup_with_slope, divergence_at, jet_norm_distance, CellKind, CellSpec, FieldSpec,
    Profile, Singularity, SingularityKind, TorusVectorField, TwistTerm,
};
pub use integrate::{integrate, Crossing, OrbitSegment, Outcome, Tracer};
pub use loops::{Deflection, TransverseLoop};
pub use returns::{
    construct_transversal, default_loop, first_return, induced_return_map, induced_return_map_with, tune_blowup, BasinArc,
    ReturnMap, ReturnOptions, ReturnPoint,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FlowError {
    #[error("twist strip meets cell {cell}")]
    TwistMeetsCell { cell: usize },
    #[error("bad cell: {0}")]
    BadCell(String),
    #[error("cells {0} and {1} overlap")]
    OverlappingCells(usize, usize),
    #[error("derivatives of order {r} requested, jets carry {max}")]
    Smoothness { r: usize, max: usize },
    #[error("loop is not transverse (margin {margin:.3e})")]
    NotTransverse { margin: f64 },
    #[error("no transverse loop found: {0}")]
    NoTransversal(String),
    #[error("return map: {0}")]
    Return(String),
    #[error(transparent)]
    Rotation(#[from] crate::rotation_number::RotationError),
    #[error(transparent)]
    Map(#[from] crate::circle_map::CircleMapError),
}

#[cfg(test)]
mod tests;
