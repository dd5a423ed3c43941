//! Numerical laboratory for circle dynamics and flows on the torus.

pub mod cfrac;
pub mod cli;
pub mod closest_returns;
pub mod exact;
pub mod circle_map;
pub mod rotation_number;
pub mod wandering;
pub mod torus_flow;
pub mod twist_closing;
