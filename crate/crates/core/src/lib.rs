pub mod cuts;
pub mod cutting_plane;
pub mod equivalence;
pub mod error;
pub mod generators;
pub mod graph;
pub mod heuristic;
pub mod model;
pub mod pipeline;
pub mod solver;

pub use error::{Error, Result};
