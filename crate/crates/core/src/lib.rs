//! Mixed finite elements for two-dimensional consistent couple stress theory.

pub mod basis;
pub mod bench;
pub mod element;
pub mod error;
pub mod material;
pub mod model;
pub mod output;
pub mod solver;

pub use error::{Error, Result};
pub use model::{parse_model, serialize_model, validate_model, Model};
pub use solver::{run_analysis, Analysis, SolutionHistory};
