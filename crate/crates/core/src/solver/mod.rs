//! Assembly, sparse solves and the incremental Newton driver.

pub mod analysis;
pub mod linear;
pub mod system;

pub use analysis::{run_analysis, Analysis, ElementFields, SolutionHistory, StepRecord};
pub use linear::{LinearSolver, SparseMatrix};
pub use system::{ElementEntry, GlobalSystem, Structure};
