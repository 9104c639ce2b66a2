//! Element kernels: the six-field mixed membrane and the companion elastic beam.

pub mod beam;
pub mod mixed;

pub use beam::beam_stiffness;
pub use mixed::{
    check_stability, ElementArrays, FieldRecovery, PointTangent, QuadPoint, StabilityReport,
};
