use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid model: {0}")]
    Model(String),

    #[error("singular Jacobian (det = {det:.3e}) at parent point ({xi:.4}, {eta:.4})")]
    SingularJacobian { det: f64, xi: f64, eta: f64 },

    #[error("singular material: {0}")]
    SingularMaterial(String),

    #[error("material failure at element {element}, point {point}: {message}")]
    MaterialFailure {
        element: usize,
        point: usize,
        message: String,
    },

    #[error("element {element}: {matrix} is singular or ill-conditioned (condition number {condition:.3e})")]
    SingularElementMatrix {
        element: usize,
        matrix: &'static str,
        condition: f64,
    },

    #[error("stability violated: {0}")]
    Stability(String),

    #[error("zero-length beam element {0}")]
    ZeroLengthBeam(usize),

    #[error("singular global stiffness: zero pivot at equation {equation}")]
    SingularSystem { equation: usize },

    #[error("step {step} failed to converge after {iterations} iterations (residual {residual:.3e}){note}")]
    StepFailure {
        step: usize,
        iterations: usize,
        residual: f64,
        note: &'static str,
    },

    #[error("evaluation error: {0}")]
    Evaluation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn model(msg: impl Into<String>) -> Self {
        Error::Model(msg.into())
    }

    /// Attaches an element id to errors raised inside element kernels.
    pub fn at_element(self, id: usize) -> Self {
        match self {
            Error::MaterialFailure { point, message, .. } => Error::MaterialFailure {
                element: id,
                point,
                message,
            },
            Error::SingularElementMatrix {
                matrix, condition, ..
            } => Error::SingularElementMatrix {
                element: id,
                matrix,
                condition,
            },
            Error::ZeroLengthBeam(_) => Error::ZeroLengthBeam(id),
            Error::SingularJacobian { det, xi, eta } => {
                Error::model(format!("element {id}: singular Jacobian (det = {det:.3e}) at ({xi:.4}, {eta:.4})"))
            }
            other => other,
        }
    }
}
