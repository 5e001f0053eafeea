//! Error type shared across the crate.

use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum WgError {
    /// Mesh file could not be parsed; `line` is 1-based.
    MeshFormat { line: usize, message: String },
    /// Mesh data violates a structural invariant.
    InvalidMesh(String),
    /// A refinement step produced a degenerate child polygon.
    DegenerateChild { cell: usize },
    /// A cell is not star-shaped with respect to its centroid, so the fan
    /// quadrature rule does not apply.
    NotStarShaped { cell: usize },
    /// A local mass matrix failed to factor; indicates basis conditioning loss.
    SingularMassMatrix { cell: usize },
    /// The interior block of a cell failed to factor during condensation.
    SingularInteriorBlock { cell: usize },
    /// The conjugate gradient iteration hit its cap before reaching tolerance.
    SolverDiverged { iterations: usize, residual: f64 },
    /// The fixed-point iteration for a solution-dependent coefficient hit its
    /// cap; carries the history of increments.
    PicardDiverged { iterations: usize, increments: Vec<f64> },
    /// An argument violated a precondition (bad `rho`, missing state, ...).
    InvalidArgument(String),
    /// I/O failure, wrapped as a string to keep the type cloneable.
    Io(String),
}

pub type Result<T> = std::result::Result<T, WgError>;

impl fmt::Display for WgError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WgError::MeshFormat { line, message } => {
                write!(f, "mesh file parse error at line {line}: {message}")
            }
            WgError::InvalidMesh(m) => write!(f, "invalid mesh: {m}"),
            WgError::DegenerateChild { cell } => {
                write!(f, "refinement of cell {cell} produced a degenerate child")
            }
            WgError::NotStarShaped { cell } => {
                write!(f, "cell {cell} not star-shaped w.r.t. centroid")
            }
            WgError::SingularMassMatrix { cell } => {
                write!(f, "singular local mass matrix on cell {cell}")
            }
            WgError::SingularInteriorBlock { cell } => {
                write!(f, "singular interior block on cell {cell}")
            }
            WgError::SolverDiverged { iterations, residual } => write!(
                f,
                "conjugate gradients did not converge in {iterations} iterations \
                 (relative residual {residual:.3e})"
            ),
            WgError::PicardDiverged { iterations, increments } => write!(
                f,
                "fixed-point iteration did not converge in {iterations} iterations \
                 (last increments {:?})",
                &increments[increments.len().saturating_sub(3)..]
            ),
            WgError::InvalidArgument(m) => write!(f, "invalid argument: {m}"),
            WgError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for WgError {}

impl From<std::io::Error> for WgError {
    fn from(e: std::io::Error) -> Self {
        WgError::Io(e.to_string())
    }
}
