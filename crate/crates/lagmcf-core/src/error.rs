//! Crate-wide error type.

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong in the library.
///
/// Validation failures carry a message naming the offending field or
/// parameter; numerical aborts carry enough context to locate the event.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid field: {0}")]
    InvalidField(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// First non-finite value produced by a time step.
    #[error("non-finite value at linear index {index} after step to t = {t:.6e}")]
    Blowup { index: usize, t: f64 },

    /// The angle oscillation grew in one step, which a stable step never does.
    #[error("angle oscillation grew {prev:.6e} -> {new:.6e} in one step at t = {t:.6e}")]
    Instability { prev: f64, new: f64, t: f64 },

    /// Jacobi sweep budget exhausted; should be unreachable for finite input.
    #[error("symmetric eigensolver did not converge after {0} sweeps")]
    EigenNonConvergence(usize),

    /// Requested rescaling window pokes outside the source cell.
    #[error("rescale window exceeds the source cell on axis {axis}")]
    RescaleWindow { axis: usize },

    /// Gradient winding is not an integer multiple of the lattice quantum.
    #[error(
        "component ({i},{j}) slope {value:.6e} is not an integer multiple of {quantum:.6e}"
    )]
    NotALift {
        i: usize,
        j: usize,
        value: f64,
        quantum: f64,
    },

    #[error("field file: {0}")]
    Format(String),

    #[error("csv: {0}")]
    Csv(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
