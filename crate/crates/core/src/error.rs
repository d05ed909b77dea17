use thiserror::Error;

/// Everything that can go wrong in the analytic pipeline, the oracle or the
/// command-line front end.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("kernel `{kernel}` has a denominator of magnitude {magnitude:.3e} at k = {k} (pole)")]
    PoleProximity {
        kernel: &'static str,
        k: usize,
        magnitude: f64,
    },

    #[error("six-index series truncated at total order {cap}: tail bound {bound:.3e} exceeds tolerance {tol:.3e}")]
    CapTooSmall { cap: usize, bound: f64, tol: f64 },

    #[error("singular {size}x{size} system (condition number {condition:.3e})")]
    SingularMatrix { size: usize, condition: f64 },

    #[error("{solver} did not converge: residual {residual:.3e} after {iterations} iterations")]
    NonConvergence {
        solver: &'static str,
        residual: f64,
        iterations: usize,
    },

    #[error("Hilbert space dimension {dim} exceeds cap {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Process exit code used by the `htc` binary.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParameter { .. } | Error::Config(_) | Error::DimensionCap { .. } => 2,
            Error::InvalidInput(_) => 2,
            Error::Io(_) => 1,
            Error::PoleProximity { .. }
            | Error::CapTooSmall { .. }
            | Error::SingularMatrix { .. }
            | Error::NonConvergence { .. } => 3,
        }
    }

    pub fn is_numerical(&self) -> bool {
        self.exit_code() == 3
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
