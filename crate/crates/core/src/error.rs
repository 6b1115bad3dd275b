use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("multi-index references coefficient {position} but the vector has {len} coefficients")]
    SupportOutOfRange { position: usize, len: usize },

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("insufficient quadrature resolution: need at least {needed} points, got {got}")]
    InsufficientResolution { needed: usize, got: usize },

    #[error("decay exponent {exponent} too small: functional requires exponent > {required}")]
    DomainTooSlowDecay { exponent: f64, required: f64 },

    #[error("functional `{0}` has no separable structure; Fourier coefficients are unavailable")]
    StructureMissing(String),

    #[error("structure error: {0}")]
    Structure(String),

    #[error("input length mismatch: network expects {expected} inputs, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("training diverged at epoch {epoch} (loss = {loss})")]
    Divergence { epoch: usize, loss: f64 },

    #[error("grid point {point} failed: {source}")]
    GridPoint {
        point: String,
        #[source]
        source: Box<Error>,
    },

    #[error("reconstruction has imaginary residue {0:e} (table is not conjugate-symmetric)")]
    ImaginaryResidue(f64),

    #[error("periodic Poisson problem requires zero-mean data, found mode-0 coefficient")]
    ZeroModePresent,

    #[error("point {y} lies outside the grid range [{lo}, {hi}]")]
    OutOfGridRange { y: f64, lo: f64, hi: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Whether the error reflects bad input (configuration) rather than a
    /// numerical or runtime failure.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::InvalidDomain(_)
            | Error::DimensionMismatch { .. }
            | Error::InsufficientResolution { .. }
            | Error::DomainTooSlowDecay { .. }
            | Error::StructureMissing(_)
            | Error::Structure(_)
            | Error::LengthMismatch { .. }
            | Error::ZeroModePresent
            | Error::OutOfGridRange { .. }
            | Error::SupportOutOfRange { .. }
            | Error::InvalidArgument(_) => true,
            Error::GridPoint { source, .. } => source.is_validation(),
            _ => false,
        }
    }
}
