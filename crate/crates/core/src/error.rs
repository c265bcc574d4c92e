use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("grid size {0} is not a power of two of at least 16")]
    NotPowerOfTwo(usize),
    #[error("dimension {0} is not supported (expected 1 or 2)")]
    UnsupportedDimension(usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("sqrt(t) = {sqrt_t:.4} exceeds L/8 = {limit:.4}; the box is too small for this time")]
    WraparoundRisk { sqrt_t: f64, limit: f64 },
    #[error("fields live on different grids")]
    SpecMismatch,
    #[error("derivative order {0} exceeds 2")]
    DerivativeOrder(usize),
    #[error("exponential moment diverges: kappa = {kappa} >= 1/(2c) = {limit}")]
    DivergentMoment { kappa: f64, limit: f64 },
    #[error("grid has too few frequencies for a dyadic partition")]
    PartitionInfeasible,
    #[error("block index {index} outside -1..={j_max}")]
    IndexOutOfRange { index: i32, j_max: i32 },
    #[error("time quadrature not converged: relative Richardson gap {gap:.3e}")]
    QuadratureDivergence { gap: f64 },
    #[error("series terms stop decaying at term {term} (ratio {ratio:.3})")]
    NoDecay { term: usize, ratio: f64 },
    #[error("fixed-point iteration stalled after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("contraction horizon {t0:.3e} is below one time step {step:.3e}")]
    HorizonTooSmall { t0: f64, step: f64 },
    #[error("kernel has negative values down to {min:.3e}")]
    EnvelopeViolated { min: f64 },
    #[error("time step too large: h_t * sup|b| = {0:.3}")]
    StepTooLarge(f64),
    #[error("GRR functional is not finite")]
    DivergentF,
    #[error("i/o failure: {0}")]
    Io(String),
    #[error("malformed input: {0}")]
    Parse(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
