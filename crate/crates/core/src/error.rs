use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("cutoff {cutoff} too small: truncated mass {deficit:e} exceeds tolerance {tolerance:e}")]
    CutoffTooSmall {
        cutoff: usize,
        deficit: f64,
        tolerance: f64,
    },

    #[error("photon number {n} exceeds cutoff {cutoff}")]
    PhotonNumberAboveCutoff { n: usize, cutoff: usize },

    #[error("click probability is zero: no conditional state can be prepared")]
    ZeroClickProbability,

    #[error(
        "kernel unbounded: s = {s} is not below 1 - 1/eta_h = {max_s} (eta_h = {eta_h}); \
         this s cannot be reconstructed at this homodyne efficiency"
    )]
    UnboundedKernel { s: f64, eta_h: f64, max_s: f64 },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("overflow evaluating {0}")]
    Overflow(&'static str),

    #[error("malformed dataset: {0}")]
    MalformedDataset(String),

    #[error("config invalid: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Errors that signal a violated physical constraint rather than bad input.
    pub fn is_physics_constraint(&self) -> bool {
        matches!(
            self,
            Error::ZeroClickProbability | Error::UnboundedKernel { .. }
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn check_unit_interval(name: &str, value: f64, allow_zero: bool) -> Result<()> {
    let lower_ok = if allow_zero { value >= 0.0 } else { value > 0.0 };
    if value.is_finite() && lower_ok && value <= 1.0 {
        Ok(())
    } else {
        let range = if allow_zero { "[0, 1]" } else { "(0, 1]" };
        Err(Error::InvalidParameter(format!("{name} = {value} outside {range}")))
    }
}

pub(crate) fn check_nonnegative(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} = {value} must be finite and >= 0")))
    }
}
