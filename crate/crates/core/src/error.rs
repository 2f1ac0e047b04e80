use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("sigma_nonpositive: volatility must be > 0, got {0}")]
    SigmaNonpositive(f64),

    #[error("boundary_nonpositive: reflecting boundary must be > 0, got {0}")]
    BoundaryNonpositive(f64),

    #[error("start_below_boundary: initial price {s0} is below the boundary {b}")]
    StartBelowBoundary { s0: f64, b: f64 },

    #[error("negative_rate: {name} must be >= 0, got {value}")]
    NegativeRate { name: &'static str, value: f64 },

    #[error("non_finite: {name} must be finite, got {value}")]
    NonFinite { name: &'static str, value: f64 },

    #[error("invalid_grid: {0}")]
    InvalidGrid(String),

    #[error("invalid_argument: {0}")]
    InvalidArgument(String),

    #[error("invalid_option: {0}")]
    InvalidOption(String),

    #[error("theta_zero_unsupported: the RGBM formula has a 1/theta factor and theta = 0 here")]
    ThetaZeroUnsupported,

    #[error("exponent_out_of_range: log of {what} is {log_value}, beyond the +/-700 clamp")]
    ExponentOutOfRange { what: &'static str, log_value: f64 },
}

impl Error {
    /// Stable machine-readable code, the prefix of every message.
    pub fn code(&self) -> &'static str {
        match self {
            Error::SigmaNonpositive(_) => "sigma_nonpositive",
            Error::BoundaryNonpositive(_) => "boundary_nonpositive",
            Error::StartBelowBoundary { .. } => "start_below_boundary",
            Error::NegativeRate { .. } => "negative_rate",
            Error::NonFinite { .. } => "non_finite",
            Error::InvalidGrid(_) => "invalid_grid",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::InvalidOption(_) => "invalid_option",
            Error::ThetaZeroUnsupported => "theta_zero_unsupported",
            Error::ExponentOutOfRange { .. } => "exponent_out_of_range",
        }
    }

    /// True for errors raised by a pricing formula's domain rather than by
    /// malformed inputs.
    pub fn is_pricing_domain(&self) -> bool {
        matches!(
            self,
            Error::InvalidOption(_) | Error::ThetaZeroUnsupported | Error::ExponentOutOfRange { .. }
        )
    }
}
