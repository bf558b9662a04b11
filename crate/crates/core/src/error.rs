use thiserror::Error;

/// Errors produced by the analysis engine.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("elevation angle is undefined for h = 0, r = 0")]
    DegenerateGeometry,

    #[error(
        "quadrature did not converge after {subdivisions} subdivisions \
         (best estimate {estimate:e}, error bound {error_bound:e})"
    )]
    QuadratureNonConvergence {
        /// Best available estimate (norm of the integral for complex integrands).
        estimate: f64,
        error_bound: f64,
        subdivisions: usize,
    },

    #[error("non-physical rate configuration: R_o*N_s/W = {exponent} exceeds 1000 bits/s/Hz")]
    NonPhysicalRate { exponent: f64 },

    #[error("moment recovery order {mu} exceeds the safe cap of {cap}")]
    MomentOrderTooLarge { mu: u32, cap: u32 },

    #[error("moment sequence is numerically inconsistent: {0}")]
    InconsistentMoments(String),

    #[error("reliability must lie strictly inside (0, 1), got {0}")]
    InvalidReliability(f64),

    #[error("search grid is empty")]
    EmptyGrid,

    #[error("optimizer bracket ({lo}, {hi}) is invalid: {reason}")]
    InvalidBracket { lo: f64, hi: f64, reason: String },

    #[error("unknown deployment `{0}` (expected \"umi\" or \"uma\")")]
    UnknownDeployment(String),
}

pub type Result<T> = std::result::Result<T, Error>;
