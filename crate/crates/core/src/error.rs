use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unknown model `{0}`")]
    UnknownModel(String),
    #[error("parameter out of range: {0}")]
    Parameter(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("quadrature did not converge (residual {residual:.3e})")]
    NonConvergence { residual: f64 },
    #[error("not regularly varying in window (fit residual {residual:.3e}, slope {slope:.4})")]
    NotRegularlyVarying { residual: f64, slope: f64 },
    #[error("degenerate tail at x = {x}")]
    DegenerateTail { x: f64 },
    #[error("untrusted frequency cutoff for N = {n}: xi_max = {xi_max:.4e}, tail bound {bound:.3e}")]
    UntrustedCutoff { n: usize, xi_max: f64, bound: f64 },
    #[error("no high-frequency gap found (measured eta = {eta:.3e} at xi = {xi:.4e})")]
    NoGap { eta: f64, xi: f64 },
    #[error("low-frequency envelope violated at every grid point above 1e-4 (first violation at xi = {xi:.4e})")]
    EnvelopeFailure { xi: f64 },
    #[error("infinite relative entropy: reference density vanishes at x = {x} where the other is positive")]
    InfiniteRelativeEntropy { x: f64 },
    #[error("model `{0}` has no derivative; supply one explicitly")]
    MissingDerivative(String),
    #[error("density value {value:.3e} is not positive; cannot take its logarithm")]
    NonPositiveDensity { value: f64 },
}

impl Error {
    /// True for failures of a numerical certificate (as opposed to bad input).
    pub fn is_certification(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence { .. }
                | Error::NotRegularlyVarying { .. }
                | Error::DegenerateTail { .. }
                | Error::UntrustedCutoff { .. }
                | Error::NoGap { .. }
                | Error::EnvelopeFailure { .. }
                | Error::InfiniteRelativeEntropy { .. }
                | Error::NonPositiveDensity { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
