use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("quadrature did not converge: worst residual {residual:.3e} at {location}")]
    Quadrature { residual: f64, location: String },

    #[error("frequency grid does not resolve the zero-phonon line: spacing {spacing:.3e} µeV, FWHM {fwhm:.3e} µeV")]
    GridResolution { spacing: f64, fwhm: f64 },

    #[error("sideband correlator has not decayed at the window edge (relative magnitude {relative:.3e})")]
    FftWindow { relative: f64 },

    #[error("ODE step size underflow at t = {t:.6e} ns (h = {step:.3e})")]
    StepUnderflow { t: f64, step: f64 },

    #[error("time grid too short: final population is {relative:.3e} of its maximum")]
    GridSpan { relative: f64 },

    #[error("fit did not converge after {iterations} iterations (last deviance {residual:.6e})")]
    FitNonConvergence { iterations: usize, residual: f64 },

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("insufficient peaks: need {needed}, found {found}")]
    InsufficientPeaks { needed: usize, found: usize },

    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for errors caused by the numerical methods rather than by the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Quadrature { .. }
                | Error::GridResolution { .. }
                | Error::FftWindow { .. }
                | Error::StepUnderflow { .. }
                | Error::GridSpan { .. }
                | Error::FitNonConvergence { .. }
        )
    }
}
