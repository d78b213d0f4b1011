use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("quadrature did not converge: estimate {estimate:e}, error bound {error_bound:e}")]
    Quadrature { estimate: f64, error_bound: f64 },

    #[error("min/mean-absolute-difference identity violated by {0:e}")]
    IdentityViolation(f64),

    #[error("sampler-only model has no analytic density: {0}")]
    SamplerOnly(String),

    #[error("calibration did not converge after {iterations} iterations (relative error {relative_error:e})")]
    Calibration { iterations: usize, relative_error: f64 },

    #[error("invalid q-swap plan: {0}")]
    InvalidPlan(String),

    #[error("unsupported lattice: {0}")]
    UnsupportedLattice(String),

    #[error("family does not bracket spanning probability 1/2: p({lo}) = {p_lo}, p({hi}) = {p_hi}")]
    NonBracketing {
        lo: f64,
        hi: f64,
        p_lo: f64,
        p_hi: f64,
    },
}
