use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParam { name: &'static str, reason: String },

    #[error("GARCH spec is nonstationary: gamma_C = {gamma:.6} >= 1")]
    NonStationary { gamma: f64 },

    #[error("A3 violated: long-run variance {sigma_sq:.3e} is not positive at 3 SE")]
    DegenerateVariance { sigma_sq: f64 },

    #[error(
        "no Gauss+Gamma split: |kappa_cu| = {kappa:.6} exceeds the maximal \
         representable {max_kappa:.6} for s_sq = {s_sq:.6}"
    )]
    GaussGammaInfeasible { kappa: f64, max_kappa: f64, s_sq: f64 },

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("T3 band violated at n = {n}: need {lo:.6e} <= sum_I theta^2 <= {hi:.6e}, got {got:.6e}")]
    T3Violated { n: u64, lo: f64, hi: f64, got: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed artifact: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParam {
            name,
            reason: reason.into(),
        }
    }
}
