use thiserror::Error;

/// Errors raised by the numerical pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("series did not converge within {terms} terms (last term {last_term:e})")]
    NonConvergence { terms: usize, last_term: f64 },

    #[error("branch cut: {what} evaluated at {re}{im:+}i lies on the principal cut")]
    BranchCut {
        what: &'static str,
        re: f64,
        im: f64,
    },

    #[error("non-finite integrand at x = {x}")]
    NonFiniteIntegrand { x: f64 },

    #[error("quadrature needs more than {max_nodes} nodes")]
    QuadratureBudget { max_nodes: usize },

    #[error("negative probability {value:e} for k = {k}; increase series_terms")]
    NegativeProbability { k: usize, value: f64 },

    #[error("moment generating function of N_t diverges at theta = {theta} (t = {t})")]
    DivergentMgf { theta: f64, t: f64 },

    #[error("no sign change of the martingale residual on [{lo}, {hi}]")]
    NoBracket { lo: f64, hi: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
