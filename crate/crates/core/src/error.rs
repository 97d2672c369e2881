use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("root is not bracketed: g({lo}) = {g_lo}, g({hi}) = {g_hi}")]
    Bracket { lo: f64, hi: f64, g_lo: f64, g_hi: f64 },

    #[error("{what} did not converge after {iterations} iterations")]
    NonConvergent { what: &'static str, iterations: usize },

    #[error("relay {relay} budget {budget} bits cannot carry a {header} bit header")]
    InfeasibleBudget { relay: usize, budget: f64, header: f64 },

    #[error("relay {relay} has a zero bottleneck budget")]
    DegenerateBudget { relay: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
