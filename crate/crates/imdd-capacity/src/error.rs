use crate::capacity::BaaResult;

/// Errors produced by channel construction, numerical routines, and solvers.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("degenerate scale: {0}")]
    DegenerateScale(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("output grid would need {bins} bins, exceeding the cap of {cap}")]
    GridTooLarge { bins: usize, cap: usize },

    #[error("Blahut-Arimoto did not converge within {max_iter} iterations")]
    BaaNotConverged {
        max_iter: usize,
        /// Best iterate reached before giving up.
        best: Box<BaaResult>,
    },

    #[error("root not bracketed in [{lo}, {hi}]")]
    RootNotBracketed { lo: f64, hi: f64 },

    #[error("unsupported regime: {0}")]
    UnsupportedRegime(String),

    #[error("optimization interval is empty: {0}")]
    EmptyInterval(String),

    #[error("matrix is rank deficient (|u_ii| = {diag:.3e} below 1e-12)")]
    RankDeficient { diag: f64 },

    #[error("support-size search exhausted k = {k_max} without a certified optimum")]
    SupportSearchExhausted { k_max: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
