use thiserror::Error;

/// Everything that can go wrong between a seed and its spectral table.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("degenerate configuration at index {index:?}: {what}")]
    DegenerateConfiguration { index: Option<i64>, what: String },

    #[error("singular matrix (det = {det:e})")]
    SingularMatrix { det: f64 },

    #[error("invalid N = {n}: need N >= 5 and N != 3s+1")]
    InvalidN { n: usize },

    #[error("no unique canonical lift for N = {n} (N = 3s+1)")]
    NotLiftable { n: usize },

    #[error("ill-conditioned lift: {what} (residual {residual:e})")]
    IllConditioned { what: String, residual: f64 },

    #[error("genericity violated: {0}")]
    GenericityViolation(String),

    #[error("index {index} out of range [{lo}, {hi}]")]
    IndexOutOfRange { index: i64, lo: i64, hi: i64 },

    #[error("Laurent division not exact (residual {residual:e})")]
    NonDivisible { residual: f64 },

    #[error("invalid seed: {0}")]
    InvalidSeed(String),

    #[error("backward extension needs a canonical lift")]
    NotCanonical,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn degenerate(index: impl Into<Option<i64>>, what: impl Into<String>) -> Self {
        Error::DegenerateConfiguration {
            index: index.into(),
            what: what.into(),
        }
    }
}
