use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),

    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: String,
        expected: usize,
        found: usize,
    },

    #[error("alphabet mismatch: only in first {only_first:?}, only in second {only_second:?}")]
    AlphabetMismatch {
        only_first: Vec<String>,
        only_second: Vec<String>,
    },

    #[error("invalid automaton: {0}")]
    InvalidAutomaton(String),

    #[error("invalid UMDP: {0}")]
    InvalidUmdp(String),

    #[error("invalid Hankel block: {0}")]
    InvalidHankel(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("gamma {gamma} is not admissible (certified bound {bound})")]
    InadmissibleGamma { gamma: f64, bound: f64 },

    #[error(
        "cannot certify gamma {gamma}: best contraction gamma*theta = {best_rate} (raise depth)"
    )]
    CannotCertify { gamma: f64, best_rate: f64 },

    #[error("rank overestimated: singular value {index} is {value:e}")]
    RankOverestimated { index: usize, value: f64 },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn dim(what: impl Into<String>, expected: usize, found: usize) -> Self {
        Error::DimensionMismatch {
            what: what.into(),
            expected,
            found,
        }
    }
}
