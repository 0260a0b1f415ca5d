use thiserror::Error;

/// Error type shared by all modules.
#[derive(Error, Debug)]
pub enum Error {
    #[error("matrix is singular")]
    SingularMatrix,
    #[error("matrix does not have the required rank")]
    RankDeficient,
    #[error("zero matrix has no rank decomposition")]
    ZeroRank,
    #[error("no orthogonal complement exists (m = k)")]
    NoComplement,
    #[error("input matrix is not canonical/primitive")]
    NotCanonical,
    #[error("matrix admits no Rogers division")]
    NotRogersAdmissible,
    #[error("point is not on the pairing manifold: {0}")]
    NotOnManifold(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("requested tolerance not met: wanted {wanted}, best {achieved} (value {value})")]
    ToleranceNotMet {
        wanted: f64,
        achieved: f64,
        value: f64,
    },
    #[error("config error: {0}")]
    Config(String),
    #[error("statistic failed on ensemble member {index}: {source}")]
    Member {
        index: u64,
        #[source]
        source: Box<Error>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
