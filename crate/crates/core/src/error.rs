use thiserror::Error;

/// Errors produced across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("feature vector {index} has norm {norm} exceeding bound {bound}")]
    NormBoundViolated { index: usize, norm: f64, bound: f64 },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("private part of the dataset is empty")]
    EmptyPrivateSet,

    #[error("public part of the dataset is empty")]
    EmptyPublicSet,

    #[error("public rows are unlabeled but this method needs labels")]
    UnlabeledPublic,

    #[error("mechanism requires delta > 0")]
    DeltaZero,

    #[error("candidate set is empty")]
    EmptyCandidates,

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("effective cover rank {rank} exceeds cap {max}")]
    RankTooLarge { rank: usize, max: usize },

    #[error("cover with {size} candidates is too large to materialize")]
    CoverTooLarge { size: f64 },

    #[error("instance has no population risk oracle")]
    NoPopulationOracle,

    #[error("query is outside the regime of the formula: {0}")]
    OutOfRegime(String),

    #[error("need at least {needed} distinct x values, found {found}")]
    InsufficientPoints { needed: usize, found: usize },

    #[error("no records to process")]
    EmptyRecords,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported combination: {0}")]
    Unsupported(String),

    #[error("invalid config: {0}")]
    ConfigInvalid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short stable name used in the `status` column of sweep output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::NormBoundViolated { .. } => "NormBoundViolated",
            Error::EmptyDataset => "EmptyDataset",
            Error::EmptyPrivateSet => "EmptyPrivateSet",
            Error::EmptyPublicSet => "EmptyPublicSet",
            Error::UnlabeledPublic => "UnlabeledPublic",
            Error::DeltaZero => "DeltaZero",
            Error::EmptyCandidates => "EmptyCandidates",
            Error::NonFinite(_) => "NonFinite",
            Error::RankTooLarge { .. } => "RankTooLarge",
            Error::CoverTooLarge { .. } => "CoverTooLarge",
            Error::NoPopulationOracle => "NoPopulationOracle",
            Error::OutOfRegime(_) => "OutOfRegime",
            Error::InsufficientPoints { .. } => "InsufficientPoints",
            Error::EmptyRecords => "EmptyRecords",
            Error::InvalidParameter(_) => "InvalidParameter",
            Error::Unsupported(_) => "Unsupported",
            Error::ConfigInvalid(_) => "ConfigInvalid",
            Error::Io(_) => "Io",
            Error::Csv(_) => "Csv",
            Error::Json(_) => "Json",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
