use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("factor list {factors:?} does not multiply to dimension {dim}")]
    FactorMismatch { factors: Vec<usize>, dim: usize },

    #[error("factor index {index} out of range for {count} factors")]
    FactorIndexOutOfRange { index: usize, count: usize },

    #[error("lab index {index} out of range for {count} labs")]
    LabIndexOutOfRange { index: usize, count: usize },

    #[error("matrix has non-finite entries")]
    NonFinite,

    #[error("matrix is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("invalid dimension {0}")]
    InvalidDimension(usize),

    #[error("invalid permutation image {0:?}")]
    InvalidPermutation(Vec<usize>),

    #[error("permutation acts on {perm} elements but the layout has {parties} parties")]
    PermutationSize { perm: usize, parties: usize },

    #[error("party count {0} out of supported range")]
    PartyCount(usize),

    #[error("term index has {found} entries, layout has {expected} factors")]
    TermLength { expected: usize, found: usize },

    #[error("term index {index} exceeds basis size {size} on factor {factor}")]
    TermValue { factor: usize, index: usize, size: usize },

    #[error("process is not valid: {0}")]
    InvalidProcess(String),

    #[error("empty set of labs to keep")]
    EmptyKeepSet,

    #[error("instrument has no elements")]
    EmptyInstrument,

    #[error("instrument elements disagree: {0}")]
    InstrumentMismatch(String),

    #[error("operator is not permutation invariant (deviation {deviation:e})")]
    NotInvariant { deviation: f64 },

    #[error("unsupported sector label `{0}`")]
    UnsupportedLabel(String),

    #[error("{0}")]
    Unsupported(String),

    #[error("{field}: {message}")]
    Format { field: String, message: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
