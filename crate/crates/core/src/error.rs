use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dataset has no tuples")]
    EmptyDataset,

    #[error("dimensionality must be at least 1")]
    ZeroDimension,

    #[error("tuple `{id}` has {got} values, expected {expected}")]
    DimensionMismatch {
        id: String,
        expected: usize,
        got: usize,
    },

    #[error("duplicate tuple id `{0}`")]
    DuplicateId(String),

    #[error("tuple `{id}` attribute {attr}: value {value} is negative or not finite")]
    InvalidValue { id: String, attr: usize, value: f64 },

    #[error("tuple `{id}` attribute {attr}: value {value} exceeds declared maximum {max}")]
    AboveMaximum {
        id: String,
        attr: usize,
        value: f64,
        max: f64,
    },

    #[error("attribute maxima: {0}")]
    InvalidAttrMax(String),

    #[error("vector dimensions differ: {0} vs {1}")]
    VectorDimension(usize, usize),

    #[error("invalid spread `{0}`: expected none, full, or a number in (0, 1]")]
    InvalidSpread(String),

    #[error("invalid weight polytope: {0}")]
    InvalidPolytope(String),

    #[error("weight region is empty")]
    EmptyRegion,

    #[error("weight region is unbounded; add the normalization constraint sum(w) = 1")]
    UnboundedRegion,

    #[error("dimensionality {0} exceeds the vertex-enumeration limit of {max}", max = crate::MAX_DIM)]
    TooManyDimensions(usize),

    #[error("{path}: row {row}: values out of order ({value} after {previous})")]
    SortOrder {
        path: PathBuf,
        row: usize,
        value: f64,
        previous: f64,
    },

    #[error("{path}: row {row}: {message}")]
    Parse {
        path: PathBuf,
        row: usize,
        message: String,
    },

    #[error("output directory {0} is not empty")]
    DirectoryNotEmpty(PathBuf),

    #[error("inconsistent sources: {0}")]
    InconsistentSources(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
