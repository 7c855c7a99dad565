use thiserror::Error;

/// Errors raised anywhere in the selection pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dataset: {0}")]
    InvalidData(String),

    #[error("invalid split plan: {0}")]
    InvalidPlan(String),

    #[error("stratification failed: {0}")]
    Stratification(String),

    #[error("invalid weight: {0}")]
    InvalidWeight(String),

    #[error("invalid variance: sigma^2 = {0} must be positive")]
    InvalidVariance(f64),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("insufficient local data: {found} rows in region, at least {required} required")]
    InsufficientLocalData { found: usize, required: usize },

    #[error("singular design: rank {rank} < {columns} columns")]
    SingularDesign { rank: usize, columns: usize },

    #[error("value {value} outside domain [{lo}, {hi}]")]
    Domain { value: f64, lo: f64, hi: f64 },

    #[error("degenerate design: {0}")]
    DegenerateDesign(String),

    #[error("coordinate descent did not converge in {iterations} sweeps (duality gap {duality_gap:e})")]
    Convergence { iterations: usize, duality_gap: f64 },

    #[error("test split has zero total weight")]
    ZeroWeightSplit,

    #[error("{skipped} of {total} splits skipped for zero weight (limit is half)")]
    ExcessiveSkips { skipped: usize, total: usize },

    #[error("candidate {id} ({name}) failed: {source}")]
    Candidate {
        id: usize,
        name: String,
        #[source]
        source: Box<Error>,
    },

    #[error("replication {index} failed: {source}")]
    Replication {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("ingestion error: {0}")]
    Ingestion(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn candidate(id: usize, name: &str, source: Error) -> Self {
        Error::Candidate {
            id,
            name: name.to_string(),
            source: Box::new(source),
        }
    }

    /// The innermost cause, skipping candidate/replication wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Candidate { source, .. } | Error::Replication { source, .. } => source.root(),
            other => other,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
