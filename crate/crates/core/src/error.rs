use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("dimension mismatch{}: {msg}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    DimensionMismatch { line: Option<usize>, msg: String },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("{name} out of range: {msg}")]
    OutOfRange { name: &'static str, msg: String },

    #[error("invalid algorithm spec: {0}")]
    InvalidAlgorithm(String),

    #[error("replay accepted no records; the estimate is undefined")]
    NoAcceptedRecords,

    #[error("dataset was not logged by a uniform policy (pass force to override)")]
    NonUniformLogging,

    #[error("every permutation accepted zero records")]
    AllPermutationsEmpty,

    #[error("every bootstrap replicate accepted zero records")]
    AllReplicatesEmpty,

    #[error("bootstrap distribution is degenerate (zero spread or fewer than two replicates)")]
    DegenerateDistribution,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
