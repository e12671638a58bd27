use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed header: {0}")]
    MalformedHeader(String),

    #[error("row {row}: expected {expected} vector entries, found {found}")]
    DimensionMismatch { row: usize, expected: usize, found: usize },

    #[error("row {row}: non-finite value in column {column}")]
    NonFiniteValue { row: usize, column: usize },

    #[error("row {row}: {message}")]
    MalformedRow { row: usize, message: String },

    #[error("duplicate record_id {0}")]
    DuplicateRecordId(u64),

    #[error("group {group_id} spans classes {first} and {second}")]
    GroupSpansClasses { group_id: u64, first: u32, second: u32 },

    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),

    #[error("invalid episode config: {0}")]
    InvalidEpisodeConfig(String),

    #[error("class {class} has {available} groups, episode needs {required}")]
    InsufficientGroups {
        class: u32,
        available: usize,
        required: usize,
    },

    #[error("n_way {n_way} exceeds the {classes} classes in the dataset")]
    TooManyWays { n_way: usize, classes: usize },

    #[error("label {label} out of range for {n_way} classes")]
    LabelOutOfRange { label: usize, n_way: usize },

    #[error("class {0} has no support samples")]
    EmptyClass(usize),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("non-finite input vector")]
    NonFiniteInput,

    #[error("invalid solver config: {0}")]
    InvalidSolver(String),

    #[error("objective became non-finite at iteration {iteration}")]
    NonFiniteLoss { iteration: usize },

    #[error("k = {k} exceeds neighbor memory of {memory}")]
    KTooLarge { k: usize, memory: usize },

    #[error("class {0} is absent from the ground truth")]
    ClassAbsent(usize),

    #[error("class {0} has no negatives, AUROC undefined")]
    NoNegatives(usize),

    #[error("cannot aggregate an empty result list")]
    EmptyResults,

    #[error("config error: {0}")]
    Config(String),

    #[error("episode {index}: {source}")]
    Episode {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
