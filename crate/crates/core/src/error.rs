use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid probability: {0}")]
    InvalidProbability(String),

    #[error("arm {arm} has mean exactly equal to the threshold {tau}")]
    DegenerateArm { arm: usize, tau: f64 },

    #[error("link parameter out of range: {0}")]
    LinkOutOfRange(String),

    #[error("arm index {index} out of range for {arms} arms")]
    IndexOutOfRange { index: usize, arms: usize },

    #[error("an arm cannot duel itself (arm {0})")]
    SelfDuel(usize),

    #[error("all arms lie on one side of the threshold")]
    OneSidedInstance,

    #[error("arm {0} is a boundary arm; its robust duel gap is undefined")]
    BoundaryArm(usize),

    #[error("arm {0} has a zero duel gap")]
    ZeroGap(usize),

    #[error("precondition unmet: {0}")]
    PreconditionUnmet(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("bad number of arms: {0}")]
    BadK(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("level {level} of item {item} outside 1..=12")]
    LevelOutOfRange { item: String, level: i64 },

    #[error("requested {requested} items but only {available} are available")]
    SubsampleTooLarge { requested: usize, available: usize },

    #[error("no comparisons to fit")]
    NoComparisons,

    #[error("non-finite likelihood: {0}")]
    NonFiniteLikelihood(String),

    #[error("duel cap of {0} exceeded")]
    DuelCapExceeded(u64),

    #[error("per-arm counters were not recorded")]
    MissingCounters,

    #[error("unknown algorithm '{0}' (valid: rs, clucb, simplelabel, rankthensearch-borda)")]
    UnknownAlgorithm(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
