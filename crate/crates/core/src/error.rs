use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("target kind mismatch: expected {expected}, found {found}")]
    KindMismatch { expected: String, found: String },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("point is not a member of the target space: {0}")]
    NotInSpace(String),

    #[error("length mismatch: {what} ({left} vs {right})")]
    LengthMismatch {
        what: &'static str,
        left: usize,
        right: usize,
    },

    #[error("all barycenter weights are zero")]
    ZeroWeights,

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("grid or target space of the two maps differ")]
    GridMismatch,

    #[error("solver did not reach tolerance {tolerance:e} within {sweeps} sweeps (last move {residual:e})")]
    NotConverged {
        sweeps: usize,
        residual: f64,
        tolerance: f64,
    },

    #[error("flow step {step} failed: {source}")]
    FlowStep {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("degenerate frequency: H = {height:e} below 1e-14 (map locally constant at the center)")]
    DegenerateFrequency { height: f64 },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("oracle size cap exceeded: {unknowns} unknowns > {cap}")]
    OracleTooLarge { unknowns: usize, cap: usize },

    #[error("config error at `{path}`: {reason}")]
    Config { path: String, reason: String },

    #[error("{stage}: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error("corrupt trace file at line {line}: {reason}")]
    CorruptTrace { line: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(name: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.to_string(),
            reason: reason.into(),
        }
    }

    pub(crate) fn during(stage: impl Into<String>) -> impl FnOnce(Error) -> Error {
        let stage = stage.into();
        move |e| Error::Stage { stage, source: Box::new(e) }
    }

    pub(crate) fn config(path: &str, reason: impl Into<String>) -> Self {
        Error::Config {
            path: path.to_string(),
            reason: reason.into(),
        }
    }
}
