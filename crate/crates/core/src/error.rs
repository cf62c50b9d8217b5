use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("site {0:?} lies outside the window")]
    OutsideWindow(Vec<i64>),

    #[error("site index {0} out of range")]
    SiteIndex(usize),

    #[error("geometry mismatch: {0}")]
    GeometryMismatch(String),

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("probe time {probe} exceeds the stream horizon {horizon}")]
    ProbeBeyondHorizon { probe: f64, horizon: f64 },

    #[error("light-cone violation at t={time}: infection reached site {site:?} in the outer shell")]
    LightCone { time: f64, site: Vec<i64> },

    #[error("state space of {states} states exceeds the cap of {cap}")]
    StateCap { states: usize, cap: usize },

    #[error("operation requires a {expected} generator")]
    FlavorMismatch { expected: &'static str },

    #[error("stationary solve did not converge (residual {residual:e})")]
    NonConvergence { residual: f64 },

    #[error("uniformization truncation budget exceeded (tail bound {bound:e})")]
    TruncationBudget { bound: f64 },

    #[error("eigensolver failed: {0}")]
    Eigensolve(String),

    #[error("not enough usable points for a fit: {usable} < {required}")]
    InsufficientPoints { usable: usize, required: usize },

    #[error("too few surviving replicas: {survivors} < {required}")]
    TooFewSurvivors { survivors: usize, required: usize },

    #[error("replica {replica}: {source}")]
    Replica {
        replica: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn in_replica(self, replica: usize) -> Self {
        match self {
            e @ Error::Replica { .. } => e,
            e => Error::Replica {
                replica,
                source: Box::new(e),
            },
        }
    }
}
