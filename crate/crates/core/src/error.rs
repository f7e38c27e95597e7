use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("a belief network needs at least 3 concepts, got {0}")]
    TooFewConcepts(usize),

    #[error("expected {expected} belief weights for {concepts} concepts, got {got}")]
    WeightCount {
        concepts: usize,
        expected: usize,
        got: usize,
    },

    #[error("belief weight {value} at edge {edge} is outside [-1, 1]")]
    WeightOutOfRange { edge: usize, value: f64 },

    #[error("unknown belief edge {edge} (network has {edge_count} edges)")]
    UnknownEdge { edge: usize, edge_count: usize },

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("cannot place {requested} edges among {available} eligible node pairs ({group})")]
    Capacity {
        group: &'static str,
        requested: usize,
        available: usize,
    },

    #[error("invalid population: {0}")]
    InvalidPopulation(String),

    #[error("state enumeration exceeded the cap of {cap} states; the update rule does not close")]
    StateCap { cap: usize },

    #[error("transition from state {from} leads outside the state set")]
    ClosureViolation { from: String },

    #[error("exact rational arithmetic overflowed during state enumeration")]
    Overflow,

    #[error("{0} is not a rational with a small power-of-two denominator")]
    NotRational(f64),

    #[error("state {0} is not in the enumerated state set")]
    UnknownState(String),

    #[error("stationary iteration did not converge after {squarings} squarings")]
    NoConvergence { squarings: usize },

    #[error("edge list parse error on line {line}: {reason}")]
    EdgeListParse { line: usize, reason: String },
}

impl Error {
    pub(crate) fn param(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            reason: reason.into(),
        }
    }
}
