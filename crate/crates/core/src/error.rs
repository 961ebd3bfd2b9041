use thiserror::Error;

use crate::game::{GameKind, Violation};

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("expected a {expected} game, got a {found} game")]
    KindMismatch { expected: GameKind, found: GameKind },

    #[error("{what} supports at most {limit} agents, instance has {n}")]
    TooLarge {
        what: &'static str,
        n: usize,
        limit: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown edge id {0}")]
    UnknownEdge(usize),

    #[error("allocations index different agent sets ({left} vs {right} agents)")]
    LengthMismatch { left: usize, right: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("raw allocation is zero but the grand coalition is worth {0}")]
    DegenerateNormalization(f64),

    #[error("invalid instance: {}", format_violations(.0))]
    InvalidInstance(Vec<Violation>),

    #[error("probe on edge {edge} with delta {delta}: {source}")]
    Probe {
        edge: usize,
        delta: f64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn format_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}
