use thiserror::Error;

use crate::pool::Family;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("graph is not strongly connected")]
    NotStronglyConnected,

    #[error("graph generation failed after {attempts} attempts")]
    GenerationFailed { attempts: usize },

    #[error("constraint family {0:?} is not certified convex in its realization")]
    UnsupportedFamily(Family),

    #[error("removal stage {stage} is infeasible; active-set removal requires feasible stages")]
    InfeasibleStage { stage: usize },

    #[error("nodes disagree on the constraint to remove at stage {stage}")]
    RemovalDisagreement { stage: usize },

    #[error("value out of domain: {0}")]
    Domain(String),

    #[error("round {round}, node {node}: {source}")]
    Node {
        round: usize,
        node: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("protocol did not stop within {0} rounds")]
    RoundLimit(usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn at_node(self, round: usize, node: usize) -> Self {
        Error::Node {
            round,
            node,
            source: Box::new(self),
        }
    }
}
