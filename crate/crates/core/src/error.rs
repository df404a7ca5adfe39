use thiserror::Error;

use crate::lp::LpError;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to parse network description: {0}")]
    Parse(String),
    #[error("duplicate vertex id `{0}`")]
    DuplicateVertex(String),
    #[error("duplicate edge id `{0}`")]
    DuplicateEdge(String),
    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),
    #[error("unknown edge `{0}`")]
    UnknownEdge(String),
    #[error("edge `{edge}` has negative or non-finite capacity {capacity}")]
    InvalidCapacity { edge: String, capacity: f64 },
    #[error("edge `{0}` is a self-loop")]
    SelfLoop(String),
    #[error("graph is disconnected")]
    Disconnected,
    #[error("invalid escrow configuration: {0}")]
    InvalidConfiguration(String),
    #[error("invalid flow: {0}")]
    InvalidFlow(String),
    #[error("transaction of {amount} from `{sender}` to `{receiver}` is infeasible")]
    Infeasible {
        sender: String,
        receiver: String,
        amount: f64,
    },
    #[error("point is not in the configuration zonotope")]
    NotInZonotope,
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("instance too large for exhaustive enumeration ({0} edges)")]
    TooLarge(usize),
    #[error(transparent)]
    Lp(#[from] LpError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
