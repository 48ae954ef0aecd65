//! Lower level: user-equilibrium assignment by path-based gradient
//! projection with column generation.

mod gp;
mod path;
mod shortest_path;

pub use gp::{AssignmentResult, GpConfig, GpState, IterationRecord, OdPaths, PathSet, UeProblem, UpdateInfo};
pub use path::Path;
pub use shortest_path::shortest_path;

use crate::cost::CostError;
use crate::network::{LinkId, NodeId};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum AssignmentError {
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("destination {destination} is unreachable from origin {origin}")]
    Unreachable { origin: NodeId, destination: NodeId },
    #[error("link {link} has non-finite or non-positive travel time {time}")]
    InvalidTime { link: LinkId, time: f64 },
    #[error("expected {expected} link times, got {found}")]
    TimeCount { expected: usize, found: usize },
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("warm-start path set does not match the demand matrix")]
    WarmStartMismatch,
    #[error(transparent)]
    Cost(#[from] CostError),
}
