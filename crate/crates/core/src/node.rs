//! The behavioral contract between the engine and a per-node algorithm.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{NodeId, Round};
use crate::message::{Payload, Received};

/// What a node plans to transmit in the first half of a round.
///
/// `sends` holds at most one queue item per incident edge. Emptiness flags
/// use absence encoding on the wire: the engine materializes `IsEmpty=false`
/// toward every current neighbor when `nonempty_broadcast` is set, toward the
/// listed neighbors for per-queue algorithms, and `AreNeighborsEmpty=false`
/// when `neighbors_nonempty_broadcast` is set.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Outbound {
    pub sends: Vec<(NodeId, Payload)>,
    pub nonempty_broadcast: bool,
    pub nonempty_to: Vec<NodeId>,
    pub neighbors_nonempty_broadcast: bool,
}

/// A query posed to one node at the end of a round. Answering uses only
/// node-local state; no communication happens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Query {
    /// Is this edge in the node's maintained edge set?
    Edge(crate::graph::Edge),
    /// Do these three nodes (including the queried one) form a triangle?
    Triangle([NodeId; 3]),
    /// Does this node set (including the queried one) induce a clique?
    Clique(Vec<NodeId>),
    /// Is this node sequence (starting at the queried node) a cycle?
    Cycle(Vec<NodeId>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QueryResult {
    True,
    False,
    Inconsistent,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum QueryError {
    #[error("query does not include the queried node {node}")]
    NotOwnQuery { node: NodeId },
    #[error("malformed cycle candidate: {reason}")]
    MalformedCycle { reason: String },
    #[error("query kind not supported by this algorithm")]
    Unsupported,
}

/// One per-node algorithm instance driven by the engine's half-round
/// callbacks. Queries must not mutate state or communicate.
pub trait NodeAlgorithm {
    /// Indications for this round's topology changes touching the node.
    /// Deletion indications precede insertion indications.
    fn on_topology(&mut self, round: Round, deleted: &[NodeId], inserted: &[NodeId]);

    /// Dequeue step of the first half-round.
    fn select_outgoing(&mut self, round: Round) -> Outbound;

    /// Second half-round: process received messages (sorted by sender) and
    /// settle the consistency flag for this round.
    fn on_receive(&mut self, round: Round, inbox: &[Received]);

    fn is_consistent(&self) -> bool;

    fn query(&self, query: &Query) -> Result<QueryResult, QueryError>;
}
