//! Synchronous round-based simulator and per-node data structures for
//! subgraph listing in highly dynamic networks.
//!
//! A network of `n` nodes starts empty; every round an arbitrary batch of
//! edge insertions and deletions lands, each node reacts locally, sends at
//! most one queued item per incident edge (logarithmic-size messages), reads
//! what it received, and can then be queried without further communication.
//! A node either answers a query or declares itself inconsistent; the cost
//! measure is the number of rounds with at least one inconsistent node
//! divided by the number of topology changes (max over prefixes).
//!
//! The crate provides:
//!
//! - [`graph`]: the evolving edge set with per-edge insertion times.
//! - [`oracle`]: brute-force reference computations (hop neighborhoods,
//!   robust neighborhoods, temporal patterns, triangle/clique/cycle
//!   enumeration) used by tests and the verifier.
//! - [`engine`]: the two-half-round simulation loop, bandwidth accounting,
//!   and metrics.
//! - [`algo`]: the four per-node algorithms (robust 2-hop, triangle/clique,
//!   robust 3-hop with path sets, naive 2-hop baseline).
//! - [`adversary`]: scenario generators, including the stress constructions
//!   that separate the baseline from the robust algorithms.
//! - [`runner`] + [`verify`]: orchestration with optional per-round oracle
//!   checking, as used by the CLI.

pub mod adversary;
pub mod algo;
pub mod engine;
pub mod graph;
pub mod message;
pub mod metrics;
pub mod node;
pub mod oracle;
pub mod runner;
pub mod verify;

pub use graph::{edge, Edge, EventKind, GraphError, GraphState, NodeId, Round, TopologyEvent};
pub use node::{Query, QueryError, QueryResult};
