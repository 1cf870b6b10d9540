//! Per-node algorithms driven by the engine's half-round callbacks.
//!
//! Each store keeps the node-local part of the distributed structure: a set
//! of known edges (or paths), a FIFO of pending items to broadcast under the
//! one-item-per-round budget, and a consistency flag that gates queries.

pub mod naive2hop;
pub mod robust2hop;
pub mod robust3hop;
pub mod triangle;

pub use naive2hop::Naive2Store;
pub use robust2hop::Robust2Store;
pub use robust3hop::Robust3Store;
pub use triangle::TriangleStore;

/// Test-only behavior switches used by the fault-injection harness to prove
/// the regression tests have teeth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Fault {
    #[default]
    None,
    /// Skip the timestamp condition when pruning second-hop edges after an
    /// incident deletion (keeps edges a correct node would forget).
    SkipStaleRemoval,
}
