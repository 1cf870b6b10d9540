//! The synchronous round loop.
//!
//! Each round: topology changes land and are applied to the global graph,
//! touched nodes get local indications, every node updates its store and
//! selects at most one queue item per incident edge, messages are delivered
//! along edges present after the changes, receivers update their stores, and
//! consistency flags are read. Queries happen between rounds and never
//! communicate.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{
    Edge, EventKind, GraphError, GraphState, Indications, NodeId, Round, TopologyEvent,
};
use crate::message::{default_bandwidth_bits, id_bits, message_bits, Payload, Received, HEADER_BITS};
use crate::metrics::Metrics;
use crate::node::NodeAlgorithm;
use crate::oracle::History;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("round {round}: message {from}->{to} is {bits} bits, budget {budget}")]
    BandwidthViolation {
        round: Round,
        from: NodeId,
        to: NodeId,
        bits: u64,
        budget: u64,
    },
    #[error("round {round}: node {from} sent two items on edge to {to}")]
    DuplicateSend {
        round: Round,
        from: NodeId,
        to: NodeId,
    },
    #[error("stabilization did not complete within {cap} quiet rounds")]
    Timeout { cap: u64 },
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    /// Payload budget per message; defaults to `3*ceil(log2 n) + 8`.
    pub bandwidth_bits: Option<u64>,
    /// Budget for snapshot chunks (naive baseline); defaults to
    /// `ceil(log2 n)` payload bits plus the header.
    pub chunk_bits: Option<u64>,
    pub collect_traces: bool,
    /// Record per-round snapshots for oracle checks.
    pub record_history: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            bandwidth_bits: None,
            chunk_bits: None,
            collect_traces: false,
            record_history: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentMessage {
    pub from: NodeId,
    pub to: NodeId,
    pub payload: Payload,
}

/// What happened in one round, for debugging and JSON-lines trace output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RoundTrace {
    pub round: Round,
    pub events: Vec<TopologyEvent>,
    pub indications: BTreeMap<NodeId, Indications>,
    pub messages: Vec<SentMessage>,
    /// The queue-emptiness indication each node transmitted (materialized
    /// even though the wire encodes `true` by absence).
    pub is_empty: Vec<bool>,
    pub are_neighbors_empty: Vec<bool>,
    pub consistent: Vec<bool>,
}

pub struct Sim<A: NodeAlgorithm> {
    n: usize,
    graph: GraphState,
    nodes: Vec<A>,
    round: Round,
    payload_budget: u64,
    chunk_budget: u64,
    config: SimConfig,
    pub metrics: Metrics,
    history: Option<History>,
    traces: Vec<RoundTrace>,
}

impl<A: NodeAlgorithm> Sim<A> {
    pub fn new(
        n: usize,
        factory: impl FnMut(NodeId) -> A,
        config: SimConfig,
        metrics: Metrics,
    ) -> Self {
        let mut factory = factory;
        let nodes = (0..n as u32).map(|i| factory(NodeId(i))).collect();
        let payload_budget = config.bandwidth_bits.unwrap_or(default_bandwidth_bits(n));
        let chunk_budget = config.chunk_bits.unwrap_or(id_bits(n)) + HEADER_BITS;
        let history = config.record_history.then(|| History::new(n));
        Sim {
            n,
            graph: GraphState::new(n),
            nodes,
            round: 0,
            payload_budget,
            chunk_budget,
            config,
            metrics,
            history,
            traces: Vec::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn round(&self) -> Round {
        self.round
    }

    pub fn graph(&self) -> &GraphState {
        &self.graph
    }

    pub fn node(&self, v: NodeId) -> &A {
        &self.nodes[v.index()]
    }

    pub fn nodes(&self) -> &[A] {
        &self.nodes
    }

    pub fn history(&self) -> Option<&History> {
        self.history.as_ref()
    }

    pub fn traces(&self) -> &[RoundTrace] {
        &self.traces
    }

    pub fn take_traces(&mut self) -> Vec<RoundTrace> {
        std::mem::take(&mut self.traces)
    }

    pub fn all_consistent(&self) -> bool {
        self.nodes.iter().all(|m| m.is_consistent())
    }

    pub fn consistency_flags(&self) -> Vec<bool> {
        self.nodes.iter().map(|m| m.is_consistent()).collect()
    }

    /// Executes one round with the given batch of changes (empty batch for a
    /// quiet round). Returns whether every node ended the round consistent.
    pub fn step(&mut self, batch: &[(Edge, EventKind)]) -> Result<bool, EngineError> {
        self.round += 1;
        let round = self.round;
        let events: Vec<TopologyEvent> = batch
            .iter()
            .map(|&(edge, kind)| TopologyEvent { round, edge, kind })
            .collect();
        let indications = self.graph.apply_events(&events)?;
        if let Some(h) = self.history.as_mut() {
            h.push_round(events.clone())?;
        }

        // First half: local reaction to changes, then item selection.
        let empty = Indications::default();
        for i in 0..self.n {
            let ind = indications.get(&NodeId(i as u32)).unwrap_or(&empty);
            self.nodes[i].on_topology(round, &ind.deleted, &ind.inserted);
        }
        let outbound: Vec<_> = self
            .nodes
            .iter_mut()
            .map(|node| node.select_outgoing(round))
            .collect();

        // Delivery along edges of the post-change graph, receivers keyed in
        // node-id order for determinism.
        let mut neighbors: Vec<Vec<NodeId>> = vec![Vec::new(); self.n];
        for e in self.graph.edges() {
            let (a, b) = e.endpoints();
            neighbors[a.index()].push(b);
            neighbors[b.index()].push(a);
        }

        let mut inboxes: Vec<Vec<Received>> = vec![Vec::new(); self.n];
        let mut messages = 0u64;
        let mut bits = 0u64;
        let mut max_payload_bits = 0u64;
        let mut sent_log = Vec::new();
        let mut is_empty_sent = vec![true; self.n];
        let mut anbe_sent = vec![true; self.n];

        for (i, out) in outbound.iter().enumerate() {
            let from = NodeId(i as u32);
            is_empty_sent[i] = !(out.nonempty_broadcast || !out.nonempty_to.is_empty());
            anbe_sent[i] = !out.neighbors_nonempty_broadcast;

            let mut payload_for: BTreeMap<NodeId, &Payload> = BTreeMap::new();
            for (to, payload) in &out.sends {
                if !self.graph.edge_exists(Edge::new(from, *to).unwrap()) {
                    // Dropped: the carrying edge vanished this round.
                    continue;
                }
                if payload_for.insert(*to, payload).is_some() {
                    return Err(EngineError::DuplicateSend {
                        round,
                        from,
                        to: *to,
                    });
                }
            }

            for &to in &neighbors[i] {
                let payload = payload_for.get(&to).map(|p| (*p).clone());
                let is_empty = !out.nonempty_broadcast && !out.nonempty_to.contains(&to);
                let are_neighbors_empty = !out.neighbors_nonempty_broadcast;
                let mut wire_bits = 0u64;
                if let Some(p) = &payload {
                    let pb = message_bits(p, self.n);
                    let budget = match p {
                        Payload::SnapshotChunk { .. } => self.chunk_budget,
                        _ => self.payload_budget,
                    };
                    if pb > budget {
                        return Err(EngineError::BandwidthViolation {
                            round,
                            from,
                            to,
                            bits: pb,
                            budget,
                        });
                    }
                    max_payload_bits = max_payload_bits.max(pb);
                    wire_bits += pb;
                }
                if !is_empty {
                    wire_bits += 1;
                }
                if !are_neighbors_empty {
                    wire_bits += 1;
                }
                if payload.is_none() && is_empty && are_neighbors_empty {
                    continue; // nothing on the wire: all-quiet is encoded by absence
                }
                messages += 1;
                bits += wire_bits;
                if self.config.collect_traces {
                    if let Some(p) = &payload {
                        sent_log.push(SentMessage {
                            from,
                            to,
                            payload: p.clone(),
                        });
                    }
                }
                inboxes[to.index()].push(Received {
                    from,
                    payload,
                    is_empty,
                    are_neighbors_empty,
                });
            }
        }

        // Second half: receive and settle flags.
        for (i, inbox) in inboxes.iter_mut().enumerate() {
            inbox.sort_by_key(|m| m.from);
            self.nodes[i].on_receive(round, inbox);
        }

        let flags = self.consistency_flags();
        let any_inconsistent = flags.iter().any(|c| !c);
        self.metrics.record_round(
            events.len() as u64,
            any_inconsistent,
            messages,
            bits,
            max_payload_bits,
        );
        if self.config.collect_traces {
            self.traces.push(RoundTrace {
                round,
                events,
                indications,
                messages: sent_log,
                is_empty: is_empty_sent,
                are_neighbors_empty: anbe_sent,
                consistent: flags.clone(),
            });
        }
        Ok(!any_inconsistent)
    }

    /// Runs event-free rounds until every node is consistent, or errors out
    /// after `max_quiet_rounds`. Returns the number of rounds taken.
    pub fn stabilize(&mut self, max_quiet_rounds: u64) -> Result<u64, EngineError> {
        if self.all_consistent() {
            return Ok(0);
        }
        for taken in 1..=max_quiet_rounds {
            if self.step(&[])? {
                return Ok(taken);
            }
        }
        Err(EngineError::Timeout {
            cap: max_quiet_rounds,
        })
    }
}
