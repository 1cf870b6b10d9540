//! Robust 2-hop neighborhood maintenance.
//!
//! The node keeps every incident edge plus each second-hop edge whose
//! insertion is no earlier than a surviving incident witness edge. Non-
//! incident edges carry a locally assigned stamp: the insertion time of the
//! edge they arrived on (the true time is unknown and unbounded, and the
//! order information is all the pruning rule needs).

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::graph::{Edge, EventKind, NodeId, Round};
use crate::message::{Payload, Received};
use crate::node::{NodeAlgorithm, Outbound, Query, QueryError, QueryResult};

use super::Fault;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct QueueItem {
    edge: Edge,
    kind: EventKind,
    /// True insertion time of the edge as of enqueue; drives the
    /// destination filter when the item is sent.
    stamp: Round,
}

#[derive(Debug, Clone)]
pub struct Robust2Store {
    me: NodeId,
    /// Known edges with their local stamps. Incident edges carry true times.
    known: BTreeMap<Edge, Round>,
    queue: VecDeque<QueueItem>,
    /// Current neighbors with true insertion times of the shared edge.
    incident: BTreeMap<NodeId, Round>,
    consistent: bool,
    fault: Fault,
    /// Twin mode for tests: stamp received edges with their true insertion
    /// times (carried on the wire for instrumentation) instead of the
    /// arrival edge's time.
    ideal_timestamps: bool,
}

impl Robust2Store {
    pub fn new(me: NodeId) -> Self {
        Robust2Store {
            me,
            known: BTreeMap::new(),
            queue: VecDeque::new(),
            incident: BTreeMap::new(),
            consistent: true,
            fault: Fault::None,
            ideal_timestamps: false,
        }
    }

    pub fn with_fault(me: NodeId, fault: Fault) -> Self {
        Robust2Store {
            fault,
            ..Robust2Store::new(me)
        }
    }

    pub fn with_ideal_timestamps(me: NodeId) -> Self {
        Robust2Store {
            ideal_timestamps: true,
            ..Robust2Store::new(me)
        }
    }

    pub fn known_edges(&self) -> BTreeSet<Edge> {
        self.known.keys().copied().collect()
    }

    pub fn local_stamp(&self, e: Edge) -> Option<Round> {
        self.known.get(&e).copied()
    }

    pub fn queue_len(&self) -> usize {
        self.queue.len()
    }

    /// Prunes second-hop edges through the lost neighbor `u`: an edge
    /// `{u,z}` survives only with a witness `{v,z}` still known and no newer
    /// than the edge's stamp.
    fn prune_after_deletion(&mut self, u: NodeId) {
        let doomed: Vec<Edge> = self
            .known
            .iter()
            .filter(|(e, stamp)| {
                if !e.touches(u) || e.touches(self.me) {
                    return false;
                }
                let z = e.other(u);
                let witness = Edge::new(self.me, z).expect("z != me for non-incident edge");
                if !self.known.contains_key(&witness) {
                    return true;
                }
                if self.fault == Fault::SkipStaleRemoval {
                    return false;
                }
                match self.incident.get(&z) {
                    Some(&t_wit) => **stamp < t_wit,
                    None => true,
                }
            })
            .map(|(e, _)| *e)
            .collect();
        for e in doomed {
            self.known.remove(&e);
        }
    }
}

impl NodeAlgorithm for Robust2Store {
    fn on_topology(&mut self, round: Round, deleted: &[NodeId], inserted: &[NodeId]) {
        let mut pending = Vec::new();
        // Remove all deleted incident edges before running any witness
        // filter, so simultaneous deletions cannot vouch for each other.
        for &u in deleted {
            let e = Edge::new(self.me, u).unwrap();
            let stamp = self.incident.remove(&u).unwrap_or(0);
            self.known.remove(&e);
            pending.push(QueueItem {
                edge: e,
                kind: EventKind::Delete,
                stamp,
            });
        }
        for &u in deleted {
            self.prune_after_deletion(u);
        }
        for &u in inserted {
            let e = Edge::new(self.me, u).unwrap();
            self.incident.insert(u, round);
            self.known.insert(e, round);
            pending.push(QueueItem {
                edge: e,
                kind: EventKind::Insert,
                stamp: round,
            });
        }
        self.queue.extend(pending);
    }

    fn select_outgoing(&mut self, _round: Round) -> Outbound {
        let mut out = Outbound::default();
        if let Some(item) = self.queue.pop_front() {
            let payload = Payload::EdgeA {
                edge: item.edge,
                kind: item.kind,
                stamp: item.stamp,
            };
            out.sends = self
                .incident
                .iter()
                .filter(|&(_, &joined)| item.stamp >= joined)
                .map(|(&u, _)| (u, payload.clone()))
                .collect();
        }
        // Emptiness is reported after the dequeue: once the last item is on
        // the wire this round, neighbors hold everything they need.
        out.nonempty_broadcast = !self.queue.is_empty();
        out
    }

    fn on_receive(&mut self, _round: Round, inbox: &[Received]) {
        let mut saw_nonempty = false;
        for msg in inbox {
            if !msg.is_empty {
                saw_nonempty = true;
            }
            let Some(Payload::EdgeA { edge, kind, stamp }) = &msg.payload else {
                continue;
            };
            match kind {
                EventKind::Insert => {
                    let arrived_on = match self.incident.get(&msg.from) {
                        Some(&t) => t,
                        None => continue,
                    };
                    let new_stamp = if self.ideal_timestamps {
                        *stamp
                    } else {
                        arrived_on
                    };
                    self.known
                        .entry(*edge)
                        .and_modify(|t| *t = (*t).max(new_stamp))
                        .or_insert(new_stamp);
                }
                EventKind::Delete => {
                    self.known.remove(edge);
                }
            }
        }
        self.consistent = self.queue.is_empty() && !saw_nonempty;
    }

    fn is_consistent(&self) -> bool {
        self.consistent
    }

    fn query(&self, query: &Query) -> Result<QueryResult, QueryError> {
        let Query::Edge(e) = query else {
            return Err(QueryError::Unsupported);
        };
        if !self.consistent {
            return Ok(QueryResult::Inconsistent);
        }
        Ok(if self.known.contains_key(e) {
            QueryResult::True
        } else {
            QueryResult::False
        })
    }
}
