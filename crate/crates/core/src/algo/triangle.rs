//! Triangle and k-clique membership listing.
//!
//! Extends the robust 2-hop structure with a closing pattern: when a node
//! sees that a received second-hop edge is newer than both of two incident
//! edges, the third corner of that triangle would miss the oldest edge, so
//! the node unicasts it over. Closing-pattern edges are stamped strictly
//! below both incident times, which keeps the two patterns disjoint.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::graph::{Edge, EventKind, NodeId, Round};
use crate::message::{Payload, Received};
use crate::node::{NodeAlgorithm, Outbound, Query, QueryError, QueryResult};

use super::Fault;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Item {
    /// Own incident change, broadcast under the destination filter.
    EdgeChange {
        edge: Edge,
        kind: EventKind,
        stamp: Round,
    },
    /// Closing-pattern unicast: send `edge` to `to`.
    Closing { edge: Edge, to: NodeId },
}

#[derive(Debug, Clone)]
pub struct TriangleStore {
    me: NodeId,
    known: BTreeMap<Edge, Round>,
    queue: VecDeque<Item>,
    incident: BTreeMap<NodeId, Round>,
    consistent: bool,
    fault: Fault,
}

impl TriangleStore {
    pub fn new(me: NodeId) -> Self {
        TriangleStore {
            me,
            known: BTreeMap::new(),
            queue: VecDeque::new(),
            incident: BTreeMap::new(),
            consistent: true,
            fault: Fault::None,
        }
    }

    pub fn with_fault(me: NodeId, fault: Fault) -> Self {
        TriangleStore {
            fault,
            ..TriangleStore::new(me)
        }
    }

    pub fn known_edges(&self) -> BTreeSet<Edge> {
        self.known.keys().copied().collect()
    }

    pub fn local_stamp(&self, e: Edge) -> Option<Round> {
        self.known.get(&e).copied()
    }

    pub fn incident_time(&self, u: NodeId) -> Option<Round> {
        self.incident.get(&u).copied()
    }

    fn prune_after_deletion(&mut self, u: NodeId) {
        let doomed: Vec<Edge> = self
            .known
            .iter()
            .filter(|(e, stamp)| {
                if !e.touches(u) || e.touches(self.me) {
                    return false;
                }
                let z = e.other(u);
                let witness = Edge::new(self.me, z).expect("non-incident edge");
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

    fn edges_known(&self, nodes: &[NodeId]) -> bool {
        nodes.iter().enumerate().all(|(i, &a)| {
            nodes[i + 1..].iter().all(|&b| {
                Edge::new(a, b)
                    .map(|e| self.known.contains_key(&e))
                    .unwrap_or(false)
            })
        })
    }
}

impl NodeAlgorithm for TriangleStore {
    fn on_topology(&mut self, round: Round, deleted: &[NodeId], inserted: &[NodeId]) {
        let mut pending = Vec::new();
        for &u in deleted {
            let e = Edge::new(self.me, u).unwrap();
            let stamp = self.incident.remove(&u).unwrap_or(0);
            self.known.remove(&e);
            pending.push(Item::EdgeChange {
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
            pending.push(Item::EdgeChange {
                edge: e,
                kind: EventKind::Insert,
                stamp: round,
            });
        }
        self.queue.extend(pending);
    }

    fn select_outgoing(&mut self, _round: Round) -> Outbound {
        let mut out = Outbound::default();
        // Emptiness reflects the queue at the start of the communication
        // step: the closing pattern needs one extra relay round, so the
        // round in which the last broadcast item leaves must still read as
        // busy to the neighbors.
        out.nonempty_broadcast = !self.queue.is_empty();
        match self.queue.pop_front() {
            None => {}
            Some(Item::EdgeChange { edge, kind, stamp }) => {
                let payload = Payload::EdgeA { edge, kind, stamp };
                out.sends = self
                    .incident
                    .iter()
                    .filter(|&(_, &joined)| stamp >= joined)
                    .map(|(&u, _)| (u, payload.clone()))
                    .collect();
            }
            Some(Item::Closing { edge, to }) => {
                // The carrying edge may have vanished since enqueue; the
                // broken witness structure makes the item moot.
                if self.incident.contains_key(&to) {
                    out.sends = vec![(to, Payload::EdgeB { edge })];
                }
            }
        }
        out
    }

    fn on_receive(&mut self, _round: Round, inbox: &[Received]) {
        let mut saw_nonempty = false;
        for msg in inbox {
            if !msg.is_empty {
                saw_nonempty = true;
            }
            match &msg.payload {
                Some(Payload::EdgeA { edge, kind, .. }) => match kind {
                    EventKind::Insert => {
                        let Some(&arrived_on) = self.incident.get(&msg.from) else {
                            continue;
                        };
                        let entry = self
                            .known
                            .entry(*edge)
                            .and_modify(|t| *t = (*t).max(arrived_on))
                            .or_insert(arrived_on);
                        let stamp = *entry;
                        if edge.touches(self.me) {
                            continue;
                        }
                        // Closing-pattern detection: the received edge is at
                        // least as new as the newer of the two incident
                        // edges, so the corner across the older one is
                        // missing that older edge.
                        let u = msg.from;
                        let w = edge.other(u);
                        let (Some(&t_u), Some(&t_w)) =
                            (self.incident.get(&u), self.incident.get(&w))
                        else {
                            continue;
                        };
                        if t_u < t_w && t_w <= stamp {
                            self.queue.push_back(Item::Closing {
                                edge: Edge::new(self.me, u).unwrap(),
                                to: w,
                            });
                        } else if t_w < t_u && t_u <= stamp {
                            self.queue.push_back(Item::Closing {
                                edge: Edge::new(self.me, w).unwrap(),
                                to: u,
                            });
                        }
                    }
                    EventKind::Delete => {
                        self.known.remove(edge);
                    }
                },
                Some(Payload::EdgeB { edge }) => {
                    if edge.touches(self.me) {
                        continue;
                    }
                    let (a, b) = edge.endpoints();
                    let (Some(&t_a), Some(&t_b)) =
                        (self.incident.get(&a), self.incident.get(&b))
                    else {
                        continue; // both incident edges must exist
                    };
                    self.known.insert(*edge, t_a.min(t_b).saturating_sub(1));
                }
                _ => {}
            }
        }
        self.consistent = self.queue.is_empty() && !saw_nonempty;
    }

    fn is_consistent(&self) -> bool {
        self.consistent
    }

    fn query(&self, query: &Query) -> Result<QueryResult, QueryError> {
        let nodes: Vec<NodeId> = match query {
            Query::Triangle(t) => t.to_vec(),
            Query::Clique(set) => {
                if !(3..=6).contains(&set.len()) {
                    return Err(QueryError::Unsupported);
                }
                set.clone()
            }
            _ => return Err(QueryError::Unsupported),
        };
        if !nodes.contains(&self.me) {
            return Err(QueryError::NotOwnQuery { node: self.me });
        }
        let mut dedup = nodes.clone();
        dedup.sort();
        dedup.dedup();
        if dedup.len() != nodes.len() {
            return Err(QueryError::NotOwnQuery { node: self.me });
        }
        if !self.consistent {
            return Ok(QueryResult::Inconsistent);
        }
        Ok(if self.edges_known(&nodes) {
            QueryResult::True
        } else {
            QueryResult::False
        })
    }
}
