//! Robust 3-hop neighborhood maintenance with path sets, plus the 4/5-cycle
//! listing query layer.
//!
//! Every known edge carries the set of simple paths (from this node, at most
//! three edges) on which it was learned. Insertions travel outward as
//! growing paths: an incident insertion is broadcast as a one-edge path,
//! receivers extend it by the arrival edge and forward it once more if it
//! still fits in two edges. Deletions are broadcast with a relay counter and
//! sever every stored path through the deleted edge; an edge with no
//! surviving path is no longer listed. Consistency requires two disturbance-
//! free rounds, where a disturbance is a pending queue, a busy neighbor, or
//! a neighbor reporting busy neighbors.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::graph::{Edge, NodeId, Round};
use crate::message::{Payload, Received};
use crate::node::{NodeAlgorithm, Outbound, Query, QueryError, QueryResult};

#[derive(Debug, Clone, PartialEq, Eq)]
enum Item {
    /// Insert-marked path, starting at this node, one or two edges.
    InsertPath(Vec<NodeId>),
    /// Delete-marked edge with its relay counter.
    DeleteEdge(Edge, u8),
}

#[derive(Debug, Clone)]
pub struct Robust3Store {
    me: NodeId,
    /// Path sets: edge -> simple paths from `me` (<= 3 edges) ending at it.
    paths: BTreeMap<Edge, BTreeSet<Vec<NodeId>>>,
    queue: VecDeque<Item>,
    incident: BTreeSet<NodeId>,
    /// Disturbance flags for the two-round consistency rule.
    disturbed_prev: bool,
    consistent: bool,
    /// Whether a busy-queue flag arrived last round; broadcast onward as the
    /// neighbors-busy indication this round.
    heard_busy_last_round: bool,
}

impl Robust3Store {
    pub fn new(me: NodeId) -> Self {
        Robust3Store {
            me,
            paths: BTreeMap::new(),
            queue: VecDeque::new(),
            incident: BTreeSet::new(),
            disturbed_prev: false,
            consistent: true,
            heard_busy_last_round: false,
        }
    }

    /// Edges currently justified by at least one path.
    pub fn listed_edges(&self) -> BTreeSet<Edge> {
        self.paths.keys().copied().collect()
    }

    pub fn path_sets(&self) -> &BTreeMap<Edge, BTreeSet<Vec<NodeId>>> {
        &self.paths
    }

    pub fn queue_len(&self) -> usize {
        self.queue.len()
    }

    /// Re-broadcast storms are bounded by skipping enqueues of items already
    /// pending; receivers are idempotent so a pending copy covers the need.
    fn enqueue_dedup(&mut self, item: Item) {
        if !self.queue.contains(&item) {
            self.queue.push_back(item);
        }
    }

    fn add_prefixes(&mut self, path: &[NodeId]) {
        for j in 1..path.len() {
            let e = Edge::new(path[j - 1], path[j]).expect("simple path");
            self.paths
                .entry(e)
                .or_default()
                .insert(path[..=j].to_vec());
        }
    }

    fn purge_edge(&mut self, e: Edge) {
        self.paths.retain(|_, set| {
            set.retain(|p| !path_contains(p, e));
            !set.is_empty()
        });
    }

    fn apply_item(&mut self, item: Item, from_neighbor: bool) {
        match item {
            Item::InsertPath(p) => {
                let grown;
                let path = if !from_neighbor {
                    grown = false;
                    p
                } else if p.len() == 2 && p.contains(&self.me) {
                    // The sender's own incident edge to us: already a path
                    // from this node, just canonicalize the direction.
                    grown = false;
                    vec![self.me, p[0].max(p[1]).min(if p[0] == self.me { p[1] } else { p[0] })]
                } else {
                    grown = true;
                    let mut ext = Vec::with_capacity(p.len() + 1);
                    ext.push(self.me);
                    ext.extend_from_slice(&p);
                    ext
                };
                if path.len() > 4 || !is_simple(&path) {
                    return;
                }
                self.add_prefixes(&path);
                // Only grown paths are forwarded; echoing unextended items
                // would bounce between the endpoints forever.
                if grown && path.len() <= 3 {
                    self.enqueue_dedup(Item::InsertPath(path));
                }
            }
            Item::DeleteEdge(e, hops) => {
                self.purge_edge(e);
                if hops <= 1 {
                    self.enqueue_dedup(Item::DeleteEdge(e, hops + 1));
                }
            }
        }
    }
}

fn is_simple(path: &[NodeId]) -> bool {
    for (i, a) in path.iter().enumerate() {
        if path[i + 1..].contains(a) {
            return false;
        }
    }
    true
}

fn path_contains(path: &[NodeId], e: Edge) -> bool {
    path.windows(2)
        .any(|w| Edge::new(w[0], w[1]).map(|pe| pe == e).unwrap_or(false))
}

impl NodeAlgorithm for Robust3Store {
    fn on_topology(&mut self, _round: Round, deleted: &[NodeId], inserted: &[NodeId]) {
        // Store updates happen at dequeue/receive time; here the changes are
        // only queued for broadcast.
        for &u in deleted {
            self.incident.remove(&u);
            self.enqueue_dedup(Item::DeleteEdge(Edge::new(self.me, u).unwrap(), 0));
        }
        for &u in inserted {
            self.incident.insert(u);
            self.enqueue_dedup(Item::InsertPath(vec![self.me, u]));
        }
    }

    fn select_outgoing(&mut self, _round: Round) -> Outbound {
        let mut out = Outbound {
            nonempty_broadcast: !self.queue.is_empty(),
            neighbors_nonempty_broadcast: self.heard_busy_last_round,
            ..Outbound::default()
        };
        if let Some(item) = self.queue.pop_front() {
            let payload = match &item {
                Item::InsertPath(p) => Payload::PathIns { nodes: p.clone() },
                Item::DeleteEdge(e, hops) => Payload::EdgeDel {
                    edge: *e,
                    hops: *hops,
                },
            };
            out.sends = self
                .incident
                .iter()
                .map(|&u| (u, payload.clone()))
                .collect();
            self.apply_item(item, false);
        }
        out
    }

    fn on_receive(&mut self, _round: Round, inbox: &[Received]) {
        let mut heard_busy = false;
        let mut heard_busy_neighbors = false;
        for msg in inbox {
            if !msg.is_empty {
                heard_busy = true;
            }
            if !msg.are_neighbors_empty {
                heard_busy_neighbors = true;
            }
            match &msg.payload {
                Some(Payload::PathIns { nodes }) => {
                    self.apply_item(Item::InsertPath(nodes.clone()), true);
                }
                Some(Payload::EdgeDel { edge, hops }) => {
                    self.apply_item(Item::DeleteEdge(*edge, *hops), true);
                }
                _ => {}
            }
        }
        let disturbed = !self.queue.is_empty() || heard_busy || heard_busy_neighbors;
        self.consistent = !(disturbed || self.disturbed_prev);
        self.disturbed_prev = disturbed;
        self.heard_busy_last_round = heard_busy;
    }

    fn is_consistent(&self) -> bool {
        self.consistent
    }

    fn query(&self, query: &Query) -> Result<QueryResult, QueryError> {
        match query {
            Query::Edge(e) => {
                if !self.consistent {
                    return Ok(QueryResult::Inconsistent);
                }
                Ok(if self.paths.contains_key(e) {
                    QueryResult::True
                } else {
                    QueryResult::False
                })
            }
            Query::Cycle(seq) => {
                if seq.len() != 4 && seq.len() != 5 {
                    return Err(QueryError::MalformedCycle {
                        reason: format!("length {} not 4 or 5", seq.len()),
                    });
                }
                if !is_simple(seq) {
                    return Err(QueryError::MalformedCycle {
                        reason: "repeated node".to_string(),
                    });
                }
                if seq.first() != Some(&self.me) {
                    return Err(QueryError::NotOwnQuery { node: self.me });
                }
                if !self.consistent {
                    return Ok(QueryResult::Inconsistent);
                }
                let k = seq.len();
                let all_listed = (0..k).all(|i| {
                    Edge::new(seq[i], seq[(i + 1) % k])
                        .map(|e| self.paths.contains_key(&e))
                        .unwrap_or(false)
                });
                Ok(if all_listed {
                    QueryResult::True
                } else {
                    QueryResult::False
                })
            }
            _ => Err(QueryError::Unsupported),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::edge;

    fn received(from: u32, payload: Option<Payload>) -> Received {
        Received {
            from: NodeId(from),
            payload,
            is_empty: true,
            are_neighbors_empty: true,
        }
    }

    fn ids(v: &[u32]) -> Vec<NodeId> {
        v.iter().map(|&x| NodeId(x)).collect()
    }

    #[test]
    fn topology_enqueues_without_store_mutation() {
        let mut s = Robust3Store::new(NodeId(0));
        s.on_topology(1, &[], &[NodeId(1)]);
        assert_eq!(s.queue.len(), 1);
        assert!(s.paths.is_empty(), "store updates wait for the dequeue");
        s.on_topology(2, &[NodeId(1)], &[NodeId(2)]);
        assert_eq!(
            s.queue.iter().cloned().collect::<Vec<_>>(),
            vec![
                Item::InsertPath(ids(&[0, 1])),
                Item::DeleteEdge(edge(0, 1), 0),
                Item::InsertPath(ids(&[0, 2])),
            ],
        );
    }

    #[test]
    fn dequeue_broadcasts_and_self_applies() {
        let mut s = Robust3Store::new(NodeId(0));
        s.on_topology(1, &[], &[NodeId(1), NodeId(2)]);
        let out = s.select_outgoing(1);
        assert!(out.nonempty_broadcast, "pre-dequeue emptiness");
        assert_eq!(out.sends.len(), 2, "broadcast to every neighbor");
        assert!(s.paths[&edge(0, 1)].contains(&ids(&[0, 1])));
        // Self-applied single edges are not re-enqueued.
        assert_eq!(s.queue.len(), 1);
    }

    #[test]
    fn empty_queue_sends_nothing() {
        let mut s = Robust3Store::new(NodeId(0));
        let out = s.select_outgoing(1);
        assert!(out.sends.is_empty());
        assert!(!out.nonempty_broadcast);
    }

    #[test]
    fn self_dequeued_delete_purges_and_relays() {
        let mut s = Robust3Store::new(NodeId(0));
        s.on_topology(1, &[], &[NodeId(1)]);
        s.select_outgoing(1);
        s.on_topology(2, &[NodeId(1)], &[]);
        let out = s.select_outgoing(2);
        assert!(out.sends.is_empty(), "no neighbors left to hear it");
        assert!(!s.paths.contains_key(&edge(0, 1)), "purged on dequeue");
        assert_eq!(s.queue.front(), Some(&Item::DeleteEdge(edge(0, 1), 1)));
    }

    #[test]
    fn received_short_path_extends_and_forwards() {
        let mut s = Robust3Store::new(NodeId(0));
        s.on_topology(1, &[], &[NodeId(1)]);
        s.select_outgoing(1);
        s.on_receive(1, &[received(1, Some(Payload::PathIns { nodes: ids(&[1, 2]) }))]);
        assert!(s.paths[&edge(0, 1)].contains(&ids(&[0, 1])));
        assert!(s.paths[&edge(1, 2)].contains(&ids(&[0, 1, 2])));
        assert_eq!(s.queue.back(), Some(&Item::InsertPath(ids(&[0, 1, 2]))));
    }

    #[test]
    fn received_two_edge_path_is_terminal() {
        let mut s = Robust3Store::new(NodeId(0));
        s.on_topology(1, &[], &[NodeId(1)]);
        s.select_outgoing(1);
        s.on_receive(
            1,
            &[received(1, Some(Payload::PathIns { nodes: ids(&[1, 2, 3]) }))],
        );
        assert!(s.paths[&edge(0, 1)].contains(&ids(&[0, 1])));
        assert!(s.paths[&edge(1, 2)].contains(&ids(&[0, 1, 2])));
        assert!(s.paths[&edge(2, 3)].contains(&ids(&[0, 1, 2, 3])));
        assert!(s.queue.is_empty(), "three-edge paths travel no further");
    }

    #[test]
    fn received_own_edge_is_not_echoed() {
        let mut s = Robust3Store::new(NodeId(0));
        s.on_topology(1, &[], &[NodeId(1)]);
        s.select_outgoing(1);
        s.on_receive(1, &[received(1, Some(Payload::PathIns { nodes: ids(&[1, 0]) }))]);
        assert!(s.paths[&edge(0, 1)].contains(&ids(&[0, 1])));
        assert!(s.queue.is_empty(), "no ping-pong on the shared edge");
    }

    #[test]
    fn nonsimple_extension_is_discarded() {
        let mut s = Robust3Store::new(NodeId(0));
        s.on_topology(1, &[], &[NodeId(1)]);
        s.select_outgoing(1);
        s.on_receive(
            1,
            &[received(1, Some(Payload::PathIns { nodes: ids(&[1, 2, 0]) }))],
        );
        assert!(!s.paths.contains_key(&edge(1, 2)));
        assert!(!s.paths.contains_key(&edge(0, 2)));
    }

    #[test]
    fn received_delete_purges_and_caps_relay() {
        let mut s = Robust3Store::new(NodeId(0));
        s.on_topology(1, &[], &[NodeId(1)]);
        s.select_outgoing(1);
        s.on_receive(
            1,
            &[received(1, Some(Payload::PathIns { nodes: ids(&[1, 2, 3]) }))],
        );
        s.on_receive(
            2,
            &[received(
                1,
                Some(Payload::EdgeDel {
                    edge: edge(2, 3),
                    hops: 1,
                }),
            )],
        );
        assert!(!s.paths.contains_key(&edge(2, 3)));
        assert!(s.paths.contains_key(&edge(1, 2)), "prefix path survives");
        assert!(s.queue.contains(&Item::DeleteEdge(edge(2, 3), 2)));
        let len = s.queue.len();
        s.on_receive(
            3,
            &[received(
                1,
                Some(Payload::EdgeDel {
                    edge: edge(2, 3),
                    hops: 2,
                }),
            )],
        );
        assert_eq!(s.queue.len(), len, "counter 2 relays nothing");
    }

    #[test]
    fn purge_severs_paths_through_the_edge_everywhere() {
        let mut s = Robust3Store::new(NodeId(0));
        s.on_topology(1, &[], &[NodeId(1)]);
        s.select_outgoing(1);
        s.on_receive(
            1,
            &[received(1, Some(Payload::PathIns { nodes: ids(&[1, 2, 3]) }))],
        );
        s.on_receive(
            2,
            &[received(
                1,
                Some(Payload::EdgeDel {
                    edge: edge(1, 2),
                    hops: 1,
                }),
            )],
        );
        // Both the 2-edge prefix and the 3-edge path ran through {1,2}.
        assert!(!s.paths.contains_key(&edge(1, 2)));
        assert!(!s.paths.contains_key(&edge(2, 3)));
        assert!(s.paths.contains_key(&edge(0, 1)));
    }

    #[test]
    fn consistency_needs_two_quiet_rounds() {
        let mut s = Robust3Store::new(NodeId(0));
        s.on_receive(1, &[]);
        assert!(s.is_consistent());
        s.on_topology(2, &[], &[NodeId(1)]);
        s.on_receive(2, &[]); // queue still holds the item: disturbed
        assert!(!s.is_consistent());
        s.select_outgoing(3);
        s.on_receive(3, &[]); // quiet now, but last round was disturbed
        assert!(!s.is_consistent());
        s.on_receive(4, &[]);
        assert!(s.is_consistent());
    }

    #[test]
    fn busy_neighbor_reports_disturb() {
        let mut s = Robust3Store::new(NodeId(0));
        s.on_receive(
            1,
            &[Received {
                from: NodeId(1),
                payload: None,
                is_empty: true,
                are_neighbors_empty: false,
            }],
        );
        assert!(!s.is_consistent(), "second-hop busyness counts");
        // And a busy flag heard now is rebroadcast next round.
        s.on_receive(
            2,
            &[Received {
                from: NodeId(1),
                payload: None,
                is_empty: false,
                are_neighbors_empty: true,
            }],
        );
        let out = s.select_outgoing(3);
        assert!(out.neighbors_nonempty_broadcast);
    }

    #[test]
    fn edge_query_contract() {
        let mut s = Robust3Store::new(NodeId(0));
        s.on_topology(1, &[], &[NodeId(1)]);
        s.select_outgoing(1);
        s.consistent = false;
        assert_eq!(
            s.query(&Query::Edge(edge(0, 1))).unwrap(),
            QueryResult::Inconsistent
        );
        s.consistent = true;
        assert_eq!(s.query(&Query::Edge(edge(0, 1))).unwrap(), QueryResult::True);
        assert_eq!(s.query(&Query::Edge(edge(2, 3))).unwrap(), QueryResult::False);
    }

    #[test]
    fn cycle_query_contract() {
        let mut s = Robust3Store::new(NodeId(0));
        for p in [
            ids(&[0, 1]),
            ids(&[0, 1, 2]),
            ids(&[0, 3]),
            ids(&[0, 3, 2]),
        ] {
            s.add_prefixes(&p);
        }
        s.consistent = true;
        let q = Query::Cycle(ids(&[0, 1, 2, 3]));
        assert_eq!(s.query(&q).unwrap(), QueryResult::True);
        assert_eq!(
            s.query(&Query::Cycle(ids(&[0, 1, 3, 2]))).unwrap(),
            QueryResult::False,
            "edges {{1,3}} and {{2,0}}... not listed"
        );
        assert!(matches!(
            s.query(&Query::Cycle(ids(&[0, 1, 2]))),
            Err(QueryError::MalformedCycle { .. })
        ));
        assert!(matches!(
            s.query(&Query::Cycle(ids(&[0, 1, 2, 1]))),
            Err(QueryError::MalformedCycle { .. })
        ));
        assert!(matches!(
            s.query(&Query::Cycle(ids(&[1, 2, 3, 0]))),
            Err(QueryError::NotOwnQuery { .. })
        ));
    }

    #[test]
    fn stored_paths_stay_simple_and_anchored() {
        let mut s = Robust3Store::new(NodeId(0));
        s.on_topology(1, &[], &[NodeId(1), NodeId(2)]);
        s.select_outgoing(1);
        s.select_outgoing(2);
        for (from, nodes) in [
            (1, ids(&[1, 2])),
            (2, ids(&[2, 3, 4])),
            (1, ids(&[1, 3, 0])),
            (2, ids(&[2, 0])),
        ] {
            s.on_receive(3, &[received(from, Some(Payload::PathIns { nodes }))]);
        }
        for (e, set) in s.path_sets() {
            for p in set {
                assert!(is_simple(p));
                assert_eq!(p[0], NodeId(0));
                assert!(p.len() >= 2 && p.len() <= 4);
                assert_eq!(Edge::new(p[p.len() - 2], p[p.len() - 1]).unwrap(), *e);
            }
        }
    }
}
