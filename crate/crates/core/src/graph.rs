//! Evolving graph state: edge insertions/deletions applied round by round,
//! with per-edge insertion times tracked for the oracles.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Simulation round counter. Round 0 is the initial empty graph; events are
/// applied from round 1 onwards.
pub type Round = u64;

/// A node identifier in `[0, n)`.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// An undirected edge stored canonically with `a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Edge {
    a: NodeId,
    b: NodeId,
}

impl Edge {
    pub fn new(x: NodeId, y: NodeId) -> Result<Self, GraphError> {
        if x == y {
            return Err(GraphError::SelfLoop { node: x });
        }
        let (a, b) = if x < y { (x, y) } else { (y, x) };
        Ok(Edge { a, b })
    }

    pub fn endpoints(self) -> (NodeId, NodeId) {
        (self.a, self.b)
    }

    pub fn touches(self, v: NodeId) -> bool {
        self.a == v || self.b == v
    }

    /// The endpoint that is not `v`. Panics if `v` is not an endpoint.
    pub fn other(self, v: NodeId) -> NodeId {
        if self.a == v {
            self.b
        } else {
            debug_assert_eq!(self.b, v);
            self.a
        }
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{},{}}}", self.a, self.b)
    }
}

/// Convenience constructor for tests and generators; panics on self-loops.
pub fn edge(a: u32, b: u32) -> Edge {
    Edge::new(NodeId(a), NodeId(b)).expect("self-loop")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EventKind {
    Insert,
    Delete,
}

/// One topology change: the adversary's unit of work.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopologyEvent {
    pub round: Round,
    pub edge: Edge,
    pub kind: EventKind,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("self-loop at node {node}")]
    SelfLoop { node: NodeId },
    #[error("node {node} out of range for n={n}")]
    NodeOutOfRange { node: NodeId, n: usize },
    #[error("round {round}: delete of absent edge {edge}")]
    DeleteAbsent { round: Round, edge: Edge },
    #[error("round {round}: insert of present edge {edge}")]
    InsertPresent { round: Round, edge: Edge },
    #[error("round {round}: duplicate edge {edge} in batch")]
    DuplicateInBatch { round: Round, edge: Edge },
    #[error("batch mixes rounds {a} and {b}")]
    MixedRounds { a: Round, b: Round },
    #[error("trace line {line}: {msg}")]
    BadTraceLine { line: usize, msg: String },
}

/// Per-node view of one round's topology changes. Deletions are listed (and
/// delivered) before insertions; each list holds the other endpoint.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Indications {
    pub deleted: Vec<NodeId>,
    pub inserted: Vec<NodeId>,
}

impl Indications {
    pub fn is_empty(&self) -> bool {
        self.deleted.is_empty() && self.inserted.is_empty()
    }
}

/// The global graph at some round, plus the latest insertion round of every
/// edge ever inserted. The timestamp map is read only by the oracles and the
/// test harness; nodes see just their own incident indications.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphState {
    n: usize,
    present: BTreeSet<Edge>,
    inserted_at: BTreeMap<Edge, Round>,
}

impl GraphState {
    pub fn new(n: usize) -> Self {
        GraphState {
            n,
            present: BTreeSet::new(),
            inserted_at: BTreeMap::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.present.iter().copied()
    }

    pub fn edge_count(&self) -> usize {
        self.present.len()
    }

    pub fn edge_exists(&self, e: Edge) -> bool {
        self.present.contains(&e)
    }

    /// Latest round in which `e` was inserted, or `None` if never inserted.
    pub fn insertion_time(&self, e: Edge) -> Option<Round> {
        self.inserted_at.get(&e).copied()
    }

    pub fn neighbors(&self, v: NodeId) -> Vec<NodeId> {
        // Desk-scale n: a scan over the edge set is fine and keeps the state
        // representation to a single source of truth.
        self.present
            .iter()
            .filter(|e| e.touches(v))
            .map(|e| e.other(v))
            .collect()
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.present.iter().filter(|e| e.touches(v)).count()
    }

    fn check_node(&self, v: NodeId) -> Result<(), GraphError> {
        if v.index() >= self.n {
            Err(GraphError::NodeOutOfRange { node: v, n: self.n })
        } else {
            Ok(())
        }
    }

    /// Applies one round's batch of events. The whole batch is validated
    /// before any mutation. Deletions are applied first, then insertions;
    /// inserted edges get their insertion time set to the batch round.
    ///
    /// Returns the per-node indication lists for the endpoints touched.
    pub fn apply_events(
        &mut self,
        events: &[TopologyEvent],
    ) -> Result<BTreeMap<NodeId, Indications>, GraphError> {
        let mut indications: BTreeMap<NodeId, Indications> = BTreeMap::new();
        if events.is_empty() {
            return Ok(indications);
        }
        let round = events[0].round;
        let mut seen = BTreeSet::new();
        for ev in events {
            if ev.round != round {
                return Err(GraphError::MixedRounds {
                    a: round,
                    b: ev.round,
                });
            }
            let (a, b) = ev.edge.endpoints();
            self.check_node(a)?;
            self.check_node(b)?;
            if !seen.insert(ev.edge) {
                return Err(GraphError::DuplicateInBatch {
                    round,
                    edge: ev.edge,
                });
            }
            match ev.kind {
                EventKind::Delete if !self.present.contains(&ev.edge) => {
                    return Err(GraphError::DeleteAbsent {
                        round,
                        edge: ev.edge,
                    });
                }
                EventKind::Insert if self.present.contains(&ev.edge) => {
                    return Err(GraphError::InsertPresent {
                        round,
                        edge: ev.edge,
                    });
                }
                _ => {}
            }
        }

        // Deletions first, then insertions, in canonical edge order.
        let mut deletions: Vec<Edge> = events
            .iter()
            .filter(|e| e.kind == EventKind::Delete)
            .map(|e| e.edge)
            .collect();
        deletions.sort();
        let mut insertions: Vec<Edge> = events
            .iter()
            .filter(|e| e.kind == EventKind::Insert)
            .map(|e| e.edge)
            .collect();
        insertions.sort();

        for e in deletions {
            self.present.remove(&e);
            let (a, b) = e.endpoints();
            indications.entry(a).or_default().deleted.push(b);
            indications.entry(b).or_default().deleted.push(a);
        }
        for e in insertions {
            self.present.insert(e);
            self.inserted_at.insert(e, round);
            let (a, b) = e.endpoints();
            indications.entry(a).or_default().inserted.push(b);
            indications.entry(b).or_default().inserted.push(a);
        }
        Ok(indications)
    }
}

// ---------------------------------------------------------------------------
// Line-oriented event trace format: `round op u v` with op in {I, D}.
// Round numbers must be non-decreasing. Used for `--trace-in`/`--trace-out`.
// ---------------------------------------------------------------------------

pub fn format_event(ev: &TopologyEvent) -> String {
    let (a, b) = ev.edge.endpoints();
    let op = match ev.kind {
        EventKind::Insert => 'I',
        EventKind::Delete => 'D',
    };
    format!("{} {} {} {}", ev.round, op, a, b)
}

/// Parses one `round op u v` line. Returns `Ok(None)` for blank lines and
/// `#` comments. `STABILIZE` pseudo-records are handled by the scenario
/// loader, not here.
pub fn parse_event_line(line: &str, lineno: usize) -> Result<Option<TopologyEvent>, GraphError> {
    let trimmed = line.trim();
    if trimmed.is_empty() || trimmed.starts_with('#') {
        return Ok(None);
    }
    let mut parts = trimmed.split_whitespace();
    let bad = |msg: &str| GraphError::BadTraceLine {
        line: lineno,
        msg: msg.to_string(),
    };
    let round: Round = parts
        .next()
        .ok_or_else(|| bad("missing round"))?
        .parse()
        .map_err(|_| bad("bad round"))?;
    let op = parts.next().ok_or_else(|| bad("missing op"))?;
    let kind = match op {
        "I" => EventKind::Insert,
        "D" => EventKind::Delete,
        other => return Err(bad(&format!("unknown op {other:?}"))),
    };
    let u: u32 = parts
        .next()
        .ok_or_else(|| bad("missing u"))?
        .parse()
        .map_err(|_| bad("bad u"))?;
    let v: u32 = parts
        .next()
        .ok_or_else(|| bad("missing v"))?
        .parse()
        .map_err(|_| bad("bad v"))?;
    if parts.next().is_some() {
        return Err(bad("trailing fields"));
    }
    let edge = Edge::new(NodeId(u), NodeId(v)).map_err(|_| bad("self-loop"))?;
    Ok(Some(TopologyEvent { round, edge, kind }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ev(round: Round, e: Edge, kind: EventKind) -> TopologyEvent {
        TopologyEvent {
            round,
            edge: e,
            kind,
        }
    }

    #[test]
    fn empty_batch_is_identity() {
        let mut g = GraphState::new(4);
        let before = g.clone();
        let ind = g.apply_events(&[]).unwrap();
        assert_eq!(g, before);
        assert!(ind.is_empty());
    }

    #[test]
    fn single_insert_sets_timestamp_and_indications() {
        let mut g = GraphState::new(4);
        let ind = g
            .apply_events(&[ev(3, edge(0, 1), EventKind::Insert)])
            .unwrap();
        assert!(g.edge_exists(edge(0, 1)));
        assert_eq!(g.insertion_time(edge(0, 1)), Some(3));
        assert_eq!(ind[&NodeId(0)].inserted, vec![NodeId(1)]);
        assert_eq!(ind[&NodeId(1)].inserted, vec![NodeId(0)]);
        assert!(ind[&NodeId(0)].deleted.is_empty());
    }

    #[test]
    fn same_round_flip_rejected_as_duplicate() {
        let mut g = GraphState::new(4);
        g.apply_events(&[ev(3, edge(0, 1), EventKind::Insert)])
            .unwrap();
        let err = g
            .apply_events(&[
                ev(5, edge(0, 1), EventKind::Delete),
                ev(5, edge(0, 1), EventKind::Insert),
            ])
            .unwrap_err();
        assert_eq!(
            err,
            GraphError::DuplicateInBatch {
                round: 5,
                edge: edge(0, 1)
            }
        );
        // Validation is atomic: nothing was applied.
        assert!(g.edge_exists(edge(0, 1)));
        assert_eq!(g.insertion_time(edge(0, 1)), Some(3));
    }

    #[test]
    fn edge_exists_tracks_lifecycle() {
        let mut g = GraphState::new(4);
        assert!(!g.edge_exists(edge(0, 1)));
        g.apply_events(&[ev(1, edge(0, 1), EventKind::Insert)])
            .unwrap();
        assert!(g.edge_exists(edge(0, 1)));
        g.apply_events(&[ev(2, edge(0, 1), EventKind::Delete)])
            .unwrap();
        assert!(!g.edge_exists(edge(0, 1)));
    }

    #[test]
    fn insertion_time_is_latest_insert() {
        let mut g = GraphState::new(4);
        assert_eq!(g.insertion_time(edge(0, 1)), None);
        g.apply_events(&[ev(5, edge(0, 1), EventKind::Insert)])
            .unwrap();
        assert_eq!(g.insertion_time(edge(0, 1)), Some(5));
        g.apply_events(&[ev(7, edge(0, 1), EventKind::Delete)])
            .unwrap();
        g.apply_events(&[ev(9, edge(0, 1), EventKind::Insert)])
            .unwrap();
        assert_eq!(g.insertion_time(edge(0, 1)), Some(9));
    }

    #[test]
    fn invalid_events_rejected() {
        let mut g = GraphState::new(4);
        assert!(matches!(
            g.apply_events(&[ev(1, edge(0, 1), EventKind::Delete)]),
            Err(GraphError::DeleteAbsent { .. })
        ));
        g.apply_events(&[ev(1, edge(0, 1), EventKind::Insert)])
            .unwrap();
        assert!(matches!(
            g.apply_events(&[ev(2, edge(0, 1), EventKind::Insert)]),
            Err(GraphError::InsertPresent { .. })
        ));
        assert!(matches!(
            g.apply_events(&[
                ev(3, edge(1, 2), EventKind::Insert),
                ev(4, edge(2, 3), EventKind::Insert)
            ]),
            Err(GraphError::MixedRounds { .. })
        ));
        assert!(matches!(
            g.apply_events(&[ev(3, edge(0, 9), EventKind::Insert)]),
            Err(GraphError::NodeOutOfRange { .. })
        ));
        assert!(Edge::new(NodeId(2), NodeId(2)).is_err());
    }

    #[test]
    fn deletions_indicated_before_insertions() {
        let mut g = GraphState::new(4);
        g.apply_events(&[ev(1, edge(0, 1), EventKind::Insert)])
            .unwrap();
        let ind = g
            .apply_events(&[
                ev(2, edge(0, 1), EventKind::Delete),
                ev(2, edge(0, 2), EventKind::Insert),
            ])
            .unwrap();
        let at0 = &ind[&NodeId(0)];
        assert_eq!(at0.deleted, vec![NodeId(1)]);
        assert_eq!(at0.inserted, vec![NodeId(2)]);
    }

    #[test]
    fn trace_line_roundtrip_and_errors() {
        let e = ev(12, edge(3, 1), EventKind::Delete);
        let line = format_event(&e);
        assert_eq!(line, "12 D 1 3");
        assert_eq!(parse_event_line(&line, 1).unwrap(), Some(e));
        assert_eq!(parse_event_line("  # comment", 1).unwrap(), None);
        assert_eq!(parse_event_line("", 1).unwrap(), None);
        assert!(parse_event_line("3 X 0 1", 1).is_err());
        assert!(parse_event_line("3 I 2 2", 1).is_err());
        assert!(parse_event_line("3 I 2", 1).is_err());
    }

    /// Generates a valid per-round event schedule by tracking presence.
    fn arb_schedule(n: u32, rounds: u64) -> impl Strategy<Value = Vec<Vec<TopologyEvent>>> {
        let pairs: Vec<(u32, u32)> = (0..n)
            .flat_map(|a| ((a + 1)..n).map(move |b| (a, b)))
            .collect();
        let per_round = proptest::collection::vec(
            proptest::collection::vec(any::<bool>(), pairs.len()),
            rounds as usize,
        );
        per_round.prop_map(move |flips| {
            let mut present = vec![false; pairs.len()];
            let mut schedule = Vec::new();
            for (r, flip) in flips.into_iter().enumerate() {
                let round = (r + 1) as Round;
                let mut batch = Vec::new();
                for (i, f) in flip.into_iter().enumerate() {
                    if f {
                        let kind = if present[i] {
                            EventKind::Delete
                        } else {
                            EventKind::Insert
                        };
                        present[i] = !present[i];
                        batch.push(ev(round, edge(pairs[i].0, pairs[i].1), kind));
                    }
                }
                schedule.push(batch);
            }
            schedule
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn replay_is_deterministic(schedule in arb_schedule(6, 12)) {
            let mut g1 = GraphState::new(6);
            let mut g2 = GraphState::new(6);
            for batch in &schedule {
                let i1 = g1.apply_events(batch).unwrap();
                let i2 = g2.apply_events(batch).unwrap();
                prop_assert_eq!(i1, i2);
            }
            prop_assert_eq!(g1, g2);
        }

        #[test]
        fn timestamps_and_presence_match_event_history(schedule in arb_schedule(6, 12)) {
            let mut g = GraphState::new(6);
            for batch in &schedule {
                g.apply_events(batch).unwrap();
            }
            let all: Vec<TopologyEvent> = schedule.into_iter().flatten().collect();
            for a in 0..6u32 {
                for b in (a + 1)..6 {
                    let e = edge(a, b);
                    let last_insert = all
                        .iter()
                        .filter(|x| x.edge == e && x.kind == EventKind::Insert)
                        .map(|x| x.round)
                        .max();
                    prop_assert_eq!(g.insertion_time(e), last_insert);
                    let ins = all.iter().filter(|x| x.edge == e && x.kind == EventKind::Insert).count();
                    let del = all.iter().filter(|x| x.edge == e && x.kind == EventKind::Delete).count();
                    prop_assert_eq!(g.edge_exists(e), ins > del);
                }
            }
        }
    }
}
