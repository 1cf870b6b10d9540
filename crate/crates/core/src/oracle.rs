//! Brute-force reference computations over the full event history.
//!
//! Everything here recomputes from scratch at the queried round (desk scale,
//! n <= 32) so it stays an independent check on the per-node algorithms.
//! Equal insertion times satisfy the `>=` constraints in both directions.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::graph::{Edge, GraphError, GraphState, NodeId, Round, TopologyEvent};

/// Ordered per-round event batches plus the derived snapshots `G_0, G_1, ...`
/// (`G_0` is the empty graph; batch `i` produces `G_i`).
#[derive(Debug, Clone)]
pub struct History {
    n: usize,
    batches: Vec<Vec<TopologyEvent>>,
    snapshots: Vec<GraphState>,
}

impl History {
    pub fn new(n: usize) -> Self {
        History {
            n,
            batches: Vec::new(),
            snapshots: vec![GraphState::new(n)],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of rounds recorded so far.
    pub fn rounds(&self) -> Round {
        self.batches.len() as Round
    }

    /// Appends the next round's batch. Events must carry round `rounds()+1`.
    pub fn push_round(&mut self, events: Vec<TopologyEvent>) -> Result<(), GraphError> {
        let mut next = self.snapshots.last().unwrap().clone();
        next.apply_events(&events)?;
        self.batches.push(events);
        self.snapshots.push(next);
        Ok(())
    }

    /// The graph `G_i` at the beginning-of-round-`i+1` boundary (after round
    /// `i`'s changes). `i = 0` is the initial empty graph.
    pub fn state_at(&self, i: Round) -> &GraphState {
        &self.snapshots[i as usize]
    }

    pub fn batch(&self, i: Round) -> &[TopologyEvent] {
        &self.batches[(i - 1) as usize]
    }
}

fn bfs_distances(g: &GraphState, v: NodeId, cap: u32) -> BTreeMap<NodeId, u32> {
    let mut dist = BTreeMap::new();
    dist.insert(v, 0);
    let mut queue = VecDeque::from([v]);
    while let Some(u) = queue.pop_front() {
        let d = dist[&u];
        if d == cap {
            continue;
        }
        for w in g.neighbors(u) {
            dist.entry(w).or_insert_with(|| {
                queue.push_back(w);
                d + 1
            });
        }
    }
    dist
}

/// All edges whose endpoints are both within distance `r` of `v`.
pub fn hop_edges(g: &GraphState, v: NodeId, r: u32) -> BTreeSet<Edge> {
    assert!((1..=3).contains(&r), "hop radius must be 1..=3");
    let dist = bfs_distances(g, v, r);
    g.edges()
        .filter(|e| {
            let (a, b) = e.endpoints();
            dist.contains_key(&a) && dist.contains_key(&b)
        })
        .collect()
}

fn stamp(g: &GraphState, e: Edge) -> Round {
    g.insertion_time(e)
        .expect("present edge always has an insertion time")
}

/// The robust 2-hop neighborhood of `v` at round `i`: incident edges, plus
/// every edge `{u,w}` with a surviving incident witness `{v,u}` (or `{v,w}`)
/// inserted no later than `{u,w}`.
pub fn robust_two_hop(hist: &History, v: NodeId, i: Round) -> BTreeSet<Edge> {
    let g = hist.state_at(i);
    let mut out = BTreeSet::new();
    for e in g.edges() {
        if e.touches(v) {
            out.insert(e);
            continue;
        }
        let (u, w) = e.endpoints();
        let te = stamp(g, e);
        for x in [u, w] {
            if let Ok(vx) = Edge::new(v, x) {
                if g.edge_exists(vx) && te >= stamp(g, vx) {
                    out.insert(e);
                    break;
                }
            }
        }
    }
    out
}

/// The triangle algorithm's target set `T` at round `i`: incident edges, the
/// robust 2-hop pattern, and the closing pattern where `{u,w}` predates both
/// `{v,u}` and `{v,w}`.
pub fn temporal_two_hop(hist: &History, v: NodeId, i: Round) -> BTreeSet<Edge> {
    let g = hist.state_at(i);
    let mut out = robust_two_hop(hist, v, i);
    for e in g.edges() {
        if e.touches(v) || out.contains(&e) {
            continue;
        }
        let (u, w) = e.endpoints();
        let (vu, vw) = match (Edge::new(v, u), Edge::new(v, w)) {
            (Ok(a), Ok(b)) => (a, b),
            _ => continue,
        };
        if g.edge_exists(vu) && g.edge_exists(vw) {
            let te = stamp(g, e);
            if te < stamp(g, vu) && te < stamp(g, vw) {
                out.insert(e);
            }
        }
    }
    out
}

/// The robust 3-hop neighborhood of `v` at round `i`: incident edges, plus
/// the edges of every simple 2-path `v-u-w` whose far edge is newest, plus
/// the edges of every simple 3-path `v-u-w-x` whose far edge is newest.
pub fn robust_three_hop(hist: &History, v: NodeId, i: Round) -> BTreeSet<Edge> {
    let g = hist.state_at(i);
    let mut out = BTreeSet::new();
    for u in g.neighbors(v) {
        let vu = Edge::new(v, u).unwrap();
        out.insert(vu);
        let t_vu = stamp(g, vu);
        for w in g.neighbors(u) {
            if w == v {
                continue;
            }
            let uw = Edge::new(u, w).unwrap();
            let t_uw = stamp(g, uw);
            if t_uw >= t_vu {
                out.insert(vu);
                out.insert(uw);
            }
            for x in g.neighbors(w) {
                if x == v || x == u {
                    continue;
                }
                let wx = Edge::new(w, x).unwrap();
                let t_wx = stamp(g, wx);
                if t_wx >= t_uw && t_wx >= t_vu {
                    out.insert(vu);
                    out.insert(uw);
                    out.insert(wx);
                }
            }
        }
    }
    out
}

/// All triangles, as ordered node triples `(a, b, c)` with `a < b < c`.
pub fn triangles(g: &GraphState) -> BTreeSet<[NodeId; 3]> {
    let n = g.n() as u32;
    let mut out = BTreeSet::new();
    for a in 0..n {
        for b in (a + 1)..n {
            if !g.edge_exists(Edge::new(NodeId(a), NodeId(b)).unwrap()) {
                continue;
            }
            for c in (b + 1)..n {
                if g.edge_exists(Edge::new(NodeId(a), NodeId(c)).unwrap())
                    && g.edge_exists(Edge::new(NodeId(b), NodeId(c)).unwrap())
                {
                    out.insert([NodeId(a), NodeId(b), NodeId(c)]);
                }
            }
        }
    }
    out
}

/// All k-cliques for small k, as sorted node vectors.
pub fn cliques(g: &GraphState, k: usize) -> BTreeSet<Vec<NodeId>> {
    assert!((3..=6).contains(&k), "clique size must be 3..=6");
    let mut out = BTreeSet::new();
    let mut current: Vec<NodeId> = Vec::with_capacity(k);
    fn extend(
        g: &GraphState,
        k: usize,
        start: u32,
        current: &mut Vec<NodeId>,
        out: &mut BTreeSet<Vec<NodeId>>,
    ) {
        if current.len() == k {
            out.insert(current.clone());
            return;
        }
        for c in start..g.n() as u32 {
            let cand = NodeId(c);
            if current
                .iter()
                .all(|&m| g.edge_exists(Edge::new(m, cand).unwrap()))
            {
                current.push(cand);
                extend(g, k, c + 1, current, out);
                current.pop();
            }
        }
    }
    extend(g, k, 0, &mut current, &mut out);
    out
}

/// Canonical form of a cycle: the lexicographically smallest node sequence
/// among all rotations in both directions.
pub fn canonical_cycle(seq: &[NodeId]) -> Vec<NodeId> {
    let k = seq.len();
    let mut best: Option<Vec<NodeId>> = None;
    for start in 0..k {
        for dir in [1i64, -1] {
            let cand: Vec<NodeId> = (0..k)
                .map(|j| seq[((start as i64 + dir * j as i64).rem_euclid(k as i64)) as usize])
                .collect();
            if best.as_ref().is_none_or(|b| cand < *b) {
                best = Some(cand);
            }
        }
    }
    best.unwrap()
}

/// All simple k-cycles for k in {4, 5}, canonicalized.
pub fn cycles(g: &GraphState, k: usize) -> BTreeSet<Vec<NodeId>> {
    assert!(k == 4 || k == 5, "cycle length must be 4 or 5");
    let mut out = BTreeSet::new();
    // Anchor each cycle at its minimal node to bound the DFS.
    for s in 0..g.n() as u32 {
        let start = NodeId(s);
        let mut path = vec![start];
        dfs_cycles(g, k, start, &mut path, &mut out);
    }
    out
}

fn dfs_cycles(
    g: &GraphState,
    k: usize,
    start: NodeId,
    path: &mut Vec<NodeId>,
    out: &mut BTreeSet<Vec<NodeId>>,
) {
    let last = *path.last().unwrap();
    if path.len() == k {
        if g.edge_exists(Edge::new(last, start).unwrap()) {
            out.insert(canonical_cycle(path));
        }
        return;
    }
    for w in g.neighbors(last) {
        if w <= start || path.contains(&w) {
            continue; // keep `start` minimal and the path simple
        }
        path.push(w);
        dfs_cycles(g, k, start, path, out);
        path.pop();
    }
}
