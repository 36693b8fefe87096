//! Directed timeslot graphs and evolving graphs.
//!
//! An [`EvolvingGraph`] is a lazily evaluated sequence of directed graphs
//! `G_t = (V, E_t)` over a fixed node set, one per whole-numbered timeslot.
//! Edges are produced as [`Circuit`]s tagged with the layer (spine switch)
//! that carries them. A circuit that is present at `t` but was not carried
//! by the same layer at `t - 1` spends slot `t` reconfiguring and has
//! capacity zero. Edges of `E_0` count as pre-established.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::ops::Deref;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense zero-based node index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub usize);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl From<usize> for NodeId {
    fn from(i: usize) -> Self {
        NodeId(i)
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub type Edge = (NodeId, NodeId);

/// A directed graph with per-edge capacities. Edges may carry capacity zero
/// (present but unusable, e.g. while reconfiguring).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Digraph {
    n: usize,
    edges: BTreeMap<Edge, f64>,
}

impl Digraph {
    pub fn new(n: usize) -> Self {
        Digraph {
            n,
            edges: BTreeMap::new(),
        }
    }

    /// Builds a graph from `(src, dst, capacity)` triples; capacities of
    /// repeated edges add up.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (NodeId, NodeId, f64)>,
    {
        let mut g = Digraph::new(n);
        for (u, v, c) in edges {
            g.add_edge(u, v, c)?;
        }
        Ok(g)
    }

    /// Adds `capacity` to edge `(u, v)`, creating it if needed.
    pub fn add_edge(&mut self, u: NodeId, v: NodeId, capacity: f64) -> Result<()> {
        if u.0 >= self.n || v.0 >= self.n {
            return Err(Error::param(format!(
                "edge ({u}, {v}) outside node range 0..{}",
                self.n
            )));
        }
        if u == v {
            return Err(Error::param(format!("self-loop at node {u}")));
        }
        if !(capacity >= 0.0 && capacity.is_finite()) {
            return Err(Error::param(format!("capacity {capacity} on ({u}, {v})")));
        }
        *self.edges.entry((u, v)).or_insert(0.0) += capacity;
        Ok(())
    }

    /// Adds both `(u, v)` and `(v, u)`.
    pub fn add_bidirectional(&mut self, u: NodeId, v: NodeId, capacity: f64) -> Result<()> {
        self.add_edge(u, v, capacity)?;
        self.add_edge(v, u, capacity)
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn contains(&self, u: NodeId, v: NodeId) -> bool {
        self.edges.contains_key(&(u, v))
    }

    /// Capacity of `(u, v)`, zero when the edge is absent.
    pub fn capacity(&self, u: NodeId, v: NodeId) -> f64 {
        self.edges.get(&(u, v)).copied().unwrap_or(0.0)
    }

    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId, f64)> + '_ {
        self.edges.iter().map(|(&(u, v), &c)| (u, v, c))
    }

    /// Edges with positive capacity.
    pub fn live_edges(&self) -> impl Iterator<Item = (NodeId, NodeId, f64)> + '_ {
        self.edges().filter(|e| e.2 > 0.0)
    }

    /// Out-neighbours of `u` (any capacity), ascending.
    pub fn out_edges(&self, u: NodeId) -> impl Iterator<Item = (NodeId, f64)> + '_ {
        self.edges
            .range((u, NodeId(0))..=(u, NodeId(usize::MAX)))
            .map(|(&(_, v), &c)| (v, c))
    }

    /// Out-neighbours reachable over a positive-capacity edge, ascending.
    pub fn live_neighbors(&self, u: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.out_edges(u).filter(|&(_, c)| c > 0.0).map(|(v, _)| v)
    }

    pub fn out_degree(&self, u: NodeId) -> usize {
        self.out_edges(u).count()
    }

    pub fn in_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for &(_, v) in self.edges.keys() {
            deg[v.0] += 1;
        }
        deg
    }

    pub fn out_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for &(u, _) in self.edges.keys() {
            deg[u.0] += 1;
        }
        deg
    }

    /// `Some(r)` if every node has in- and out-degree `r`.
    pub fn regularity(&self) -> Option<usize> {
        let out = self.out_degrees();
        let inn = self.in_degrees();
        let r = *out.first()?;
        (out.iter().chain(inn.iter()).all(|&d| d == r)).then_some(r)
    }

    pub fn total_capacity(&self) -> f64 {
        self.edges.values().sum()
    }

    /// Hop distances from `src` over positive-capacity edges.
    pub fn bfs_distances(&self, src: NodeId) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.n];
        let mut queue = VecDeque::new();
        dist[src.0] = Some(0);
        queue.push_back(src);
        while let Some(u) = queue.pop_front() {
            let du = dist[u.0].unwrap();
            for v in self.live_neighbors(u) {
                if dist[v.0].is_none() {
                    dist[v.0] = Some(du + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// Longest shortest-path hop count over all ordered pairs, or `None` if
    /// the graph is not strongly connected.
    pub fn diameter(&self) -> Option<usize> {
        let mut diameter = 0;
        for s in 0..self.n {
            for d in self.bfs_distances(NodeId(s)) {
                diameter = diameter.max(d?);
            }
        }
        Some(diameter)
    }

    pub fn is_strongly_connected(&self) -> bool {
        self.n > 0 && self.diameter().is_some()
    }

    /// Edge-wise union; capacities of shared edges add.
    pub fn union(&self, other: &Digraph) -> Digraph {
        let mut g = self.clone();
        g.n = g.n.max(other.n);
        for (u, v, c) in other.edges() {
            *g.edges.entry((u, v)).or_insert(0.0) += c;
        }
        g
    }

    /// One line per edge, `src dst capacity`, in ascending edge order.
    pub fn to_adjacency_list(&self) -> String {
        let mut out = String::new();
        for (u, v, c) in self.edges() {
            out.push_str(&format!("{u} {v} {c}\n"));
        }
        out
    }

    /// Parses the format written by [`Digraph::to_adjacency_list`]. Blank
    /// lines and lines starting with `#` are skipped.
    pub fn from_adjacency_list(n: usize, text: &str) -> Result<Self> {
        let mut g = Digraph::new(n);
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let bad = || Error::param(format!("adjacency line {}: {line:?}", lineno + 1));
            if fields.len() != 3 {
                return Err(bad());
            }
            let u: usize = fields[0].parse().map_err(|_| bad())?;
            let v: usize = fields[1].parse().map_err(|_| bad())?;
            let c: f64 = fields[2].parse().map_err(|_| bad())?;
            g.add_edge(NodeId(u), NodeId(v), c)?;
        }
        Ok(g)
    }
}

/// The graph `G_t` with effective (reconfiguration-adjusted) capacities.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeslotGraph {
    pub t: u64,
    pub graph: Digraph,
}

impl Deref for TimeslotGraph {
    type Target = Digraph;

    fn deref(&self) -> &Digraph {
        &self.graph
    }
}

/// One directed circuit `src -> dst` realised by layer (spine) `layer`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Circuit {
    pub src: NodeId,
    pub dst: NodeId,
    pub layer: usize,
}

impl Circuit {
    pub fn new(src: NodeId, dst: NodeId, layer: usize) -> Self {
        Circuit { src, dst, layer }
    }

    pub fn edge(&self) -> Edge {
        (self.src, self.dst)
    }
}

/// Rule producing the circuits present at slot `t`. Must be total and
/// deterministic.
pub trait CircuitSchedule: Send + Sync {
    fn circuits_at(&self, t: u64) -> Vec<Circuit>;
}

impl<F> CircuitSchedule for F
where
    F: Fn(u64) -> Vec<Circuit> + Send + Sync,
{
    fn circuits_at(&self, t: u64) -> Vec<Circuit> {
        self(t)
    }
}

/// Constraint on how often a layer may change its configuration.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReconfigPolicy {
    /// `c'`: a layer must keep a configuration for at least `1 + c'` slots.
    pub inter_reconfig_multiplier: u64,
}

/// A layer that changed configuration too soon after its previous change.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ReconfigViolation {
    pub layer: usize,
    pub previous: u64,
    pub t: u64,
}

#[derive(Clone)]
pub struct EvolvingGraph {
    n: usize,
    delta: f64,
    capacity: f64,
    period: Option<u64>,
    degree_bound: Option<usize>,
    regularity: Option<usize>,
    penalty: bool,
    schedule: Arc<dyn CircuitSchedule>,
}

impl fmt::Debug for EvolvingGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EvolvingGraph")
            .field("n", &self.n)
            .field("delta", &self.delta)
            .field("capacity", &self.capacity)
            .field("period", &self.period)
            .field("degree_bound", &self.degree_bound)
            .field("regularity", &self.regularity)
            .field("penalty", &self.penalty)
            .finish_non_exhaustive()
    }
}

impl EvolvingGraph {
    pub fn new(n: usize, capacity: f64, schedule: Arc<dyn CircuitSchedule>) -> Result<Self> {
        if n < 2 {
            return Err(Error::param(format!("evolving graph needs n >= 2, got {n}")));
        }
        if !(capacity > 0.0 && capacity.is_finite()) {
            return Err(Error::param(format!("edge capacity must be positive, got {capacity}")));
        }
        Ok(EvolvingGraph {
            n,
            delta: 1.0,
            capacity,
            period: None,
            degree_bound: None,
            regularity: None,
            penalty: true,
            schedule,
        })
    }

    /// Single-layer graph whose edge set at `t` is `edges(t)`.
    pub fn from_edge_fn<F>(n: usize, capacity: f64, edges: F) -> Result<Self>
    where
        F: Fn(u64) -> Vec<Edge> + Send + Sync + 'static,
    {
        let schedule = move |t: u64| {
            edges(t)
                .into_iter()
                .map(|(u, v)| Circuit::new(u, v, 0))
                .collect::<Vec<_>>()
        };
        EvolvingGraph::new(n, capacity, Arc::new(schedule))
    }

    /// The same edge set at every slot.
    pub fn static_graph(n: usize, capacity: f64, edges: Vec<Edge>) -> Result<Self> {
        Ok(EvolvingGraph::from_edge_fn(n, capacity, move |_| edges.clone())?.with_period(1))
    }

    /// Single-layer periodic graph cycling through `sets`, each held for
    /// `hold` slots; the period is `hold * sets.len()`.
    pub fn cyclic(n: usize, capacity: f64, sets: Vec<Vec<Edge>>, hold: u64) -> Result<Self> {
        if sets.is_empty() || hold == 0 {
            return Err(Error::param("cyclic graph needs at least one edge set and hold >= 1"));
        }
        let len = sets.len() as u64;
        let g = EvolvingGraph::from_edge_fn(n, capacity, move |t| {
            sets[((t / hold) % len) as usize].clone()
        })?;
        Ok(g.with_period(hold * len))
    }

    pub fn with_period(mut self, period: u64) -> Self {
        assert!(period >= 1, "period must be at least one slot");
        self.period = Some(period);
        self
    }

    pub fn with_delta(mut self, seconds: f64) -> Self {
        self.delta = seconds;
        self
    }

    pub fn with_degree_bound(mut self, d: usize) -> Self {
        self.degree_bound = Some(d);
        self
    }

    pub fn with_regularity(mut self, r: usize) -> Self {
        self.regularity = Some(r);
        self
    }

    /// Disables the reconfiguration penalty: every present circuit carries
    /// capacity `c`. Used to isolate the cost of reconfiguration.
    pub fn without_reconfiguration_penalty(mut self) -> Self {
        self.penalty = false;
        self
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn capacity(&self) -> f64 {
        self.capacity
    }

    pub fn period(&self) -> Option<u64> {
        self.period
    }

    pub fn degree_bound(&self) -> Option<usize> {
        self.degree_bound
    }

    pub fn regularity(&self) -> Option<usize> {
        self.regularity
    }

    /// Circuits present at `t`, deduplicated and sorted.
    ///
    /// Panics if the schedule produces a circuit outside the node range or a
    /// self-loop; schedules are expected to be validated at construction.
    pub fn circuits_at(&self, t: u64) -> BTreeSet<Circuit> {
        let circuits: BTreeSet<Circuit> = self.schedule.circuits_at(t).into_iter().collect();
        for c in &circuits {
            assert!(
                c.src.0 < self.n && c.dst.0 < self.n && c.src != c.dst,
                "schedule produced invalid circuit {c:?} at t={t}"
            );
        }
        circuits
    }

    /// The raw edge set `E_t`.
    pub fn edges_at(&self, t: u64) -> BTreeSet<Edge> {
        self.circuits_at(t).iter().map(Circuit::edge).collect()
    }

    /// Circuits of slot `t` that are usable (established before `t`).
    fn live_circuits(&self, t: u64, now: &BTreeSet<Circuit>) -> Vec<Circuit> {
        if t == 0 || !self.penalty {
            return now.iter().copied().collect();
        }
        let before = self.circuits_at(t - 1);
        now.iter().filter(|c| before.contains(c)).copied().collect()
    }

    /// `G_t` with capacities adjusted for reconfiguration: an edge carries
    /// `c` per layer that already carried it at `t - 1`, so newly established
    /// edges appear with capacity zero.
    pub fn graph_at(&self, t: u64) -> TimeslotGraph {
        let now = self.circuits_at(t);
        let mut graph = Digraph::new(self.n);
        for c in &now {
            graph.add_edge(c.src, c.dst, 0.0).expect("validated circuit");
        }
        for c in self.live_circuits(t, &now) {
            graph
                .add_edge(c.src, c.dst, self.capacity)
                .expect("validated circuit");
        }
        TimeslotGraph { t, graph }
    }

    pub fn effective_capacity(&self, edge: Edge, t: u64) -> f64 {
        let now: BTreeSet<Circuit> = self
            .circuits_at(t)
            .into_iter()
            .filter(|c| c.edge() == edge)
            .collect();
        self.live_circuits(t, &now).len() as f64 * self.capacity
    }

    /// For every edge, the number of slots in `[0, horizon)` in which it was
    /// present with its capacity forced to zero by reconfiguration.
    pub fn reconfig_slots(&self, horizon: u64) -> BTreeMap<Edge, u64> {
        let mut counts: BTreeMap<Edge, u64> = BTreeMap::new();
        let mut prev: Option<BTreeSet<Circuit>> = None;
        for t in 0..horizon {
            let now = self.circuits_at(t);
            let mut live_by_edge: BTreeMap<Edge, usize> = BTreeMap::new();
            for c in &now {
                let live = !self.penalty || prev.as_ref().map_or(true, |p| p.contains(c));
                let entry = live_by_edge.entry(c.edge()).or_insert(0);
                if live {
                    *entry += 1;
                }
            }
            for (edge, live) in live_by_edge {
                let slot = counts.entry(edge).or_insert(0);
                if live == 0 {
                    *slot += 1;
                }
            }
            prev = Some(now);
        }
        counts
    }

    /// `(reconfiguring, present)` circuit-slot counts over `[start, start + len)`.
    pub fn circuit_slot_counts(&self, start: u64, len: u64) -> (u64, u64) {
        let mut reconfiguring = 0;
        let mut present = 0;
        let mut prev = if start == 0 {
            None
        } else {
            Some(self.circuits_at(start - 1))
        };
        for t in start..start + len {
            let now = self.circuits_at(t);
            present += now.len() as u64;
            if self.penalty {
                if let Some(p) = &prev {
                    reconfiguring += now.iter().filter(|c| !p.contains(c)).count() as u64;
                }
            }
            prev = Some(now);
        }
        (reconfiguring, present)
    }

    /// Checks the declared degree bound and regularity at slot `t`.
    pub fn check_constraints_at(&self, t: u64) -> Result<()> {
        let g = self.graph_at(t);
        let out = g.out_degrees();
        let inn = g.in_degrees();
        if let Some(d) = self.degree_bound {
            if let Some(v) = (0..self.n).find(|&v| out[v] > d || inn[v] > d) {
                return Err(Error::param(format!(
                    "t={t}: node {v} has degree (out {}, in {}) above bound {d}",
                    out[v], inn[v]
                )));
            }
        }
        if let Some(r) = self.regularity {
            if let Some(v) = (0..self.n).find(|&v| out[v] != r || inn[v] != r) {
                return Err(Error::param(format!(
                    "t={t}: node {v} has degree (out {}, in {}), expected {r}-regular",
                    out[v], inn[v]
                )));
            }
        }
        Ok(())
    }

    /// First layer change in `[0, horizon)` that comes less than
    /// `1 + c'` slots after that layer's previous change.
    pub fn check_inter_reconfig(
        &self,
        policy: ReconfigPolicy,
        horizon: u64,
    ) -> Option<ReconfigViolation> {
        let spacing = 1 + policy.inter_reconfig_multiplier;
        let mut last_change: BTreeMap<usize, u64> = BTreeMap::new();
        let mut prev_layers: BTreeMap<usize, BTreeSet<Edge>> = BTreeMap::new();
        for t in 0..horizon {
            let mut layers: BTreeMap<usize, BTreeSet<Edge>> = BTreeMap::new();
            for c in self.circuits_at(t) {
                layers.entry(c.layer).or_default().insert(c.edge());
            }
            if t > 0 {
                let ids: BTreeSet<usize> = layers.keys().chain(prev_layers.keys()).copied().collect();
                for layer in ids {
                    if layers.get(&layer) != prev_layers.get(&layer) {
                        if let Some(&previous) = last_change.get(&layer) {
                            if t - previous < spacing {
                                return Some(ReconfigViolation { layer, previous, t });
                            }
                        }
                        last_change.insert(layer, t);
                    }
                }
            }
            prev_layers = layers;
        }
        None
    }

    /// True if `E_{t + period} = E_t` for every sampled `t`.
    pub fn is_periodic_at<I: IntoIterator<Item = u64>>(&self, period: u64, samples: I) -> bool {
        samples
            .into_iter()
            .all(|t| self.circuits_at(t) == self.circuits_at(t + period))
    }

    /// Union of the edge sets over `[start, start + len)`, each edge with
    /// capacity `c`.
    pub fn union_over(&self, start: u64, len: u64) -> Digraph {
        let mut edges = BTreeSet::new();
        for t in start..start + len {
            edges.extend(self.edges_at(t));
        }
        let mut g = Digraph::new(self.n);
        for (u, v) in edges {
            g.add_edge(u, v, self.capacity).expect("validated edge");
        }
        g
    }
}
