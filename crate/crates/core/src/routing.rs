//! Path selection on timeslot graphs.

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Digraph, NodeId, TimeslotGraph};

/// A path chosen at `slot`. Consecutive hops are joined by a live edge at
/// the slot the hop is used; for a Valiant route the second hop is used
/// once the rotor brings its circuit up.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Route {
    pub hops: Vec<NodeId>,
    pub slot: u64,
}

impl Route {
    pub fn hop_count(&self) -> usize {
        self.hops.len() - 1
    }

    pub fn src(&self) -> NodeId {
        self.hops[0]
    }

    pub fn dst(&self) -> NodeId {
        *self.hops.last().expect("route has at least two nodes")
    }

    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.hops.windows(2).map(|w| (w[0], w[1]))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum RouteError {
    #[error("source and destination are both {0}")]
    SameEndpoints(NodeId),
    #[error("no route from {src} to {dst} in this slot")]
    NoRoute { src: NodeId, dst: NodeId },
    #[error("De Bruijn routing needs n a power of two, got {0}")]
    NotPowerOfTwo(usize),
    #[error("node {0} outside the graph")]
    OutOfRange(NodeId),
}

/// How taxes are measured: which route a unit of demand takes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "policy")]
pub enum RoutingPolicy {
    /// Minimum-hop multi-hop forwarding.
    ShortestPath,
    /// Shift-register routing on De Bruijn labels.
    DeBruijnGreedy,
    /// Direct circuit if live, else two hops via a random live neighbour.
    Valiant { seed: u64 },
    /// Direct circuits only.
    Direct,
}

fn check(n: usize, src: NodeId, dst: NodeId) -> Result<(), RouteError> {
    if src.0 >= n {
        return Err(RouteError::OutOfRange(src));
    }
    if dst.0 >= n {
        return Err(RouteError::OutOfRange(dst));
    }
    if src == dst {
        return Err(RouteError::SameEndpoints(src));
    }
    Ok(())
}

/// Minimum-hop path over positive-capacity edges; among those, the
/// lexicographically smallest node sequence.
pub fn shortest_path(g: &TimeslotGraph, src: NodeId, dst: NodeId) -> Result<Route, RouteError> {
    shortest_path_in(&g.graph, g.t, src, dst)
}

pub fn shortest_path_in(g: &Digraph, slot: u64, src: NodeId, dst: NodeId) -> Result<Route, RouteError> {
    let n = g.node_count();
    check(n, src, dst)?;
    let dist = distances_to(g, dst);
    let Some(mut remaining) = dist[src.0] else {
        return Err(RouteError::NoRoute { src, dst });
    };
    let mut hops = vec![src];
    let mut cur = src;
    while remaining > 0 {
        cur = g
            .live_neighbors(cur)
            .find(|v| dist[v.0] == Some(remaining - 1))
            .expect("BFS layer has a successor");
        hops.push(cur);
        remaining -= 1;
    }
    Ok(Route { hops, slot })
}

/// Hop distance from every node to `dst` over positive-capacity edges.
pub fn distances_to(g: &Digraph, dst: NodeId) -> Vec<Option<usize>> {
    let n = g.node_count();
    let mut preds: Vec<Vec<NodeId>> = vec![Vec::new(); n];
    for (u, v, _) in g.live_edges() {
        preds[v.0].push(u);
    }
    let mut dist = vec![None; n];
    dist[dst.0] = Some(0);
    let mut queue = std::collections::VecDeque::from([dst]);
    while let Some(v) = queue.pop_front() {
        let d = dist[v.0].unwrap();
        for &u in &preds[v.0] {
            if dist[u.0].is_none() {
                dist[u.0] = Some(d + 1);
                queue.push_back(u);
            }
        }
    }
    dist
}

/// Shift-register routing on the binary De Bruijn graph with `n = 2^k`
/// nodes: find the longest suffix of `src` that is a prefix of `dst`, then
/// shift in the remaining bits of `dst` one per hop. At most `k` hops and no
/// state beyond the labels.
pub fn debruijn_greedy(n: usize, src: NodeId, dst: NodeId) -> Result<Route, RouteError> {
    if n < 2 || !n.is_power_of_two() {
        return Err(RouteError::NotPowerOfTwo(n));
    }
    check(n, src, dst)?;
    let k = n.trailing_zeros() as usize;
    let mask = n - 1;
    let overlap = (1..k)
        .rev()
        .find(|&l| src.0 & ((1 << l) - 1) == dst.0 >> (k - l))
        .unwrap_or(0);
    let mut hops = vec![src];
    let mut cur = src.0;
    for i in (0..k - overlap).rev() {
        let bit = (dst.0 >> i) & 1;
        cur = ((cur << 1) | bit) & mask;
        hops.push(NodeId(cur));
    }
    Ok(Route { hops, slot: 0 })
}

/// Valiant load balancing over a rotor union. Uses the direct circuit when
/// it is live; otherwise relays through a uniformly random live neighbour
/// `w` of `src` whose onward circuit `w -> dst` appears somewhere in
/// `cycle`, the union of the rotor's edges over one period.
pub fn valiant_route<R: Rng + ?Sized>(
    g: &TimeslotGraph,
    cycle: &Digraph,
    src: NodeId,
    dst: NodeId,
    rng: &mut R,
) -> Result<Route, RouteError> {
    check(g.node_count(), src, dst)?;
    if g.capacity(src, dst) > 0.0 {
        return Ok(Route {
            hops: vec![src, dst],
            slot: g.t,
        });
    }
    let relays: Vec<NodeId> = g
        .live_neighbors(src)
        .filter(|&w| w != dst && cycle.contains(w, dst))
        .collect();
    match relays.choose(rng) {
        Some(&w) => Ok(Route {
            hops: vec![src, w, dst],
            slot: g.t,
        }),
        None => Err(RouteError::NoRoute { src, dst }),
    }
}
