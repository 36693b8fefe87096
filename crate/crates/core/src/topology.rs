//! Static reference topologies and matching decompositions.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Digraph, EvolvingGraph, NodeId};
use crate::matching::{Matching, MatchingSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TopologyKind {
    FatTree,
    UniRegularRing,
    RandomRegularExpander,
    DeBruijn,
    Complete,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    Tor,
    Aggregation,
    Core,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StaticTopology {
    pub kind: TopologyKind,
    pub graph: Digraph,
    pub roles: Vec<Role>,
    /// Hosts attached to each node (zero for non-ToR switches).
    pub hosts: Vec<u32>,
}

impl StaticTopology {
    fn tor_only(kind: TopologyKind, graph: Digraph) -> Self {
        let n = graph.node_count();
        StaticTopology {
            kind,
            graph,
            roles: vec![Role::Tor; n],
            hosts: vec![1; n],
        }
    }

    pub fn node_count(&self) -> usize {
        self.graph.node_count()
    }

    pub fn diameter(&self) -> Option<usize> {
        self.graph.diameter()
    }

    pub fn tors(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.roles
            .iter()
            .enumerate()
            .filter(|(_, r)| **r == Role::Tor)
            .map(|(i, _)| NodeId(i))
    }

    /// The topology as an evolving graph whose edge set never changes.
    pub fn to_evolving(&self) -> Result<EvolvingGraph> {
        let capacity = self.graph.edges().map(|e| e.2).fold(0.0, f64::max);
        let edges = self.graph.edges().map(|(u, v, _)| (u, v)).collect();
        EvolvingGraph::static_graph(self.node_count(), capacity.max(f64::MIN_POSITIVE), edges)
    }
}

/// Three-layer fat-tree of switch radix `radix` at switch granularity:
/// `radix^2 / 2` ToRs (each with `radix / 2` hosts), as many aggregation
/// switches, and `(radix / 2)^2` core switches. Links have unit capacity in
/// both directions.
pub fn fat_tree(racks: usize, radix: usize) -> Result<StaticTopology> {
    if radix < 4 || radix % 2 != 0 {
        return Err(Error::Topology(format!(
            "fat-tree radix must be even and at least 4, got {radix}"
        )));
    }
    let half = radix / 2;
    if racks != radix * half {
        return Err(Error::Topology(format!(
            "a 3-layer fat-tree of radix {radix} has {} racks, not {racks}",
            radix * half
        )));
    }
    let tors = racks;
    let aggs = radix * half;
    let cores = half * half;
    let n = tors + aggs + cores;
    let tor = |pod: usize, e: usize| NodeId(pod * half + e);
    let agg = |pod: usize, a: usize| NodeId(tors + pod * half + a);
    let core = |group: usize, j: usize| NodeId(tors + aggs + group * half + j);

    let mut graph = Digraph::new(n);
    for pod in 0..radix {
        for e in 0..half {
            for a in 0..half {
                graph.add_bidirectional(tor(pod, e), agg(pod, a), 1.0)?;
            }
        }
        for a in 0..half {
            for j in 0..half {
                graph.add_bidirectional(agg(pod, a), core(a, j), 1.0)?;
            }
        }
    }
    let mut roles = vec![Role::Tor; tors];
    roles.extend(std::iter::repeat(Role::Aggregation).take(aggs));
    roles.extend(std::iter::repeat(Role::Core).take(cores));
    let mut hosts = vec![half as u32; tors];
    hosts.extend(std::iter::repeat(0).take(aggs + cores));
    Ok(StaticTopology {
        kind: TopologyKind::FatTree,
        graph,
        roles,
        hosts,
    })
}

/// Bidirectional ring: every ToR uses two network ports.
pub fn uni_regular_ring(racks: usize) -> Result<StaticTopology> {
    if racks < 3 {
        return Err(Error::Topology(format!("ring needs at least 3 racks, got {racks}")));
    }
    let mut graph = Digraph::new(racks);
    for i in 0..racks {
        graph.add_bidirectional(NodeId(i), NodeId((i + 1) % racks), 1.0)?;
    }
    Ok(StaticTopology::tor_only(TopologyKind::UniRegularRing, graph))
}

/// Every ordered pair connected with unit capacity.
pub fn complete(n: usize) -> Result<StaticTopology> {
    if n < 2 {
        return Err(Error::Topology(format!("complete graph needs n >= 2, got {n}")));
    }
    let mut graph = Digraph::new(n);
    for u in 0..n {
        for v in 0..n {
            if u != v {
                graph.add_edge(NodeId(u), NodeId(v), 1.0)?;
            }
        }
    }
    Ok(StaticTopology::tor_only(TopologyKind::Complete, graph))
}

/// Union of the two De Bruijn matchings: the 2-regular De Bruijn graph with
/// its two self-loops replaced by the 2-cycle `0 <-> n-1`.
pub fn de_bruijn(n: usize) -> Result<StaticTopology> {
    let set = de_bruijn_matchings(n)?;
    Ok(StaticTopology::tor_only(
        TopologyKind::DeBruijn,
        matchings_union(n, set.iter(), 1.0),
    ))
}

/// Seeded `degree`-regular directed expander: the union of `degree`
/// pairwise edge-disjoint random derangements, redrawn until strongly
/// connected.
pub fn random_regular_expander(n: usize, degree: usize, seed: u64) -> Result<StaticTopology> {
    if n < 3 || degree == 0 || degree >= n {
        return Err(Error::Topology(format!(
            "random regular expander needs n >= 3 and 1 <= degree < n, got n={n}, degree={degree}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..10_000 {
        let mut graph = Digraph::new(n);
        let mut ok = true;
        'perm: for _ in 0..degree {
            for _ in 0..1_000 {
                let mut perm: Vec<usize> = (0..n).collect();
                perm.shuffle(&mut rng);
                let fits = (0..n).all(|i| perm[i] != i && !graph.contains(NodeId(i), NodeId(perm[i])));
                if fits {
                    for (i, &j) in perm.iter().enumerate() {
                        graph.add_edge(NodeId(i), NodeId(j), 1.0)?;
                    }
                    continue 'perm;
                }
            }
            ok = false;
            break;
        }
        if ok && graph.is_strongly_connected() {
            return Ok(StaticTopology::tor_only(TopologyKind::RandomRegularExpander, graph));
        }
    }
    Err(Error::Topology(format!(
        "no connected {degree}-regular expander found for n={n}"
    )))
}

/// Rotate the `bits`-bit label `i` left by one position.
fn rotate_left(i: usize, bits: u32) -> usize {
    let mask = (1usize << bits) - 1;
    ((i << 1) | (i >> (bits - 1))) & mask
}

/// Decomposes the binary De Bruijn graph on `n = 2^k` nodes into two
/// perfect matchings.
///
/// `M1` maps `i` to its left rotation with the low bit flipped. `M0` maps
/// `i` to its left rotation, except that the rotation's fixed points `0`
/// and `n - 1` are matched to each other instead of to themselves. Every
/// non-loop shift edge `i -> 2i mod n` or `i -> 2i + 1 mod n` is in exactly
/// one of the two.
pub fn de_bruijn_matchings(n: usize) -> Result<MatchingSet> {
    if n < 2 || !n.is_power_of_two() {
        return Err(Error::Topology(format!(
            "De Bruijn matchings need n a power of two (n >= 2), got {n}"
        )));
    }
    let bits = n.trailing_zeros();
    let m0 = Matching::from_map(n, |i| {
        if i == 0 {
            n - 1
        } else if i == n - 1 {
            0
        } else {
            rotate_left(i, bits)
        }
    })?;
    let m1 = Matching::from_map(n, |i| rotate_left(i, bits) ^ 1)?;
    MatchingSet::new(n, vec![m0, m1])
}

/// Round-robin tournament (circle method) decomposition of the complete
/// graph. For even `n` this yields `n - 1` perfect matchings; for odd `n`,
/// `n` matchings each leaving one port idle. Each matching is symmetric
/// (contains `u -> v` and `v -> u`), so over a full cycle every ordered pair
/// is connected exactly once.
pub fn round_robin_matchings(n: usize) -> Result<MatchingSet> {
    if n < 2 {
        return Err(Error::Topology(format!("round-robin needs n >= 2, got {n}")));
    }
    let even = if n % 2 == 0 { n } else { n + 1 };
    let rounds = even - 1;
    let fixed = even - 1;
    let mut out = Vec::with_capacity(rounds);
    for r in 0..rounds {
        let mut pairs = Vec::with_capacity(even);
        let mut add = |a: usize, b: usize| {
            if a < n && b < n {
                pairs.push((NodeId(a), NodeId(b)));
                pairs.push((NodeId(b), NodeId(a)));
            }
        };
        add(fixed, r);
        for k in 1..even / 2 {
            add((r + k) % rounds, (r + rounds - k) % rounds);
        }
        out.push(Matching::new(n, pairs)?);
    }
    MatchingSet::new(n, out)
}

/// Union of matchings as a graph; coincident pairs add `capacity` each.
pub fn matchings_union<'a, I>(n: usize, matchings: I, capacity: f64) -> Digraph
where
    I: IntoIterator<Item = &'a Matching>,
{
    let mut g = Digraph::new(n);
    for m in matchings {
        for (u, v) in m.pairs() {
            g.add_edge(u, v, capacity).expect("matching pairs are valid edges");
        }
    }
    g
}
