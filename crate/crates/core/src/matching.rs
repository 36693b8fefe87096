//! Directed matchings (partial permutations) and maximum-weight matching.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::NodeId;

/// A partial permutation of `n` ports: every source and every destination
/// appears at most once, and no port is matched to itself.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "MatchingRepr", into = "MatchingRepr")]
pub struct Matching {
    dst_of: Vec<Option<NodeId>>,
}

#[derive(Serialize, Deserialize)]
struct MatchingRepr {
    n: usize,
    pairs: Vec<(NodeId, NodeId)>,
}

impl TryFrom<MatchingRepr> for Matching {
    type Error = Error;

    fn try_from(r: MatchingRepr) -> Result<Self> {
        Matching::new(r.n, r.pairs)
    }
}

impl From<Matching> for MatchingRepr {
    fn from(m: Matching) -> Self {
        MatchingRepr {
            n: m.n(),
            pairs: m.pairs().collect(),
        }
    }
}

impl fmt::Debug for Matching {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set()
            .entries(self.pairs().map(|(u, v)| format!("{u}->{v}")))
            .finish()
    }
}

impl Matching {
    pub fn new<I>(n: usize, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (NodeId, NodeId)>,
    {
        let mut dst_of = vec![None; n];
        let mut taken = vec![false; n];
        for (u, v) in pairs {
            if u.0 >= n || v.0 >= n {
                return Err(Error::InvalidMatching(format!(
                    "pair ({u}, {v}) outside 0..{n}"
                )));
            }
            if u == v {
                return Err(Error::InvalidMatching(format!("self-loop at {u}")));
            }
            if dst_of[u.0].is_some() {
                return Err(Error::InvalidMatching(format!("source {u} matched twice")));
            }
            if taken[v.0] {
                return Err(Error::InvalidMatching(format!("destination {v} matched twice")));
            }
            dst_of[u.0] = Some(v);
            taken[v.0] = true;
        }
        Ok(Matching { dst_of })
    }

    pub fn empty(n: usize) -> Self {
        Matching {
            dst_of: vec![None; n],
        }
    }

    /// Builds a matching from a port map, dropping fixed points.
    pub fn from_map<F: Fn(usize) -> usize>(n: usize, f: F) -> Result<Self> {
        Matching::new(
            n,
            (0..n)
                .map(|i| (i, f(i)))
                .filter(|&(i, j)| i != j)
                .map(|(i, j)| (NodeId(i), NodeId(j))),
        )
    }

    pub fn n(&self) -> usize {
        self.dst_of.len()
    }

    pub fn len(&self) -> usize {
        self.dst_of.iter().flatten().count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_perfect(&self) -> bool {
        self.dst_of.iter().all(Option::is_some)
    }

    pub fn dst(&self, src: NodeId) -> Option<NodeId> {
        self.dst_of.get(src.0).copied().flatten()
    }

    pub fn contains(&self, src: NodeId, dst: NodeId) -> bool {
        self.dst(src) == Some(dst)
    }

    /// Matched pairs in ascending source order.
    pub fn pairs(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.dst_of
            .iter()
            .enumerate()
            .filter_map(|(i, d)| d.map(|d| (NodeId(i), d)))
    }

    /// Sum of `weights[src][dst]` over matched pairs.
    pub fn weight(&self, weights: &[Vec<f64>]) -> f64 {
        self.pairs().map(|(u, v)| weights[u.0][v.0]).sum()
    }

    pub fn is_disjoint_from(&self, other: &Matching) -> bool {
        self.pairs().all(|(u, v)| !other.contains(u, v))
    }
}

/// An ordered list of matchings over the same port count.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchingSet {
    n: usize,
    matchings: Vec<Matching>,
}

impl MatchingSet {
    pub fn new(n: usize, matchings: Vec<Matching>) -> Result<Self> {
        if let Some(m) = matchings.iter().find(|m| m.n() != n) {
            return Err(Error::InvalidMatching(format!(
                "matching over {} ports in a set over {n}",
                m.n()
            )));
        }
        Ok(MatchingSet { n, matchings })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.matchings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matchings.is_empty()
    }

    pub fn get(&self, i: usize) -> &Matching {
        &self.matchings[i]
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Matching> {
        self.matchings.iter()
    }

    pub fn into_vec(self) -> Vec<Matching> {
        self.matchings
    }
}

impl<'a> IntoIterator for &'a MatchingSet {
    type Item = &'a Matching;
    type IntoIter = std::slice::Iter<'a, Matching>;

    fn into_iter(self) -> Self::IntoIter {
        self.matchings.iter()
    }
}

/// Which algorithm picks a matching from a weight matrix.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatchPolicy {
    /// Exact maximum-weight assignment.
    #[default]
    MaxWeight,
    /// Heaviest-pair-first greedy; a 1/2-approximation for large `n`.
    Greedy,
}

impl MatchPolicy {
    pub fn select(self, weights: &[Vec<f64>]) -> Matching {
        match self {
            MatchPolicy::MaxWeight => max_weight_matching(weights),
            MatchPolicy::Greedy => greedy_matching(weights),
        }
    }
}

/// Exact maximum-weight directed matching of a square non-negative weight
/// matrix (diagonal ignored).
///
/// Among optimal assignments the lexicographically smallest one (by
/// destination of port 0, then port 1, ...) is chosen; pairs of weight zero
/// are then left unmatched.
pub fn max_weight_matching(weights: &[Vec<f64>]) -> Matching {
    let n = weights.len();
    if n == 0 {
        return Matching::empty(0);
    }
    let w = |i: usize, j: usize| if i == j { 0.0 } else { weights[i][j].max(0.0) };
    let max_w = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| w(i, j))
        .fold(0.0_f64, f64::max);
    if max_w == 0.0 {
        return Matching::empty(n);
    }
    let cost: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| max_w - w(i, j)).collect())
        .collect();
    let (assign, u, v) = hungarian(&cost);
    let tol = 1e-9 * max_w * n as f64;
    let tight: Vec<Vec<bool>> = (0..n)
        .map(|i| (0..n).map(|j| cost[i][j] - u[i] - v[j] <= tol).collect())
        .collect();
    let assign = lexicographic_refine(&tight, assign);
    Matching::new(
        n,
        assign
            .iter()
            .enumerate()
            .filter(|&(i, &j)| i != j && w(i, j) > 0.0)
            .map(|(i, &j)| (NodeId(i), NodeId(j))),
    )
    .expect("assignment is a permutation")
}

/// Greedy matching: pairs by descending weight, ties by `(src, dst)`.
pub fn greedy_matching(weights: &[Vec<f64>]) -> Matching {
    let n = weights.len();
    let mut pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|&(i, j)| i != j && weights[i][j] > 0.0)
        .collect();
    pairs.sort_by(|a, b| {
        weights[b.0][b.1]
            .total_cmp(&weights[a.0][a.1])
            .then(a.cmp(b))
    });
    let mut src_used = vec![false; n];
    let mut dst_used = vec![false; n];
    let mut chosen = Vec::new();
    for (i, j) in pairs {
        if !src_used[i] && !dst_used[j] {
            src_used[i] = true;
            dst_used[j] = true;
            chosen.push((NodeId(i), NodeId(j)));
        }
    }
    Matching::new(n, chosen).expect("greedy pairs are disjoint")
}

/// Minimum-cost assignment (shortest augmenting path with potentials).
/// Returns the row-to-column assignment and the optimal dual potentials,
/// with `u[i] + v[j] <= cost[i][j]` and equality on assigned pairs.
fn hungarian(cost: &[Vec<f64>]) -> (Vec<usize>, Vec<f64>, Vec<f64>) {
    let n = cost.len();
    // 1-based internally; index 0 is the virtual root column.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![0; n];
    for j in 1..=n {
        assign[row_of[j] - 1] = j - 1;
    }
    (assign, u[1..].to_vec(), v[1..].to_vec())
}

/// Given a perfect matching inside the tight-edge graph, returns the
/// lexicographically smallest perfect matching of that graph. Every optimal
/// assignment uses only tight edges, so this selects the smallest optimum.
fn lexicographic_refine(tight: &[Vec<bool>], mut assign: Vec<usize>) -> Vec<usize> {
    let n = assign.len();
    let mut row_of = vec![0; n];
    for (i, &j) in assign.iter().enumerate() {
        row_of[j] = i;
    }
    for i in 0..n {
        for j in 0..n {
            if !tight[i][j] {
                continue;
            }
            if assign[i] == j {
                break;
            }
            let owner = row_of[j];
            if owner < i {
                continue;
            }
            // Move row i to column j; the displaced owner must reach the
            // column row i gave up through rows that are not yet fixed.
            let freed = assign[i];
            let snapshot = (assign.clone(), row_of.clone());
            assign[i] = j;
            row_of[j] = i;
            let mut visited = vec![false; n];
            if augment(owner, freed, i, tight, &mut assign, &mut row_of, &mut visited) {
                break;
            }
            (assign, row_of) = snapshot;
        }
    }
    assign
}

fn augment(
    row: usize,
    target: usize,
    fixed_upto: usize,
    tight: &[Vec<bool>],
    assign: &mut [usize],
    row_of: &mut [usize],
    visited: &mut [bool],
) -> bool {
    for col in 0..assign.len() {
        if !tight[row][col] || visited[col] {
            continue;
        }
        visited[col] = true;
        if col == target {
            assign[row] = col;
            row_of[col] = row;
            return true;
        }
        let other = row_of[col];
        if other <= fixed_upto || other == row {
            continue;
        }
        if augment(other, target, fixed_upto, tight, assign, row_of, visited) {
            assign[row] = col;
            row_of[col] = row;
            return true;
        }
    }
    false
}
