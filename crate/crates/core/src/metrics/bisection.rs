//! Exact bisection bandwidth by cut enumeration.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Digraph, NodeId};

/// Largest graph handled by exhaustive enumeration.
pub const BISECTION_MAX_N: usize = 20;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BisectionReport {
    /// Capacity crossing the worst cut, both directions summed.
    pub bandwidth: f64,
    /// Over all balanced cuts, the smaller of the two directional crossings.
    pub min_directional: f64,
    /// One side of a cut achieving `bandwidth`; always contains node 0.
    pub cut: Vec<NodeId>,
    /// Every direction of every balanced cut carries at least half the
    /// total host traffic.
    pub full_bisection: bool,
}

/// Minimum crossing capacity over all cuts that split the hosts in half.
///
/// `hosts[v]` is the number of hosts at node `v` (all ones for a ToR-level
/// graph); a cut is balanced when each side holds half of them, and nodes
/// without hosts may fall on either side. Each host sends at `host_rate`.
pub fn bisection_bandwidth(g: &Digraph, hosts: &[u32], host_rate: f64) -> Result<BisectionReport> {
    let n = g.node_count();
    if n > BISECTION_MAX_N {
        return Err(Error::param(format!(
            "bisection enumeration limited to n <= {BISECTION_MAX_N}, got {n}"
        )));
    }
    if hosts.len() != n {
        return Err(Error::param(format!("{} host counts for {n} nodes", hosts.len())));
    }
    let total: u32 = hosts.iter().sum();
    if total == 0 || total % 2 != 0 {
        return Err(Error::param(format!("cannot halve {total} hosts")));
    }
    let edges: Vec<(usize, usize, f64)> = g.live_edges().map(|(u, v, c)| (u.0, v.0, c)).collect();
    let mut best = (f64::INFINITY, 0u32);
    let mut min_directional = f64::INFINITY;
    // node 0 stays on side A; the mirrored cut has the same crossing
    for rest in 0..1u32 << (n - 1) {
        let side = (rest << 1) | 1;
        let held: u32 = (0..n).filter(|&v| side >> v & 1 == 1).map(|v| hosts[v]).sum();
        if held * 2 != total {
            continue;
        }
        let (mut ab, mut ba) = (0.0, 0.0);
        for &(u, v, c) in &edges {
            match (side >> u & 1, side >> v & 1) {
                (1, 0) => ab += c,
                (0, 1) => ba += c,
                _ => {}
            }
        }
        if ab + ba < best.0 {
            best = (ab + ba, side);
        }
        min_directional = min_directional.min(ab.min(ba));
    }
    let half_traffic = total as f64 * host_rate / 2.0;
    Ok(BisectionReport {
        bandwidth: best.0,
        min_directional,
        cut: (0..n).filter(|&v| best.1 >> v & 1 == 1).map(NodeId).collect(),
        full_bisection: min_directional >= half_traffic - 1e-9,
    })
}
