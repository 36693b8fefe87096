//! Independent oracles shared by the integration tests.

#![allow(dead_code)]

use std::collections::BTreeMap;

use minilp::{ComparisonOp, OptimizationDirection, Problem, Variable};
use rdcn::traffic::DemandMatrix;
use rdcn::{Digraph, NodeId};

/// Every simple path from `s` to `t` over positive-capacity edges.
pub fn simple_paths(g: &Digraph, s: NodeId, t: NodeId) -> Vec<Vec<NodeId>> {
    let mut out = Vec::new();
    let mut stack = vec![vec![s]];
    while let Some(path) = stack.pop() {
        let last = *path.last().unwrap();
        if last == t {
            out.push(path);
            continue;
        }
        for (v, c) in g.out_edges(last) {
            if c > 0.0 && !path.contains(&v) {
                let mut p = path.clone();
                p.push(v);
                stack.push(p);
            }
        }
    }
    out
}

/// Exact maximum concurrent flow: maximise θ subject to every commodity
/// receiving θ d over its simple paths and every edge within capacity.
pub fn lp_throughput(g: &Digraph, d: &DemandMatrix) -> f64 {
    let mut pb = Problem::new(OptimizationDirection::Maximize);
    let theta = pb.add_var(1.0, (0.0, f64::INFINITY));
    let mut on_edge: BTreeMap<(NodeId, NodeId), Vec<Variable>> = BTreeMap::new();
    for (s, t, dem) in d.entries() {
        if dem <= 0.0 {
            continue;
        }
        let mut row = vec![(theta, -dem)];
        for path in simple_paths(g, s, t) {
            let x = pb.add_var(0.0, (0.0, f64::INFINITY));
            for w in path.windows(2) {
                on_edge.entry((w[0], w[1])).or_default().push(x);
            }
            row.push((x, 1.0));
        }
        pb.add_constraint(&row, ComparisonOp::Ge, 0.0);
    }
    for ((u, v), xs) in on_edge {
        let row: Vec<(Variable, f64)> = xs.iter().map(|&x| (x, 1.0)).collect();
        pb.add_constraint(&row, ComparisonOp::Le, g.capacity(u, v));
    }
    pb.solve().expect("LP feasible").objective()
}

/// All-pairs hop distances by Floyd-Warshall.
pub fn hop_distances(g: &Digraph) -> Vec<Vec<Option<usize>>> {
    let n = g.node_count();
    let mut d = vec![vec![None; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = Some(0);
    }
    for (u, v, c) in g.edges() {
        if c > 0.0 {
            d[u.0][v.0] = Some(1);
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if let (Some(a), Some(b)) = (d[i][k], d[k][j]) {
                    if d[i][j].map_or(true, |x| a + b < x) {
                        d[i][j] = Some(a + b);
                    }
                }
            }
        }
    }
    d
}

pub fn diameter(g: &Digraph) -> Option<usize> {
    let d = hop_distances(g);
    let mut best = 0;
    for row in &d {
        for x in row {
            best = best.max((*x)?);
        }
    }
    Some(best)
}

/// All permutations of `0..n`.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn go(cur: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if cur.len() == used.len() {
            out.push(cur.clone());
            return;
        }
        for v in 0..used.len() {
            if !used[v] {
                used[v] = true;
                cur.push(v);
                go(cur, used, out);
                cur.pop();
                used[v] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}
