//! Bandwidth and latency taxes of an evolving graph under a routing policy.

use std::collections::BTreeSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Edge, EvolvingGraph, TimeslotGraph};
use crate::routing::{debruijn_greedy, shortest_path, valiant_route, Route, RouteError, RoutingPolicy};
use crate::traffic::DemandMatrix;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaxReport {
    /// Demand-weighted mean hop count over slots in which the pair is
    /// routable; infinite (serialised as null) if no demand is ever routable.
    pub expected_route_length: f64,
    /// `expected_route_length - 1`: extra hops per delivered byte.
    pub bandwidth_tax: f64,
    /// Fraction of circuit-slots spent reconfiguring.
    pub latency_tax: f64,
    /// Fraction of demand whose pair is routable in at least one slot.
    pub coverage: f64,
    /// Set when `coverage < 1`.
    pub flagged: bool,
}

/// Taxes over `horizon` slots. Periodic graphs are measured from slot `Γ`
/// on, past the pre-established start, and need `horizon >= Γ`; others
/// from slot 0.
pub fn taxes(g: &EvolvingGraph, demand: &DemandMatrix, policy: RoutingPolicy, horizon: u64) -> Result<TaxReport> {
    let n = g.node_count();
    if demand.n() != n {
        return Err(Error::param(format!("demand is {}x{}, graph has {n} nodes", demand.n(), demand.n())));
    }
    if horizon == 0 {
        return Err(Error::param("tax horizon must be at least one slot"));
    }
    let start = match g.period() {
        Some(p) if horizon < p => {
            return Err(Error::param(format!("tax horizon {horizon} shorter than period {p}")));
        }
        Some(p) => p,
        None => 0,
    };
    let (reconfiguring, present) = g.circuit_slot_counts(start, horizon);
    let latency_tax = if present == 0 { 0.0 } else { reconfiguring as f64 / present as f64 };

    let cycle = g.union_over(start, g.period().unwrap_or(horizon));
    let mut rng = match policy {
        RoutingPolicy::Valiant { seed } => Some(ChaCha8Rng::seed_from_u64(seed)),
        _ => None,
    };
    let pairs: Vec<(Edge, f64)> = demand.entries().filter(|e| e.2 > 0.0).map(|(u, v, d)| ((u, v), d)).collect();
    let mut hop_volume = 0.0;
    let mut routed_volume = 0.0;
    let mut covered: BTreeSet<Edge> = BTreeSet::new();
    for t in start..start + horizon {
        let slot = g.graph_at(t);
        for &((u, v), d) in &pairs {
            let route = match policy {
                RoutingPolicy::ShortestPath => shortest_path(&slot, u, v),
                RoutingPolicy::DeBruijnGreedy => debruijn_greedy(n, u, v).and_then(|r| live(&slot, r)),
                RoutingPolicy::Valiant { .. } => valiant_route(&slot, &cycle, u, v, rng.as_mut().unwrap()),
                RoutingPolicy::Direct => live(
                    &slot,
                    Route {
                        hops: vec![u, v],
                        slot: t,
                    },
                ),
            };
            match route {
                Ok(r) => {
                    hop_volume += d * r.hop_count() as f64;
                    routed_volume += d;
                    covered.insert((u, v));
                }
                Err(RouteError::NoRoute { .. }) => {}
                Err(e) => return Err(Error::param(e.to_string())),
            }
        }
    }
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    let coverage = if total == 0.0 {
        1.0
    } else {
        pairs.iter().filter(|p| covered.contains(&p.0)).map(|p| p.1).sum::<f64>() / total
    };
    let expected_route_length = if routed_volume > 0.0 {
        hop_volume / routed_volume
    } else if total == 0.0 {
        1.0
    } else {
        f64::INFINITY
    };
    Ok(TaxReport {
        expected_route_length,
        bandwidth_tax: expected_route_length - 1.0,
        latency_tax,
        coverage,
        flagged: coverage < 1.0,
    })
}

/// `r` if every hop has positive capacity in `slot`.
fn live(slot: &TimeslotGraph, r: Route) -> std::result::Result<Route, RouteError> {
    if r.edges().all(|(a, b)| slot.capacity(a, b) > 0.0) {
        Ok(Route { slot: slot.t, ..r })
    } else {
        Err(RouteError::NoRoute {
            src: r.src(),
            dst: r.dst(),
        })
    }
}
