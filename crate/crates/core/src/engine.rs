//! Slot-by-slot fluid simulation of a TMT network.
//!
//! Each slot: the spine controller emits matchings (newly set-up circuits
//! carry nothing this slot), arrivals are admitted and classified, every
//! active flow gets a route on its sub-topology, rates are allocated by
//! progressive filling, and finished flows are recorded.

use std::collections::BTreeMap;
use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Digraph, NodeId, TimeslotGraph};
use crate::matching::Matching;
use crate::metrics::TaxReport;
use crate::routing::{shortest_path_in, valiant_route, Route};
use crate::sched::{Controller, Scheduler, SchedulerKind, TmtNetwork};
use crate::traffic::{DemandMatrix, FlowClass, FlowEvent};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    pub mice_max: u64,
    pub elephant_min: u64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            mice_max: 100,
            elephant_min: 1000,
        }
    }
}

pub fn classify(flow: &FlowEvent, th: &Thresholds) -> FlowClass {
    if let Some(c) = flow.class_hint {
        return c;
    }
    if flow.size <= th.mice_max {
        FlowClass::Mice
    } else if flow.size >= th.elephant_min {
        FlowClass::Elephant
    } else {
        FlowClass::AllToAll
    }
}

/// Sub-topologies a class may use, most preferred first. A class whose own
/// kind of spine is missing falls back to the next kind present.
pub fn preference(class: FlowClass) -> [SchedulerKind; 3] {
    use SchedulerKind::*;
    match class {
        FlowClass::Mice => [Static, Rotor, DemandAware],
        FlowClass::AllToAll => [Rotor, Static, DemandAware],
        FlowClass::Elephant => [DemandAware, Rotor, Static],
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub network: TmtNetwork,
    pub horizon: u64,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default)]
    pub seed: u64,
    /// Newly established circuits carry nothing in their first slot. Turning
    /// this off gives the hypothetical reconfiguration-free network.
    #[serde(default = "yes")]
    pub reconfig_penalty: bool,
}

fn yes() -> bool {
    true
}

impl SimConfig {
    pub fn new(network: TmtNetwork, horizon: u64) -> Self {
        SimConfig {
            network,
            horizon,
            thresholds: Thresholds::default(),
            seed: 0,
            reconfig_penalty: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::param("horizon must be at least one slot"));
        }
        if self.thresholds.mice_max > self.thresholds.elephant_min {
            return Err(Error::param(format!(
                "mice_max {} above elephant_min {}",
                self.thresholds.mice_max, self.thresholds.elephant_min
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowState {
    pub id: usize,
    pub event: FlowEvent,
    pub class: FlowClass,
    /// Sub-topology serving the flow.
    pub sub: SchedulerKind,
    /// Still to be delivered, including bytes parked at relays.
    pub remaining: f64,
    /// Not yet sent from the source.
    pub at_source: f64,
    /// Bytes parked at intermediate ToRs, Valiant style.
    pub relayed: BTreeMap<NodeId, f64>,
    /// Route used in the latest slot, if any.
    pub route: Option<Route>,
    pub completion: Option<u64>,
}

impl FlowState {
    pub fn fct(&self) -> Option<u64> {
        self.completion.map(|c| c - self.event.arrival + 1)
    }
}

/// Per-slot summary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlotStats {
    pub t: u64,
    /// Capacity used over capacity available, across all live circuits.
    pub utilization: f64,
    pub delivered: f64,
    pub relay_bytes: f64,
    pub active_flows: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassStats {
    pub flows: usize,
    pub completed: usize,
    pub mean_fct: Option<f64>,
    pub median_fct: Option<u64>,
    pub p99_fct: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowRecord {
    pub id: usize,
    pub arrival: u64,
    pub src: NodeId,
    pub dst: NodeId,
    pub size: u64,
    pub class: FlowClass,
    pub sub: SchedulerKind,
    pub completion: Option<u64>,
    pub fct: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub horizon: u64,
    pub flows: Vec<FlowRecord>,
    pub classes: BTreeMap<FlowClass, ClassStats>,
    pub arrived_volume: f64,
    pub served_volume: f64,
    pub coverage: f64,
    pub taxes: TaxReport,
    pub max_relay_bytes: f64,
    pub mean_relay_bytes: f64,
    pub utilization: Vec<SlotStats>,
}

impl SimReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn mean_fct(&self, class: FlowClass) -> Option<f64> {
        self.classes.get(&class).and_then(|c| c.mean_fct)
    }

    /// Mean completion time over every flow, complete or not; unfinished
    /// flows count as finishing at the horizon.
    pub fn mean_fct_all(&self) -> Option<f64> {
        if self.flows.is_empty() {
            return None;
        }
        let total: u64 = self
            .flows
            .iter()
            .map(|f| f.fct.unwrap_or(self.horizon - f.arrival))
            .sum();
        Some(total as f64 / self.flows.len() as f64)
    }

    pub fn write_utilization_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for s in &self.utilization {
            w.serialize(s)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Max-min fair rates by progressive filling. `paths[i]` lists the
/// resources flow `i` crosses and `limits[i]` caps its rate; all unfrozen
/// flows grow together until a resource saturates or a flow hits its cap.
pub fn max_min_allocation(capacity: &[f64], paths: &[Vec<usize>], limits: &[f64]) -> Vec<f64> {
    let tol = 1e-12 * capacity.iter().cloned().fold(1.0, f64::max);
    let mut residual = capacity.to_vec();
    let mut rate = vec![0.0; paths.len()];
    let mut active: Vec<bool> = paths
        .iter()
        .zip(limits)
        .map(|(p, &l)| l > tol && p.iter().all(|&r| residual[r] > tol))
        .collect();
    loop {
        let mut users = vec![0usize; residual.len()];
        for (i, p) in paths.iter().enumerate() {
            if active[i] {
                for &r in p {
                    users[r] += 1;
                }
            }
        }
        let mut inc = f64::INFINITY;
        for (r, &u) in users.iter().enumerate() {
            if u > 0 {
                inc = inc.min(residual[r] / u as f64);
            }
        }
        for i in 0..paths.len() {
            if active[i] {
                inc = inc.min(limits[i] - rate[i]);
            }
        }
        if !inc.is_finite() {
            break;
        }
        for (i, p) in paths.iter().enumerate() {
            if active[i] {
                rate[i] += inc;
                for &r in p {
                    residual[r] -= inc;
                }
            }
        }
        let mut any = false;
        for (i, p) in paths.iter().enumerate() {
            if active[i] {
                active[i] = limits[i] - rate[i] > tol && p.iter().all(|&r| residual[r] > tol);
                any |= active[i];
            }
        }
        if !any {
            break;
        }
    }
    rate
}

/// What a slice of a flow's rate does this slot.
#[derive(Clone, Copy, Debug)]
enum Leg {
    /// Source straight to destination along the route (any hop count).
    Deliver { hops: usize },
    /// Relay `w` to the destination.
    FromRelay(NodeId),
    /// Source to relay `w`, parked there.
    ToRelay(NodeId),
}

struct Item {
    flow: usize,
    leg: Leg,
    path: Vec<usize>,
    limit: f64,
}

const KINDS: [SchedulerKind; 3] = [SchedulerKind::Static, SchedulerKind::Rotor, SchedulerKind::DemandAware];

fn kind_index(k: SchedulerKind) -> usize {
    match k {
        SchedulerKind::Static => 0,
        SchedulerKind::Rotor => 1,
        SchedulerKind::DemandAware => 2,
    }
}

pub struct Simulation {
    config: SimConfig,
    controller: Controller,
    previous: Option<Vec<Matching>>,
    trace: Vec<FlowEvent>,
    next_arrival: usize,
    flows: Vec<FlowState>,
    t: u64,
    /// Union of every rotor matching: where a relay can forward later.
    rotor_cycle: Digraph,
    /// Direct capacity a pair gets from the rotors in one rotation.
    rotor_budget: BTreeMap<(NodeId, NodeId), f64>,
    /// Hop distances in the union of the static spines.
    static_dist: Vec<Vec<Option<usize>>>,
    stats: Vec<SlotStats>,
    served: f64,
    hop_volume: f64,
    reconfiguring: u64,
    present: u64,
}

impl Simulation {
    pub fn new(config: SimConfig, trace: &[FlowEvent]) -> Result<Self> {
        config.validate()?;
        let n = config.network.n();
        let mut trace = trace.to_vec();
        for e in &trace {
            if e.src.0 >= n || e.dst.0 >= n || e.src == e.dst {
                return Err(Error::Trace(format!("flow {e:?} invalid for {n} ToRs")));
            }
        }
        trace.sort_by_key(|e| e.arrival);
        let c = config.network.capacity();
        let mut static_union = Digraph::new(n);
        let mut rotor_cycle = Digraph::new(n);
        let mut rotor_budget: BTreeMap<(NodeId, NodeId), f64> = BTreeMap::new();
        for s in config.network.spines() {
            if let Scheduler::Static { matching } = &s.scheduler {
                for (u, v) in matching.pairs() {
                    static_union.add_edge(u, v, c)?;
                }
            }
            if let Scheduler::Rotor(r) = &s.scheduler {
                let live = if config.reconfig_penalty { r.hold() - 1 } else { r.hold() };
                for m in r.set() {
                    for (u, v) in m.pairs() {
                        if !rotor_cycle.contains(u, v) {
                            rotor_cycle.add_edge(u, v, c)?;
                        }
                        *rotor_budget.entry((u, v)).or_insert(0.0) += live as f64 * c;
                    }
                }
            }
        }
        Ok(Simulation {
            controller: Controller::new(config.network.clone()),
            config,
            previous: None,
            trace,
            next_arrival: 0,
            flows: Vec::new(),
            t: 0,
            rotor_cycle,
            rotor_budget,
            static_dist: (0..n).map(|v| static_union.bfs_distances(NodeId(v))).collect(),
            stats: Vec::new(),
            served: 0.0,
            hop_volume: 0.0,
            reconfiguring: 0,
            present: 0,
        })
    }

    pub fn now(&self) -> u64 {
        self.t
    }

    pub fn flows(&self) -> &[FlowState] {
        &self.flows
    }

    pub fn is_done(&self) -> bool {
        self.t >= self.config.horizon
    }

    fn pending_aware(&self) -> DemandMatrix {
        let n = self.config.network.n();
        let mut pending = DemandMatrix::zeros(n);
        for f in &self.flows {
            if f.sub == SchedulerKind::DemandAware && f.completion.is_none() {
                let cur = pending.get(f.event.src, f.event.dst);
                pending
                    .set(f.event.src, f.event.dst, cur + f.remaining)
                    .expect("valid pair");
            }
        }
        pending
    }

    /// Per-kind graphs of this slot: present circuits appear with capacity
    /// zero until they have been up for a slot.
    fn sub_topologies(&mut self, matchings: &[Matching]) -> [Digraph; 3] {
        let n = self.config.network.n();
        let c = self.config.network.capacity();
        let mut graphs = [Digraph::new(n), Digraph::new(n), Digraph::new(n)];
        for (i, spine) in self.config.network.spines().iter().enumerate() {
            let g = &mut graphs[kind_index(spine.scheduler.kind())];
            for (u, v) in matchings[i].pairs() {
                self.present += 1;
                let live = !self.config.reconfig_penalty
                    || self.previous.as_ref().map_or(true, |p| p[i].contains(u, v));
                if !live {
                    self.reconfiguring += 1;
                }
                g.add_edge(u, v, if live { c } else { 0.0 }).expect("matching pair");
            }
        }
        graphs
    }

    fn admit(&mut self) {
        let kinds_present: Vec<SchedulerKind> = KINDS
            .into_iter()
            .filter(|&k| self.config.network.count(k) > 0)
            .collect();
        while let Some(e) = self.trace.get(self.next_arrival) {
            if e.arrival > self.t {
                break;
            }
            let class = classify(e, &self.config.thresholds);
            // static spines only help pairs they connect
            let static_ok = self.static_dist[e.src.0][e.dst.0].is_some();
            let sub = preference(class)
                .into_iter()
                .filter(|k| kinds_present.contains(k))
                .find(|&k| k != SchedulerKind::Static || static_ok)
                .unwrap_or(kinds_present[0]);
            let size = e.size as f64;
            self.flows.push(FlowState {
                id: self.flows.len(),
                event: *e,
                class,
                sub,
                remaining: size,
                at_source: size,
                relayed: BTreeMap::new(),
                route: None,
                completion: if e.size == 0 { Some(self.t) } else { None },
            });
            self.next_arrival += 1;
        }
    }

    fn flow_rng(&self, id: usize) -> ChaCha8Rng {
        let mut x = self.config.seed ^ (id as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ self.t.wrapping_mul(0xbf58_476d_1ce4_e5b9);
        x ^= x >> 31;
        ChaCha8Rng::seed_from_u64(x)
    }

    /// Advances one slot.
    pub fn step(&mut self) {
        assert!(!self.is_done(), "simulation already at its horizon");
        let t = self.t;
        let pending = self.pending_aware();
        let matchings = self.controller.advance(t, &pending).to_vec();
        let graphs = self.sub_topologies(&matchings);
        self.previous = Some(matchings);
        self.admit();

        // resources: live edges of each sub-topology
        let mut index: BTreeMap<(usize, NodeId, NodeId), usize> = BTreeMap::new();
        let mut capacity = Vec::new();
        for (k, g) in graphs.iter().enumerate() {
            for (u, v, c) in g.live_edges() {
                index.insert((k, u, v), capacity.len());
                capacity.push(c);
            }
        }
        let res = |k: usize, u: NodeId, v: NodeId| index[&(k, u, v)];

        let mut tier1: Vec<Item> = Vec::new();
        let mut tier2: Vec<Item> = Vec::new();
        for i in 0..self.flows.len() {
            let f = &self.flows[i];
            if f.completion.is_some() {
                continue;
            }
            let (src, dst) = (f.event.src, f.event.dst);
            let k = kind_index(f.sub);
            let g = &graphs[k];
            let mut route = None;
            match f.sub {
                SchedulerKind::Static => {
                    if let Ok(r) = shortest_path_in(g, t, src, dst) {
                        tier1.push(Item {
                            flow: i,
                            leg: Leg::Deliver { hops: r.hop_count() },
                            path: r.edges().map(|(u, v)| res(k, u, v)).collect(),
                            limit: f.at_source,
                        });
                        route = Some(r);
                    }
                }
                SchedulerKind::DemandAware => {
                    if g.capacity(src, dst) > 0.0 {
                        tier1.push(Item {
                            flow: i,
                            leg: Leg::Deliver { hops: 1 },
                            path: vec![res(k, src, dst)],
                            limit: f.at_source,
                        });
                        route = Some(Route {
                            hops: vec![src, dst],
                            slot: t,
                        });
                    }
                }
                SchedulerKind::Rotor => {
                    for (&w, &bytes) in &f.relayed {
                        if bytes > 0.0 && g.capacity(w, dst) > 0.0 {
                            tier1.push(Item {
                                flow: i,
                                leg: Leg::FromRelay(w),
                                path: vec![res(k, w, dst)],
                                limit: bytes,
                            });
                        }
                    }
                    if f.at_source > 0.0 {
                        if g.capacity(src, dst) > 0.0 {
                            tier1.push(Item {
                                flow: i,
                                leg: Leg::Deliver { hops: 1 },
                                path: vec![res(k, src, dst)],
                                limit: f.at_source,
                            });
                            route = Some(Route {
                                hops: vec![src, dst],
                                slot: t,
                            });
                        }
                        // offload only what the direct circuits cannot carry
                        // within one rotation, spread evenly over the live
                        // relays (the fluid limit of a random intermediate)
                        let budget = self.rotor_budget.get(&(src, dst)).copied().unwrap_or(0.0);
                        let excess = f.at_source - budget;
                        if excess > 0.0 {
                            let relays: Vec<NodeId> = g
                                .out_edges(src)
                                .filter(|&(w, c)| c > 0.0 && w != dst && self.rotor_cycle.contains(w, dst))
                                .map(|(w, _)| w)
                                .collect();
                            for &w in &relays {
                                tier2.push(Item {
                                    flow: i,
                                    leg: Leg::ToRelay(w),
                                    path: vec![res(k, src, w)],
                                    limit: excess / relays.len() as f64,
                                });
                            }
                            if route.is_none() {
                                let slot = TimeslotGraph { t, graph: g.clone() };
                                let mut rng = self.flow_rng(f.id);
                                route = valiant_route(&slot, &self.rotor_cycle, src, dst, &mut rng).ok();
                            }
                        }
                    }
                }
            }
            self.flows[i].route = route;
        }

        let mut residual = capacity.clone();
        let mut delivered = 0.0;
        for items in [tier1, tier2] {
            let paths: Vec<Vec<usize>> = items.iter().map(|x| x.path.clone()).collect();
            let limits: Vec<f64> = items.iter().map(|x| x.limit).collect();
            let rates = max_min_allocation(&residual, &paths, &limits);
            for (item, &r) in items.iter().zip(&rates) {
                if r <= 0.0 {
                    continue;
                }
                for &p in &item.path {
                    residual[p] = (residual[p] - r).max(0.0);
                }
                let f = &mut self.flows[item.flow];
                match item.leg {
                    Leg::Deliver { hops } => {
                        f.at_source -= r;
                        f.remaining -= r;
                        delivered += r;
                        self.hop_volume += r * hops as f64;
                    }
                    Leg::FromRelay(w) => {
                        *f.relayed.get_mut(&w).expect("relay holds bytes") -= r;
                        f.remaining -= r;
                        delivered += r;
                        self.hop_volume += r * 2.0;
                    }
                    Leg::ToRelay(w) => {
                        f.at_source -= r;
                        *f.relayed.entry(w).or_insert(0.0) += r;
                    }
                }
            }
        }

        let mut relay_bytes = 0.0;
        let mut active = 0;
        for f in &mut self.flows {
            if f.completion.is_some() {
                continue;
            }
            let tol = 1e-9 * (f.event.size as f64).max(1.0);
            f.relayed.retain(|_, b| *b > tol);
            if f.at_source < tol {
                f.at_source = 0.0;
            }
            if f.remaining < tol {
                f.remaining = 0.0;
                f.at_source = 0.0;
                f.relayed.clear();
                f.completion = Some(t);
            } else {
                active += 1;
                relay_bytes += f.relayed.values().sum::<f64>();
            }
        }
        let total_cap: f64 = capacity.iter().sum();
        let used: f64 = capacity.iter().zip(&residual).map(|(c, r)| c - r).sum();
        self.served += delivered;
        self.stats.push(SlotStats {
            t,
            utilization: if total_cap > 0.0 { used / total_cap } else { 0.0 },
            delivered,
            relay_bytes,
            active_flows: active,
        });
        self.t += 1;
    }

    pub fn finish(self) -> SimReport {
        let horizon = self.config.horizon;
        let flows: Vec<FlowRecord> = self
            .flows
            .iter()
            .map(|f| FlowRecord {
                id: f.id,
                arrival: f.event.arrival,
                src: f.event.src,
                dst: f.event.dst,
                size: f.event.size,
                class: f.class,
                sub: f.sub,
                completion: f.completion,
                fct: f.fct(),
            })
            .collect();
        let mut classes = BTreeMap::new();
        for class in [FlowClass::Mice, FlowClass::AllToAll, FlowClass::Elephant] {
            let members: Vec<&FlowRecord> = flows.iter().filter(|f| f.class == class).collect();
            if members.is_empty() {
                continue;
            }
            let mut fcts: Vec<u64> = members.iter().filter_map(|f| f.fct).collect();
            fcts.sort_unstable();
            let rank = |q: f64| -> Option<u64> {
                if fcts.is_empty() {
                    return None;
                }
                let idx = ((q * fcts.len() as f64).ceil() as usize).clamp(1, fcts.len()) - 1;
                Some(fcts[idx])
            };
            classes.insert(
                class,
                ClassStats {
                    flows: members.len(),
                    completed: fcts.len(),
                    mean_fct: (!fcts.is_empty()).then(|| fcts.iter().sum::<u64>() as f64 / fcts.len() as f64),
                    median_fct: rank(0.5),
                    p99_fct: rank(0.99),
                },
            );
        }
        let arrived: f64 = flows.iter().map(|f| f.size as f64).sum();
        let coverage = if arrived == 0.0 { 1.0 } else { (self.served / arrived).min(1.0) };
        let erl = if self.served > 0.0 { self.hop_volume / self.served } else { 1.0 };
        let relay: Vec<f64> = self.stats.iter().map(|s| s.relay_bytes).collect();
        SimReport {
            horizon,
            classes,
            arrived_volume: arrived,
            served_volume: self.served,
            coverage,
            taxes: TaxReport {
                expected_route_length: erl,
                bandwidth_tax: erl - 1.0,
                latency_tax: if self.present == 0 {
                    0.0
                } else {
                    self.reconfiguring as f64 / self.present as f64
                },
                coverage,
                flagged: coverage < 1.0,
            },
            max_relay_bytes: relay.iter().cloned().fold(0.0, f64::max),
            mean_relay_bytes: relay.iter().sum::<f64>() / relay.len().max(1) as f64,
            utilization: self.stats,
            flows,
        }
    }
}

/// Runs `trace` through the network for the configured horizon.
pub fn run(config: &SimConfig, trace: &[FlowEvent]) -> Result<SimReport> {
    let mut sim = Simulation::new(config.clone(), trace)?;
    while !sim.is_done() {
        sim.step();
    }
    Ok(sim.finish())
}
