use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use log::{debug, info};
use serde::Serialize;

use rdcn::engine::{run, SimConfig};
use rdcn::metrics::{
    bisection_bandwidth, taxes, throughput, throughput_static, worst_case_throughput, MetricsReport, ThroughputGraph,
};
use rdcn::sched::{
    demand_aware_schedule, evolve, evolve_oblivious, rotor_stagger, rotor_schedule, static_schedule, Scheduler,
    SchedulerKind, TmtNetwork,
};
use rdcn::topology::{
    complete, de_bruijn, de_bruijn_matchings, fat_tree, random_regular_expander, round_robin_matchings,
    uni_regular_ring, StaticTopology,
};
use rdcn::traffic::{
    complexity_map, gen_trace_with, read_trace_csv, saturate, ComplexityPoint, DemandMatrix, FlowEvent, TraceKind,
    TraceParams,
};
use rdcn::{Error, EvolvingGraph, Matching, NodeId};

use crate::config::{DemandConfig, ExperimentConfig, NetworkConfig, OutputFormat, RotorSet, SpineConfig, TrafficConfig};

/// Exit status 2 for bad input, 3 for failures while running.
#[derive(Debug)]
pub enum Failure {
    Config(String),
    Runtime(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Runtime(_) => 3,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "configuration error: {m}"),
            Failure::Runtime(m) => write!(f, "runtime error: {m}"),
        }
    }
}

type Outcome<T> = Result<T, Failure>;

fn config_err(e: impl std::fmt::Display) -> Failure {
    Failure::Config(e.to_string())
}

/// Library errors: bad inputs are configuration errors, the rest runtime.
fn lib_err(e: Error) -> Failure {
    match e {
        Error::InvalidParameter(_) | Error::TraceTooShort { .. } | Error::Trace(_) | Error::Topology(_) => {
            Failure::Config(e.to_string())
        }
        e => Failure::Runtime(e.to_string()),
    }
}

pub fn load_config(path: &Path, seed: Option<u64>, horizon: Option<u64>, out: Option<PathBuf>) -> Outcome<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    let cfg = ExperimentConfig::parse(&text).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    let cfg = cfg.with_overrides(seed, horizon, out).map_err(config_err)?;
    debug!("effective config:\n{}", cfg.to_json());
    Ok(cfg)
}

enum Network {
    Static(StaticTopology),
    Tmt(TmtNetwork),
}

impl Network {
    fn n(&self) -> usize {
        match self {
            Network::Static(t) => t.node_count(),
            Network::Tmt(t) => t.n(),
        }
    }

    fn capacity(&self) -> f64 {
        match self {
            Network::Static(_) => 1.0,
            Network::Tmt(t) => t.capacity(),
        }
    }

    /// Nodes that source and sink traffic.
    fn tors(&self) -> Vec<NodeId> {
        match self {
            Network::Static(t) => t.tors().collect(),
            Network::Tmt(t) => (0..t.n()).map(NodeId).collect(),
        }
    }

    /// Demand-aware spines, if any, see a fixed pending-demand matrix.
    fn evolving(&self, demand: &DemandMatrix) -> Outcome<EvolvingGraph> {
        match self {
            Network::Static(t) => t.to_evolving().map_err(lib_err),
            Network::Tmt(net) if net.count(SchedulerKind::DemandAware) > 0 => {
                let d = demand.clone();
                evolve(net, Arc::new(move |_| d.clone())).map_err(lib_err)
            }
            Network::Tmt(net) => evolve_oblivious(net).map_err(lib_err),
        }
    }
}

fn build_network(cfg: &NetworkConfig) -> Outcome<Network> {
    let topo = match *cfg {
        NetworkConfig::FatTree { racks, radix } => fat_tree(racks, radix),
        NetworkConfig::Ring { n } => uni_regular_ring(n),
        NetworkConfig::Complete { n } => complete(n),
        NetworkConfig::DeBruijn { n } => de_bruijn(n),
        NetworkConfig::Expander { n, degree, seed } => random_regular_expander(n, degree, seed),
        NetworkConfig::Tmt {
            n,
            capacity,
            ref spines,
        } => return build_tmt(n, capacity, spines).map(Network::Tmt),
    };
    topo.map(Network::Static).map_err(config_err)
}

fn build_tmt(n: usize, capacity: f64, spines: &[SpineConfig]) -> Outcome<TmtNetwork> {
    let static_pool = if n.is_power_of_two() {
        de_bruijn_matchings(n)
    } else {
        round_robin_matchings(n)
    }
    .map_err(config_err)?
    .into_vec();
    let rotors = spines.iter().filter(|s| matches!(s, SpineConfig::Rotor { .. })).count();
    let (mut next_static, mut next_rotor) = (0, 0);
    let mut schedulers = Vec::with_capacity(spines.len());
    for (i, spine) in spines.iter().enumerate() {
        let s = match spine {
            SpineConfig::Static { matching: Some(map) } => {
                if map.len() != n {
                    return Err(config_err(format!("spine {i}: matching has {} entries, need {n}", map.len())));
                }
                if map.iter().any(|&j| j >= n) {
                    return Err(config_err(format!("spine {i}: matching names a ToR outside 0..{n}")));
                }
                static_schedule(Matching::from_map(n, |k| map[k]).map_err(config_err)?)
            }
            SpineConfig::Static { matching: None } => {
                next_static += 1;
                static_schedule(static_pool[(next_static - 1) % static_pool.len()].clone())
            }
            SpineConfig::Rotor { hold, set, phase } => {
                let set = match set {
                    RotorSet::RoundRobin => round_robin_matchings(n),
                    RotorSet::DeBruijn => de_bruijn_matchings(n),
                }
                .map_err(config_err)?;
                let len = set.len();
                let Scheduler::Rotor(r) = rotor_schedule(set, *hold).map_err(config_err)? else {
                    unreachable!("rotor_schedule builds rotors")
                };
                let (slot, idx) = phase.unwrap_or_else(|| rotor_stagger(*hold, len, next_rotor, rotors));
                next_rotor += 1;
                Scheduler::Rotor(r.with_phase(slot, idx))
            }
            SpineConfig::DemandAware {
                epoch,
                inter_reconfig,
                policy,
            } => demand_aware_schedule(*epoch, *policy, *inter_reconfig).map_err(config_err)?,
        };
        schedulers.push(s);
    }
    TmtNetwork::new(n, capacity, schedulers).map_err(config_err)
}

fn load_trace(cfg: &ExperimentConfig, n: usize) -> Outcome<Vec<FlowEvent>> {
    match &cfg.traffic {
        TrafficConfig::Empty => Ok(Vec::new()),
        TrafficConfig::Generate {
            kind,
            length,
            seed,
            events_per_slot,
            size,
            zipf_alpha,
        } => {
            let p = TraceParams {
                kind: *kind,
                n,
                length: *length,
                seed: seed.unwrap_or(cfg.run.seed),
                events_per_slot: *events_per_slot,
                size: *size,
                zipf_alpha: *zipf_alpha,
            };
            gen_trace_with(&p).map_err(config_err)
        }
        TrafficConfig::File { path } => read_trace_file(path, n),
    }
}

fn read_trace_file(path: &Path, n: usize) -> Outcome<Vec<FlowEvent>> {
    let f = File::open(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    read_trace_csv(f, n).map_err(|e| config_err(format!("{}: {e}", path.display())))
}

fn demand_matrix(cfg: &ExperimentConfig, net: &Network) -> Outcome<DemandMatrix> {
    let n = net.n();
    let c = net.capacity();
    match &cfg.metrics.demand {
        DemandConfig::Uniform => {
            let tors = net.tors();
            let share = if tors.len() > 1 { c / (tors.len() - 1) as f64 } else { 0.0 };
            let mut d = DemandMatrix::zeros(n);
            for &u in &tors {
                for &v in tors.iter().filter(|&&v| v != u) {
                    d.set(u, v, share).map_err(config_err)?;
                }
            }
            Ok(d)
        }
        DemandConfig::Permutation { perm } => {
            if perm.len() != n {
                return Err(config_err(format!("permutation has {} entries, network has {n} nodes", perm.len())));
            }
            DemandMatrix::permutation(perm, c).map_err(config_err)
        }
        DemandConfig::Matrix { rates } => {
            if rates.len() != n {
                return Err(config_err(format!("demand matrix has {} rows, network has {n} nodes", rates.len())));
            }
            DemandMatrix::new(rates.clone()).map_err(config_err)
        }
        DemandConfig::Trace => {
            let mut d = DemandMatrix::zeros(n);
            for e in load_trace(cfg, n)? {
                let v = d.get(e.src, e.dst) + e.size as f64;
                d.set(e.src, e.dst, v).map_err(config_err)?;
            }
            saturate(&d, c).map_err(lib_err)
        }
    }
}

fn output(cfg: &ExperimentConfig) -> Outcome<Box<dyn Write>> {
    match &cfg.run.out {
        Some(p) => {
            let f = File::create(p).map_err(|e| Failure::Runtime(format!("{}: {e}", p.display())))?;
            Ok(Box::new(io::BufWriter::new(f)))
        }
        None => Ok(Box::new(io::stdout().lock())),
    }
}

fn io_err(e: impl std::fmt::Display) -> Failure {
    Failure::Runtime(e.to_string())
}

pub fn simulate(cfg: &ExperimentConfig) -> Outcome<()> {
    let Network::Tmt(net) = build_network(&cfg.network)? else {
        return Err(config_err("simulate needs a tmt network"));
    };
    let trace = load_trace(cfg, net.n())?;
    info!("simulating {} flows over {} slots on {} spines", trace.len(), cfg.run.horizon, net.spines().len());
    let sim = SimConfig {
        network: net,
        horizon: cfg.run.horizon,
        thresholds: cfg.classifier,
        seed: cfg.run.seed,
        reconfig_penalty: cfg.run.reconfig_penalty,
    };
    let report = run(&sim, &trace).map_err(lib_err)?;
    info!("coverage {:.4}, mean fct {:?}", report.coverage, report.mean_fct_all());
    if let Some(p) = &cfg.run.utilization {
        let f = File::create(p).map_err(|e| io_err(format!("{}: {e}", p.display())))?;
        report.write_utilization_csv(f).map_err(lib_err)?;
    }
    let mut out = output(cfg)?;
    match cfg.run.format {
        OutputFormat::Json => writeln!(out, "{}", report.to_json().map_err(lib_err)?).map_err(io_err)?,
        OutputFormat::Csv => report.write_utilization_csv(&mut out).map_err(lib_err)?,
    }
    out.flush().map_err(io_err)
}

/// `MetricsReport` plus the predicates and the complexity point.
#[derive(Debug, Default, Serialize)]
pub struct MetricsOutput {
    #[serde(flatten)]
    pub report: MetricsReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub full_throughput: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub full_bisection: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub complexity: Option<ComplexityPoint>,
}

pub fn compute_metrics(cfg: &ExperimentConfig) -> Outcome<MetricsOutput> {
    let m = &cfg.metrics;
    let net = build_network(&cfg.network)?;
    let c = net.capacity();
    let eps = cfg.run.eps;
    let mut out = MetricsOutput::default();
    let demand = if m.theta || m.taxes || m.theta_star {
        demand_matrix(cfg, &net)?
    } else {
        DemandMatrix::zeros(net.n())
    };
    let needs_graph = m.theta || m.theta_star || m.taxes || (m.bisection && matches!(net, Network::Tmt(_)));
    let eg = if needs_graph { Some(net.evolving(&demand)?) } else { None };
    let tg = if m.theta || m.theta_star {
        Some(match &net {
            Network::Static(t) => ThroughputGraph::from_static(&t.graph),
            Network::Tmt(_) => ThroughputGraph::from_evolving(eg.as_ref().unwrap()).map_err(lib_err)?,
        })
    } else {
        None
    };
    if m.theta {
        debug!("computing theta");
        let r = match &net {
            Network::Static(t) => throughput_static(&t.graph, &demand, eps),
            Network::Tmt(_) => throughput(tg.as_ref().unwrap(), &demand, eps),
        }
        .map_err(lib_err)?;
        out.report.theta = Some(r.theta);
    }
    if m.theta_star {
        debug!("computing theta*");
        let w = worst_case_throughput(tg.as_ref().unwrap(), c, m.samples, eps, cfg.run.seed).map_err(lib_err)?;
        out.report.theta_star = Some(w.theta_star);
        out.full_throughput = Some(w.full_throughput);
    }
    if m.bisection {
        debug!("computing bisection");
        let (graph, hosts) = match &net {
            Network::Static(t) => (t.graph.clone(), t.hosts.clone()),
            Network::Tmt(net) if net.spines().iter().all(|s| s.scheduler.kind() == SchedulerKind::Static) => {
                (eg.as_ref().unwrap().graph_at(0).graph, vec![1; net.n()])
            }
            Network::Tmt(_) => return Err(config_err("bisection needs a static topology or static spines only")),
        };
        let b = bisection_bandwidth(&graph, &hosts, c).map_err(lib_err)?;
        out.report.bisection = Some(b.bandwidth);
        out.full_bisection = Some(b.full_bisection);
    }
    if m.taxes {
        debug!("computing taxes");
        let t = taxes(eg.as_ref().unwrap(), &demand, m.routing, cfg.run.horizon).map_err(lib_err)?;
        out.report.expected_route_length = Some(t.expected_route_length);
        out.report.bandwidth_tax = Some(t.bandwidth_tax);
        out.report.latency_tax = Some(t.latency_tax);
        out.report.coverage = Some(t.coverage);
    }
    if m.complexity {
        let trace = load_trace(cfg, net.n())?;
        out.complexity = Some(complexity_map(&trace, net.n()).map_err(lib_err)?);
    }
    Ok(out)
}

pub fn metrics(cfg: &ExperimentConfig) -> Outcome<()> {
    let result = compute_metrics(cfg)?;
    let mut out = output(cfg)?;
    match cfg.run.format {
        OutputFormat::Json => {
            let text = serde_json::to_string_pretty(&result).map_err(io_err)?;
            writeln!(out, "{text}").map_err(io_err)?;
        }
        OutputFormat::Csv => MetricsReport::write_csv(&mut out, &[result.report]).map_err(lib_err)?,
    }
    out.flush().map_err(io_err)
}

pub fn topology(cfg: &ExperimentConfig, t: u64) -> Outcome<()> {
    let net = build_network(&cfg.network)?;
    let demand = demand_matrix(cfg, &net)?;
    let g = net.evolving(&demand)?.graph_at(t);
    let mut out = output(cfg)?;
    write!(out, "# n={} t={t}\n{}", net.n(), g.graph.to_adjacency_list()).map_err(io_err)?;
    out.flush().map_err(io_err)
}

pub struct ComplexityJob {
    pub traces: Vec<PathBuf>,
    pub generate: Vec<TraceKind>,
    pub n: usize,
    pub length: usize,
    pub seed: u64,
    pub reference: bool,
    pub out: Option<PathBuf>,
}

pub fn complexity(job: &ComplexityJob) -> Outcome<()> {
    let mut rows: Vec<(String, usize, ComplexityPoint)> = Vec::new();
    for path in &job.traces {
        let trace = read_trace_file(path, job.n)?;
        let p = complexity_map(&trace, job.n).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        rows.push((path.display().to_string(), trace.len(), p));
    }
    let mut kinds = job.generate.clone();
    if job.reference {
        kinds.extend([TraceKind::Uniform, TraceKind::ConstantPair]);
    }
    for kind in kinds {
        let trace = gen_trace_with(&TraceParams::new(kind, job.n, job.length, job.seed)).map_err(config_err)?;
        let p = complexity_map(&trace, job.n).map_err(lib_err)?;
        let name = serde_json::to_value(kind).map_err(io_err)?;
        rows.push((format!("generated:{}", name.as_str().unwrap_or_default()), trace.len(), p));
    }
    if rows.is_empty() {
        return Err(config_err("nothing to map: pass --trace, --generate or --reference"));
    }
    let sink: Box<dyn Write> = match &job.out {
        Some(p) => Box::new(File::create(p).map_err(|e| io_err(format!("{}: {e}", p.display())))?),
        None => Box::new(io::stdout().lock()),
    };
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["source", "n", "length", "temporal", "spatial"]).map_err(io_err)?;
    for (name, len, p) in rows {
        w.write_record([name, job.n.to_string(), len.to_string(), p.temporal.to_string(), p.spatial.to_string()])
            .map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str) -> ExperimentConfig {
        ExperimentConfig::parse(text).unwrap()
    }

    #[test]
    fn default_static_spines_follow_de_bruijn() {
        let Network::Tmt(net) = build_network(&cfg(
            r#"{"network": {"kind": "tmt", "n": 8, "spines": [{"kind": "static"}, {"kind": "static"}]}, "run": {"horizon": 1}}"#,
        )
        .network)
        .unwrap() else {
            panic!()
        };
        let g = evolve_oblivious(&net).unwrap().graph_at(0).graph;
        assert_eq!(g.diameter(), Some(3));
        assert_eq!(g.edge_count(), 16);
    }

    #[test]
    fn explicit_matching_is_validated() {
        let bad = cfg(
            r#"{"network": {"kind": "tmt", "n": 4, "spines": [{"kind": "static", "matching": [1, 0, 1, 2]}]}, "run": {"horizon": 1}}"#,
        );
        assert!(matches!(build_network(&bad.network), Err(Failure::Config(_))));
        let short = cfg(
            r#"{"network": {"kind": "tmt", "n": 4, "spines": [{"kind": "static", "matching": [1, 0]}]}, "run": {"horizon": 1}}"#,
        );
        assert!(matches!(build_network(&short.network), Err(Failure::Config(_))));
    }

    #[test]
    fn uniform_demand_skips_switches() {
        let c = cfg(r#"{"network": {"kind": "fat-tree", "racks": 8, "radix": 4}, "run": {"horizon": 1}}"#);
        let net = build_network(&c.network).unwrap();
        let d = demand_matrix(&c, &net).unwrap();
        let tors = net.tors();
        assert_eq!(tors.len(), 8);
        assert!((d.total() - 8.0).abs() < 1e-12);
        for (u, v, r) in d.entries() {
            if r > 0.0 {
                assert!(tors.contains(&u) && tors.contains(&v));
            }
        }
    }

    #[test]
    fn trace_demand_is_saturated() {
        let c = cfg(
            r#"{"network": {"kind": "complete", "n": 4},
                "traffic": {"source": "generate", "kind": "zipf-skewed", "length": 400, "seed": 1},
                "metrics": {"theta": true, "demand": {"kind": "trace"}},
                "run": {"horizon": 1}}"#,
        );
        let d = demand_matrix(&c, &build_network(&c.network).unwrap()).unwrap();
        let worst = d.row_sums().into_iter().chain(d.col_sums()).fold(0.0, f64::max);
        assert!((worst - 1.0).abs() < 1e-6, "{worst}");
    }

    #[test]
    fn bisection_rejects_dynamic_spines() {
        let c = cfg(
            r#"{"network": {"kind": "tmt", "n": 4, "spines": [{"kind": "rotor", "hold": 2}]},
                "metrics": {"bisection": true}, "run": {"horizon": 3}}"#,
        );
        assert!(matches!(compute_metrics(&c), Err(Failure::Config(_))));
    }
}
