//! Demand matrices, flow traces and the trace complexity map.

use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Zipf};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::NodeId;

/// `n x n` non-negative rate matrix in capacity units per slot, zero diagonal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct DemandMatrix {
    rates: Vec<Vec<f64>>,
}

impl TryFrom<Vec<Vec<f64>>> for DemandMatrix {
    type Error = Error;

    fn try_from(rates: Vec<Vec<f64>>) -> Result<Self> {
        DemandMatrix::new(rates)
    }
}

impl From<DemandMatrix> for Vec<Vec<f64>> {
    fn from(m: DemandMatrix) -> Self {
        m.rates
    }
}

impl DemandMatrix {
    pub fn new(rates: Vec<Vec<f64>>) -> Result<Self> {
        let n = rates.len();
        for (i, row) in rates.iter().enumerate() {
            if row.len() != n {
                return Err(Error::param(format!("demand row {i} has {} entries, expected {n}", row.len())));
            }
            for (j, &r) in row.iter().enumerate() {
                if !(r >= 0.0 && r.is_finite()) {
                    return Err(Error::param(format!("demand[{i}][{j}] = {r}")));
                }
                if i == j && r != 0.0 {
                    return Err(Error::param(format!("demand diagonal [{i}][{i}] = {r}, must be 0")));
                }
            }
        }
        Ok(DemandMatrix { rates })
    }

    pub fn zeros(n: usize) -> Self {
        DemandMatrix {
            rates: vec![vec![0.0; n]; n],
        }
    }

    /// Every off-diagonal entry `row_rate / (n - 1)`.
    pub fn uniform(n: usize, row_rate: f64) -> Self {
        let share = if n > 1 { row_rate / (n - 1) as f64 } else { 0.0 };
        DemandMatrix {
            rates: (0..n)
                .map(|i| (0..n).map(|j| if i == j { 0.0 } else { share }).collect())
                .collect(),
        }
    }

    /// `rate` from every `i` to `perm[i]`; fixed points are skipped.
    pub fn permutation(perm: &[usize], rate: f64) -> Result<Self> {
        let n = perm.len();
        let mut m = DemandMatrix::zeros(n);
        let mut seen = vec![false; n];
        for (i, &j) in perm.iter().enumerate() {
            if j >= n || seen[j] {
                return Err(Error::param(format!("{perm:?} is not a permutation")));
            }
            seen[j] = true;
            if i != j {
                m.rates[i][j] = rate;
            }
        }
        Ok(m)
    }

    pub fn n(&self) -> usize {
        self.rates.len()
    }

    pub fn get(&self, src: NodeId, dst: NodeId) -> f64 {
        self.rates[src.0][dst.0]
    }

    pub fn set(&mut self, src: NodeId, dst: NodeId, rate: f64) -> Result<()> {
        if src == dst && rate != 0.0 {
            return Err(Error::param("demand diagonal must stay zero"));
        }
        if !(rate >= 0.0 && rate.is_finite()) {
            return Err(Error::param(format!("demand rate {rate}")));
        }
        self.rates[src.0][dst.0] = rate;
        Ok(())
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rates
    }

    /// Positive entries as `(src, dst, rate)`, row-major.
    pub fn entries(&self) -> impl Iterator<Item = (NodeId, NodeId, f64)> + '_ {
        self.rates.iter().enumerate().flat_map(|(i, row)| {
            row.iter()
                .enumerate()
                .filter(|(_, &r)| r > 0.0)
                .map(move |(j, &r)| (NodeId(i), NodeId(j), r))
        })
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.rates.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let n = self.n();
        (0..n).map(|j| self.rates.iter().map(|r| r[j]).sum()).collect()
    }

    pub fn total(&self) -> f64 {
        self.rates.iter().flatten().sum()
    }

    pub fn scaled(&self, factor: f64) -> DemandMatrix {
        DemandMatrix {
            rates: self
                .rates
                .iter()
                .map(|r| r.iter().map(|x| x * factor).collect())
                .collect(),
        }
    }
}

pub const SATURATE_MAX_ITERATIONS: usize = 200;
pub const SATURATE_TOLERANCE: f64 = 1e-9;

/// Scales `demand` by alternating row and column normalisation until every
/// active row and column sums to `capacity`. Nodes whose row and column are
/// both zero are inactive and stay zero; the zero pattern is preserved.
pub fn saturate(demand: &DemandMatrix, capacity: f64) -> Result<DemandMatrix> {
    if !(capacity > 0.0 && capacity.is_finite()) {
        return Err(Error::param(format!("saturation capacity {capacity}")));
    }
    let n = demand.n();
    let rows = demand.row_sums();
    let cols = demand.col_sums();
    let active: Vec<bool> = (0..n).map(|i| rows[i] > 0.0 || cols[i] > 0.0).collect();
    if !active.iter().any(|&a| a) {
        return Err(Error::EmptyDemand);
    }
    if let Some(i) = (0..n).find(|&i| active[i] && (rows[i] == 0.0 || cols[i] == 0.0)) {
        return Err(Error::param(format!(
            "node {i} has an all-zero row or column and cannot be saturated"
        )));
    }
    let mut m = demand.rates.clone();
    let tol = SATURATE_TOLERANCE * capacity;
    let mut deviation = f64::INFINITY;
    for _ in 0..SATURATE_MAX_ITERATIONS {
        for row in m.iter_mut() {
            let s: f64 = row.iter().sum();
            if s > 0.0 {
                let f = capacity / s;
                row.iter_mut().for_each(|x| *x *= f);
            }
        }
        for j in 0..n {
            let s: f64 = m.iter().map(|r| r[j]).sum();
            if s > 0.0 {
                let f = capacity / s;
                m.iter_mut().for_each(|r| r[j] *= f);
            }
        }
        deviation = (0..n)
            .filter(|&i| active[i])
            .flat_map(|i| {
                let r: f64 = m[i].iter().sum();
                let c: f64 = m.iter().map(|row| row[i]).sum();
                [(r - capacity).abs(), (c - capacity).abs()]
            })
            .fold(0.0, f64::max);
        if deviation < tol {
            return Ok(DemandMatrix { rates: m });
        }
    }
    Err(Error::Unsaturatable {
        iterations: SATURATE_MAX_ITERATIONS,
        deviation,
    })
}

/// Flow classes and the sub-topology each is matched to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FlowClass {
    Mice,
    AllToAll,
    Elephant,
}

/// One flow arrival. `size` is in capacity-slot units (one slot of one
/// circuit carries `c` of them).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowEvent {
    pub arrival: u64,
    pub src: NodeId,
    pub dst: NodeId,
    pub size: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_hint: Option<FlowClass>,
}

impl FlowEvent {
    pub fn new(arrival: u64, src: usize, dst: usize, size: u64) -> Self {
        FlowEvent {
            arrival,
            src: NodeId(src),
            dst: NodeId(dst),
            size,
            class_hint: None,
        }
    }

    pub fn with_class(mut self, class: FlowClass) -> Self {
        self.class_hint = Some(class);
        self
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct TraceRow {
    t: u64,
    src: usize,
    dst: usize,
    size: u64,
}

/// Reads a `t,src,dst,size` CSV trace. Rows must satisfy `src != dst`,
/// `size > 0` and both endpoints below `n`.
pub fn read_trace_csv<R: Read>(reader: R, n: usize) -> Result<Vec<FlowEvent>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["t", "src", "dst", "size"] {
        return Err(Error::Trace(format!(
            "expected header t,src,dst,size, found {}",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut events = Vec::new();
    for (i, row) in rdr.deserialize::<TraceRow>().enumerate() {
        let row = row?;
        let line = i + 2;
        if row.src >= n || row.dst >= n {
            return Err(Error::Trace(format!("line {line}: node outside 0..{n}")));
        }
        if row.src == row.dst {
            return Err(Error::Trace(format!("line {line}: src equals dst")));
        }
        if row.size == 0 {
            return Err(Error::Trace(format!("line {line}: zero-size flow")));
        }
        events.push(FlowEvent::new(row.t, row.src, row.dst, row.size));
    }
    Ok(events)
}

pub fn write_trace_csv<W: Write>(writer: W, events: &[FlowEvent]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    for e in events {
        wtr.serialize(TraceRow {
            t: e.arrival,
            src: e.src.0,
            dst: e.dst.0,
            size: e.size,
        })?;
    }
    if events.is_empty() {
        wtr.write_record(["t", "src", "dst", "size"])?;
    }
    wtr.flush()?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TraceKind {
    /// i.i.d. uniformly random ordered pairs.
    Uniform,
    /// Random source, destination fixed by one seeded derangement.
    Permutation,
    /// Pair popularity following Zipf over a seeded ranking of all pairs.
    ZipfSkewed,
    /// `0->1, 1->2, ..., (n-1)->0` repeated.
    MlRingPeriodic,
    /// A single pair `0 -> 1`.
    ConstantPair,
    /// Deterministic cycle over all ordered pairs, row-major.
    RoundRobin,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceParams {
    pub kind: TraceKind,
    pub n: usize,
    pub length: usize,
    pub seed: u64,
    /// Arrivals per slot; event `i` arrives at `floor(i / events_per_slot)`.
    #[serde(default = "default_events_per_slot")]
    pub events_per_slot: f64,
    #[serde(default = "default_size")]
    pub size: u64,
    #[serde(default = "default_zipf_alpha")]
    pub zipf_alpha: f64,
}

fn default_events_per_slot() -> f64 {
    1.0
}

fn default_size() -> u64 {
    1
}

fn default_zipf_alpha() -> f64 {
    1.2
}

impl TraceParams {
    pub fn new(kind: TraceKind, n: usize, length: usize, seed: u64) -> Self {
        TraceParams {
            kind,
            n,
            length,
            seed,
            events_per_slot: default_events_per_slot(),
            size: default_size(),
            zipf_alpha: default_zipf_alpha(),
        }
    }
}

/// Shorthand for [`gen_trace_with`] with unit sizes and one event per slot.
pub fn gen_trace(kind: TraceKind, n: usize, length: usize, seed: u64) -> Result<Vec<FlowEvent>> {
    gen_trace_with(&TraceParams::new(kind, n, length, seed))
}

pub fn gen_trace_with(p: &TraceParams) -> Result<Vec<FlowEvent>> {
    let n = p.n;
    if n < 2 {
        return Err(Error::param(format!("trace needs n >= 2, got {n}")));
    }
    if p.length == 0 {
        return Err(Error::param("trace length must be at least 1"));
    }
    if !(p.events_per_slot > 0.0 && p.events_per_slot.is_finite()) {
        return Err(Error::param(format!("events_per_slot {}", p.events_per_slot)));
    }
    if p.size == 0 {
        return Err(Error::param("flow size must be positive"));
    }
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|(i, j)| i != j)
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut next_pair: Box<dyn FnMut(usize, &mut ChaCha8Rng) -> (usize, usize)> = match p.kind {
        TraceKind::Uniform => {
            Box::new(move |_, rng| pairs[rng.random_range(0..pairs.len())])
        }
        TraceKind::Permutation => {
            let perm = random_derangement(n, &mut rng);
            Box::new(move |_, rng| {
                let s = rng.random_range(0..n);
                (s, perm[s])
            })
        }
        TraceKind::ZipfSkewed => {
            let mut ranked = pairs.clone();
            ranked.shuffle(&mut rng);
            let zipf = Zipf::new(ranked.len() as f64, p.zipf_alpha)
                .map_err(|e| Error::param(format!("zipf: {e}")))?;
            Box::new(move |_, rng| {
                let rank = zipf.sample(rng) as usize;
                ranked[rank.clamp(1, ranked.len()) - 1]
            })
        }
        TraceKind::MlRingPeriodic => Box::new(move |i, _| (i % n, (i + 1) % n)),
        TraceKind::ConstantPair => Box::new(|_, _| (0, 1)),
        TraceKind::RoundRobin => Box::new(move |i, _| pairs[i % pairs.len()]),
    };
    Ok((0..p.length)
        .map(|i| {
            let (s, d) = next_pair(i, &mut rng);
            let arrival = (i as f64 / p.events_per_slot).floor() as u64;
            FlowEvent::new(arrival, s, d, p.size)
        })
        .collect())
}

/// Uniformly random permutation without fixed points (rejection sampling).
pub fn random_derangement<R: Rng>(n: usize, rng: &mut R) -> Vec<usize> {
    assert!(n >= 2, "no derangement of fewer than two elements");
    loop {
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(rng);
        if perm.iter().enumerate().all(|(i, &j)| i != j) {
            return perm;
        }
    }
}

/// Sums event sizes per pair and window, divided by the window length.
/// Window `w` covers arrivals in `[w * window, (w + 1) * window)`.
pub fn aggregate(events: &[FlowEvent], n: usize, window: u64) -> Result<Vec<DemandMatrix>> {
    if window == 0 {
        return Err(Error::param("aggregation window must be at least 1 slot"));
    }
    let Some(last) = events.iter().map(|e| e.arrival).max() else {
        return Ok(Vec::new());
    };
    let mut bytes = vec![vec![vec![0u64; n]; n]; (last / window) as usize + 1];
    for e in events {
        if e.src.0 >= n || e.dst.0 >= n || e.src == e.dst {
            return Err(Error::Trace(format!("event {e:?} invalid for n={n}")));
        }
        bytes[(e.arrival / window) as usize][e.src.0][e.dst.0] += e.size;
    }
    Ok(bytes
        .into_iter()
        .map(|b| {
            let mut m = DemandMatrix::zeros(n);
            for (i, row) in b.iter().enumerate() {
                for (j, &x) in row.iter().enumerate() {
                    m.rates[i][j] = x as f64 / window as f64;
                }
            }
            m
        })
        .collect())
}

/// Position of a trace on the complexity map; both scores in `[0, 1]`,
/// where 1 means as unstructured as a uniform trace.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexityPoint {
    pub temporal: f64,
    pub spatial: f64,
}

pub const COMPLEXITY_SHUFFLE_SEED: u64 = 0x5eed_c0de;

/// Minimum trace length accepted by [`complexity_map`]: `10 n^2`.
pub fn complexity_min_length(n: usize) -> usize {
    10 * n * n
}

/// Complexity map coordinates of a trace with the default shuffle seed.
pub fn complexity_map(events: &[FlowEvent], n: usize) -> Result<ComplexityPoint> {
    complexity_map_seeded(events, n, COMPLEXITY_SHUFFLE_SEED)
}

/// Spatial score: plug-in entropy of the pair distribution over
/// `ln(n (n - 1))`. Temporal score: Miller-Madow order-1 conditional entropy
/// of the pair sequence, over the same estimate on a shuffled copy.
pub fn complexity_map_seeded(events: &[FlowEvent], n: usize, seed: u64) -> Result<ComplexityPoint> {
    if n < 2 {
        return Err(Error::param(format!("complexity map needs n >= 2, got {n}")));
    }
    let required = complexity_min_length(n);
    if events.len() < required {
        return Err(Error::TraceTooShort {
            len: events.len(),
            required,
        });
    }
    let symbols: Vec<u64> = events
        .iter()
        .map(|e| (e.src.0 * n + e.dst.0) as u64)
        .collect();
    let spatial = plugin_entropy(&symbols) / ((n * (n - 1)) as f64).ln();

    let h1 = conditional_entropy_mm(&symbols, n * n);
    let mut shuffled = symbols.clone();
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let h0 = conditional_entropy_mm(&shuffled, n * n);
    let temporal = if h0 > 1e-12 { h1 / h0 } else { 0.0 };
    Ok(ComplexityPoint {
        temporal: temporal.clamp(0.0, 1.0),
        spatial: spatial.clamp(0.0, 1.0),
    })
}

/// Counts of equal values, in ascending value order.
fn histogram(mut values: Vec<u64>) -> Vec<u64> {
    values.sort_unstable();
    let mut counts = Vec::new();
    let mut iter = values.into_iter();
    let Some(mut cur) = iter.next() else {
        return counts;
    };
    let mut run = 1;
    for v in iter {
        if v == cur {
            run += 1;
        } else {
            counts.push(run);
            cur = v;
            run = 1;
        }
    }
    counts.push(run);
    counts
}

fn entropy_from_counts(counts: &[u64]) -> f64 {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let total = total as f64;
    -counts
        .iter()
        .map(|&c| {
            let p = c as f64 / total;
            p * p.ln()
        })
        .sum::<f64>()
}

fn plugin_entropy(symbols: &[u64]) -> f64 {
    entropy_from_counts(&histogram(symbols.to_vec()))
}

fn miller_madow(values: Vec<u64>) -> f64 {
    let samples = values.len();
    let counts = histogram(values);
    if samples == 0 {
        return 0.0;
    }
    entropy_from_counts(&counts) + (counts.len() as f64 - 1.0) / (2.0 * samples as f64)
}

/// `H(X_t | X_{t-1}) = H(X_{t-1}, X_t) - H(X_{t-1})`, both Miller-Madow
/// corrected, over the `len - 1` transitions.
fn conditional_entropy_mm(symbols: &[u64], alphabet: usize) -> f64 {
    if symbols.len() < 2 {
        return 0.0;
    }
    let joint: Vec<u64> = symbols
        .windows(2)
        .map(|w| w[0] * alphabet as u64 + w[1])
        .collect();
    let context = symbols[..symbols.len() - 1].to_vec();
    (miller_madow(joint) - miller_madow(context)).max(0.0)
}
