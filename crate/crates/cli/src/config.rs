//! Experiment configuration: one JSON file, strict schema.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use rdcn::engine::Thresholds;
use rdcn::matching::MatchPolicy;
use rdcn::routing::RoutingPolicy;
use rdcn::traffic::TraceKind;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub network: NetworkConfig,
    #[serde(default)]
    pub traffic: TrafficConfig,
    #[serde(default)]
    pub classifier: Thresholds,
    #[serde(default)]
    pub metrics: MetricsConfig,
    pub run: RunConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum NetworkConfig {
    FatTree {
        racks: usize,
        radix: usize,
    },
    Ring {
        n: usize,
    },
    Complete {
        n: usize,
    },
    DeBruijn {
        n: usize,
    },
    Expander {
        n: usize,
        degree: usize,
        #[serde(default)]
        seed: u64,
    },
    /// ToRs joined through optical spines, one matching per spine per slot.
    Tmt {
        n: usize,
        #[serde(default = "one")]
        capacity: f64,
        spines: Vec<SpineConfig>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SpineConfig {
    Static {
        /// `matching[i]` is the ToR that `i` sends to; `i` itself leaves the
        /// port idle. Defaults to the De Bruijn shift matchings (round-robin
        /// matchings when `n` is not a power of two), one per static spine.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        matching: Option<Vec<usize>>,
    },
    Rotor {
        hold: u64,
        #[serde(default)]
        set: RotorSet,
        /// `(slot offset, matching offset)`; staggered across rotors if unset.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        phase: Option<(u64, usize)>,
    },
    DemandAware {
        epoch: u64,
        #[serde(default)]
        inter_reconfig: u64,
        #[serde(default)]
        policy: MatchPolicy,
    },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RotorSet {
    #[default]
    RoundRobin,
    DeBruijn,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TrafficConfig {
    #[default]
    Empty,
    Generate {
        kind: TraceKind,
        length: usize,
        /// Falls back to `run.seed`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
        #[serde(default = "one")]
        events_per_slot: f64,
        #[serde(default = "one_byte")]
        size: u64,
        #[serde(default = "zipf_alpha")]
        zipf_alpha: f64,
    },
    /// CSV with header `t,src,dst,size`.
    File { path: PathBuf },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsConfig {
    #[serde(default)]
    pub theta: bool,
    #[serde(default)]
    pub theta_star: bool,
    #[serde(default)]
    pub bisection: bool,
    #[serde(default)]
    pub taxes: bool,
    #[serde(default)]
    pub complexity: bool,
    #[serde(default)]
    pub demand: DemandConfig,
    #[serde(default = "shortest_path")]
    pub routing: RoutingPolicy,
    /// Random permutations tried by θ* above the exhaustive size.
    #[serde(default = "samples")]
    pub samples: usize,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        MetricsConfig {
            theta: false,
            theta_star: false,
            bisection: false,
            taxes: false,
            complexity: false,
            demand: DemandConfig::default(),
            routing: shortest_path(),
            samples: samples(),
        }
    }
}

/// Demand matrix for θ and taxes. Rates are per ToR, in units of link
/// capacity.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DemandConfig {
    /// Each ToR spreads one link's worth evenly over the others.
    #[default]
    Uniform,
    /// ToR `i` sends one link's worth to `perm[i]`.
    Permutation { perm: Vec<usize> },
    Matrix { rates: Vec<Vec<f64>> },
    /// Per-pair volume of the traffic section, scaled to saturation.
    Trace,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub horizon: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "eps")]
    pub eps: f64,
    #[serde(default = "yes")]
    pub reconfig_penalty: bool,
    /// Report destination; stdout if unset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub format: OutputFormat,
    /// Per-slot utilization CSV written by `simulate`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub utilization: Option<PathBuf>,
}

fn one() -> f64 {
    1.0
}

fn one_byte() -> u64 {
    1
}

fn zipf_alpha() -> f64 {
    1.2
}

fn shortest_path() -> RoutingPolicy {
    RoutingPolicy::ShortestPath
}

fn samples() -> usize {
    100
}

fn eps() -> f64 {
    0.05
}

fn yes() -> bool {
    true
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| e.to_string())?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.run.horizon == 0 {
            return Err("run.horizon must be at least 1".into());
        }
        if !(self.run.eps > 0.0 && self.run.eps <= 0.5) {
            return Err(format!("run.eps must lie in (0, 0.5], got {}", self.run.eps));
        }
        if let NetworkConfig::Tmt { spines, capacity, .. } = &self.network {
            if spines.is_empty() {
                return Err("network.spines is empty".into());
            }
            if !(*capacity > 0.0 && capacity.is_finite()) {
                return Err(format!("network.capacity must be positive, got {capacity}"));
            }
        }
        if matches!(self.metrics.demand, DemandConfig::Trace) && matches!(self.traffic, TrafficConfig::Empty) {
            return Err("metrics.demand = trace needs a traffic section".into());
        }
        Ok(())
    }

    /// Applies command-line overrides.
    pub fn with_overrides(mut self, seed: Option<u64>, horizon: Option<u64>, out: Option<PathBuf>) -> Result<Self, String> {
        if let Some(s) = seed {
            self.run.seed = s;
        }
        if let Some(h) = horizon {
            self.run.horizon = h;
        }
        if out.is_some() {
            self.run.out = out;
        }
        self.validate()?;
        Ok(self)
    }
}
