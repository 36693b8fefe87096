//! Discrete-timeslot model, schedulers, metrics and fluid simulator for
//! reconfigurable datacenter networks (RDCNs).
//!
//! The building blocks, bottom-up:
//!
//! * [`graph`]: directed timeslot graphs and the [`EvolvingGraph`] that
//!   produces one of them per slot, including the reconfiguration-slot
//!   capacity rule.
//! * [`matching`]: partial permutations and maximum-weight matching.
//! * [`topology`]: static reference topologies and matching decompositions.
//! * [`sched`]: the ToR-Matching-ToR network of spine schedulers.
//! * [`traffic`]: demand matrices, traces and the complexity map.
//! * [`routing`]: shortest-path, De Bruijn greedy and Valiant routing.
//! * [`metrics`]: throughput, bisection bandwidth and taxes.
//! * [`engine`]: the slot-by-slot fluid simulation.

pub mod engine;
pub mod error;
pub mod graph;
pub mod matching;
pub mod metrics;
pub mod routing;
pub mod sched;
pub mod topology;
pub mod traffic;

pub use error::{Error, Result};
pub use graph::{Circuit, Digraph, EvolvingGraph, NodeId, TimeslotGraph};
pub use matching::{Matching, MatchingSet};
