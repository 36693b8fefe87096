//! Throughput, bisection bandwidth and taxes.

pub mod bisection;
pub mod report;
pub mod taxes;
pub mod throughput;

pub use bisection::{bisection_bandwidth, BisectionReport};
pub use report::MetricsReport;
pub use taxes::{taxes, TaxReport};
pub use throughput::{
    throughput, throughput_evolving, throughput_static, worst_case_throughput, ThroughputGraph, ThroughputResult,
    WorstCase,
};
