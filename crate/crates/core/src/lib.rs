//! Power-consumption profiling for parallel programs.
//!
//! The pipeline: an energy [`source`](crate::source) exposes cumulative
//! counters (powercap sysfs, MSR registers, or a deterministic replay
//! file); the [`collector`](crate::collector) samples them once per period
//! into a per-node [`trace`](crate::trace); the
//! [`profile`](crate::profile) module reduces a trace to its peak, median,
//! mean, energy, and runtime; the [`exporter`](crate::exporter) folds
//! traces into reports and compares labeled runs; the
//! [`runner`](crate::runner) wraps a workload command with a collection;
//! and [`kernels`](crate::kernels) provides a seeded workload corpus to
//! measure.

pub mod collector;
pub mod exporter;
pub mod kernels;
pub mod profile;
pub mod runner;
pub mod source;
pub mod trace;

pub use collector::{CollectorError, SamplingConfig, run_collection, sample_once};
pub use exporter::{
    ComparisonReport, MetricDelta, Report, ReportError, compare, export_report, plot_data,
    read_report, write_comparison, write_report,
};
pub use kernels::{KernelError, KernelId, KernelResult, KernelSpec, Variant, run_kernel};
pub use profile::{
    AggregateProfile, PowerProfile, ProfileError, aggregate_max, energy_total, node_power,
    profile_of, w_avg, w_max, w_med,
};
pub use runner::{RunResult, RunSpec, RunnerError, run_workload};
pub use source::{
    ComponentClass, DomainDescriptor, EnergyReading, EnergySource, SourceError, SourceKind,
    energy_delta, enumerate_domains, open_source,
};
pub use trace::{NodeTrace, PowerSample, TraceError, read_trace, write_trace};
