//! Report generation and comparison.
//!
//! Folds a directory of per-node trace files into one JSON report, and
//! compares two labeled reports metric by metric to quantify what a source
//! or compiler optimization changed. Percent deltas are taken against the
//! base ("before") report; full precision is kept in the files and rounding
//! to one decimal happens only at presentation.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::profile::{AggregateProfile, PowerProfile, aggregate_max, node_power, profile_of};
use crate::trace::{NodeTrace, TraceError, quantize_power, read_trace};

/// Format major version; reports from different major versions do not
/// compare.
pub const REPORT_FORMAT_VERSION: &str = "1";

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("no trace files in {0}")]
    NoTraces(PathBuf),
    #[error("trace {file}: {source}")]
    MalformedTrace {
        file: PathBuf,
        #[source]
        source: TraceError,
    },
    #[error("duplicate node id {0:?}")]
    DuplicateNode(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("bad report json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("report format version {other:?} does not match {base:?}")]
    VersionMismatch { base: String, other: String },
    #[error("invalid report: {0}")]
    Invalid(String),
    #[error(transparent)]
    Profile(#[from] crate::profile::ProfileError),
}

/// One node's entry in a report. Values carry six fractional digits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeReport {
    pub node_id: String,
    pub w_max_w: f64,
    pub w_med_w: f64,
    pub w_avg_w: f64,
    pub energy_j: f64,
    pub runtime_s: f64,
    pub sample_count: usize,
    /// How close the mean runs to the peak; absent for an all-zero trace.
    pub avg_to_peak_ratio: Option<f64>,
}

impl NodeReport {
    fn from_profile(node_id: String, p: &PowerProfile) -> NodeReport {
        let w_max_w = quantize_power(p.w_max_w);
        let w_avg_w = quantize_power(p.w_avg_w);
        NodeReport {
            node_id,
            w_max_w,
            w_med_w: quantize_power(p.w_med_w),
            w_avg_w,
            energy_j: quantize_power(p.energy_total_j),
            runtime_s: quantize_power(p.runtime_s),
            sample_count: p.sample_count,
            avg_to_peak_ratio: if w_max_w > 0.0 {
                Some(quantize_power(w_avg_w / w_max_w))
            } else {
                None
            },
        }
    }

    pub fn profile(&self) -> PowerProfile {
        PowerProfile {
            w_max_w: self.w_max_w,
            w_med_w: self.w_med_w,
            w_avg_w: self.w_avg_w,
            energy_total_j: self.energy_j,
            runtime_s: self.runtime_s,
            sample_count: self.sample_count,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub w_max_total_w: f64,
    pub energy_total_j: f64,
    pub node_count: usize,
}

/// Aggregated statistics for one labeled run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub version: String,
    pub label: String,
    pub metadata: BTreeMap<String, String>,
    pub nodes: Vec<NodeReport>,
    pub aggregate: AggregateReport,
}

impl Report {
    /// Builds a report from per-node profiles; nodes are ordered by id.
    pub fn new(
        label: impl Into<String>,
        metadata: BTreeMap<String, String>,
        profiles: Vec<(String, PowerProfile)>,
    ) -> Result<Report, ReportError> {
        let mut nodes: Vec<NodeReport> = profiles
            .into_iter()
            .map(|(id, p)| NodeReport::from_profile(id, &p))
            .collect();
        nodes.sort_by(|a, b| a.node_id.cmp(&b.node_id));
        for pair in nodes.windows(2) {
            if pair[0].node_id == pair[1].node_id {
                return Err(ReportError::DuplicateNode(pair[0].node_id.clone()));
            }
        }
        let aggregate = compute_aggregate(&nodes)?;
        Ok(Report {
            version: REPORT_FORMAT_VERSION.to_string(),
            label: label.into(),
            metadata,
            nodes,
            aggregate,
        })
    }

    /// Checks internal consistency: unique node ids and an aggregate that
    /// recomputes from the members.
    pub fn validate(&self) -> Result<(), ReportError> {
        for pair in self.nodes.windows(2) {
            if pair[0].node_id >= pair[1].node_id {
                return Err(ReportError::Invalid(format!(
                    "nodes not strictly ordered by id at {:?}",
                    pair[1].node_id
                )));
            }
        }
        if self.nodes.is_empty() {
            return Err(ReportError::Invalid("report has no nodes".into()));
        }
        let recomputed = compute_aggregate(&self.nodes)?;
        if recomputed != self.aggregate {
            return Err(ReportError::Invalid(format!(
                "aggregate {:?} does not recompute from members ({recomputed:?})",
                self.aggregate
            )));
        }
        Ok(())
    }

    fn major_version(&self) -> &str {
        self.version.split('.').next().unwrap_or(&self.version)
    }
}

fn compute_aggregate(nodes: &[NodeReport]) -> Result<AggregateReport, ReportError> {
    let profiles: Vec<PowerProfile> = nodes.iter().map(NodeReport::profile).collect();
    let agg: AggregateProfile = aggregate_max(&profiles)?;
    Ok(AggregateReport {
        w_max_total_w: agg.w_max_total_w,
        energy_total_j: quantize_power(agg.energy_total_j),
        node_count: agg.node_count,
    })
}

/// Profiles every `*.trace` file in a directory into one report.
pub fn export_report(
    trace_dir: &Path,
    label: &str,
    metadata: BTreeMap<String, String>,
) -> Result<Report, ReportError> {
    let mut paths: Vec<PathBuf> = fs::read_dir(trace_dir)
        .map_err(|source| ReportError::Io {
            path: trace_dir.to_path_buf(),
            source,
        })?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "trace"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(ReportError::NoTraces(trace_dir.to_path_buf()));
    }

    let mut profiles = Vec::with_capacity(paths.len());
    for path in &paths {
        let trace = read_trace(path).map_err(|source| ReportError::MalformedTrace {
            file: path.clone(),
            source,
        })?;
        let profile = profile_of(&trace)?;
        profiles.push((trace.node_id, profile));
    }
    Report::new(label, metadata, profiles)
}

pub fn render_report(report: &Report) -> Result<String, ReportError> {
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    Ok(text)
}

pub fn write_report(report: &Report, path: &Path) -> Result<(), ReportError> {
    let text = render_report(report)?;
    fs::write(path, text).map_err(|source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_report(path: &Path) -> Result<Report, ReportError> {
    let text = fs::read_to_string(path).map_err(|source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let report: Report = serde_json::from_str(&text)?;
    report.validate()?;
    Ok(report)
}

/// One metric's before/after values. The percent delta is taken against
/// the base value and is absent when the base is zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricDelta {
    pub base: f64,
    pub other: f64,
    pub delta_abs: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_pct: Option<f64>,
}

impl MetricDelta {
    fn between(base: f64, other: f64) -> MetricDelta {
        MetricDelta {
            base,
            other,
            delta_abs: other - base,
            delta_pct: if base != 0.0 {
                Some(100.0 * (other - base) / base)
            } else {
                None
            },
        }
    }
}

/// Metric-by-metric difference between two labeled runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub version: String,
    pub base_label: String,
    pub other_label: String,
    /// Run-level metrics: w_max, w_med, w_avg, energy_total, runtime.
    pub metrics: BTreeMap<String, MetricDelta>,
    /// Per-node metrics for node ids present in both reports.
    pub nodes: BTreeMap<String, BTreeMap<String, MetricDelta>>,
}

pub const COMPARED_METRICS: [&str; 5] = ["w_max", "w_med", "w_avg", "energy_total", "runtime"];

/// Run-level metric values: peaks and energy from the aggregate, median and
/// mean power as totals across nodes, runtime as the longest node.
fn run_metrics(report: &Report) -> BTreeMap<&'static str, f64> {
    let mut m = BTreeMap::new();
    m.insert("w_max", report.aggregate.w_max_total_w);
    m.insert("w_med", report.nodes.iter().map(|n| n.w_med_w).sum());
    m.insert("w_avg", report.nodes.iter().map(|n| n.w_avg_w).sum());
    m.insert("energy_total", report.aggregate.energy_total_j);
    m.insert("runtime", report.nodes.iter().map(|n| n.runtime_s).fold(0.0, f64::max));
    m
}

fn node_metrics(node: &NodeReport) -> BTreeMap<&'static str, f64> {
    let mut m = BTreeMap::new();
    m.insert("w_max", node.w_max_w);
    m.insert("w_med", node.w_med_w);
    m.insert("w_avg", node.w_avg_w);
    m.insert("energy_total", node.energy_j);
    m.insert("runtime", node.runtime_s);
    m
}

/// Compares two reports of the same format version. Disjoint node sets
/// compare at the run level only.
pub fn compare(base: &Report, other: &Report) -> Result<ComparisonReport, ReportError> {
    if base.major_version() != other.major_version() {
        return Err(ReportError::VersionMismatch {
            base: base.version.clone(),
            other: other.version.clone(),
        });
    }

    let base_metrics = run_metrics(base);
    let other_metrics = run_metrics(other);
    let metrics = COMPARED_METRICS
        .iter()
        .map(|&name| {
            (
                name.to_string(),
                MetricDelta::between(base_metrics[name], other_metrics[name]),
            )
        })
        .collect();

    let mut nodes = BTreeMap::new();
    for b in &base.nodes {
        if let Some(o) = other.nodes.iter().find(|o| o.node_id == b.node_id) {
            let bm = node_metrics(b);
            let om = node_metrics(o);
            let deltas = COMPARED_METRICS
                .iter()
                .map(|&name| (name.to_string(), MetricDelta::between(bm[name], om[name])))
                .collect();
            nodes.insert(b.node_id.clone(), deltas);
        }
    }

    Ok(ComparisonReport {
        version: REPORT_FORMAT_VERSION.to_string(),
        base_label: base.label.clone(),
        other_label: other.label.clone(),
        metrics,
        nodes,
    })
}

pub fn render_comparison(cmp: &ComparisonReport) -> Result<String, ReportError> {
    let mut text = serde_json::to_string_pretty(cmp)?;
    text.push('\n');
    Ok(text)
}

pub fn write_comparison(cmp: &ComparisonReport, path: &Path) -> Result<(), ReportError> {
    let text = render_comparison(cmp)?;
    fs::write(path, text).map_err(|source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Two-column plot data for one trace: `t_ms<TAB>total_w` per sample.
pub fn plot_data(trace: &NodeTrace) -> String {
    let mut out = String::new();
    for s in &trace.samples {
        out.push_str(&format!("{}\t{}\n", s.t_ms, node_power(s)));
    }
    out
}
