//! Per-node trace files.
//!
//! A trace is the ordered series of per-second component power samples for
//! one node, persisted as line-oriented text:
//!
//! ```text
//! #powerprof-trace v1 node=<id> period_ms=<p>
//! #meta <key>=<value>
//! t_ms,compute_w,disk_w,net_w
//! ```
//!
//! Power values carry at most six fractional digits (microwatt resolution);
//! [`PowerSample::new`] quantizes accordingly, so every valid trace survives
//! a write/read round trip with exact equality.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

pub const TRACE_MAGIC: &str = "#powerprof-trace v1";

#[derive(Debug, thiserror::Error)]
pub enum TraceError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed trace {path}, line {line}: {reason}")]
    Malformed {
        path: PathBuf,
        line: usize,
        reason: String,
    },
    #[error("trace has no samples")]
    Empty,
    #[error("invalid sample: {0}")]
    InvalidSample(String),
    #[error("invalid metadata key {0:?}")]
    InvalidMetadataKey(String),
}

/// Rounds to microwatt resolution, the trace format's power granularity.
pub(crate) fn quantize_power(w: f64) -> f64 {
    (w * 1e6).round() / 1e6
}

/// Power drawn by each component class over one sampling interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerSample {
    /// Milliseconds since collection start.
    pub t_ms: u64,
    pub compute_w: f64,
    pub disk_w: f64,
    pub net_w: f64,
}

impl PowerSample {
    pub fn new(t_ms: u64, compute_w: f64, disk_w: f64, net_w: f64) -> Result<PowerSample, TraceError> {
        for (label, w) in [("compute_w", compute_w), ("disk_w", disk_w), ("net_w", net_w)] {
            if !w.is_finite() || w < 0.0 {
                return Err(TraceError::InvalidSample(format!(
                    "{label} must be finite and non-negative, got {w}"
                )));
            }
        }
        Ok(PowerSample {
            t_ms,
            compute_w: quantize_power(compute_w),
            disk_w: quantize_power(disk_w),
            net_w: quantize_power(net_w),
        })
    }
}

/// The ordered sample series for one node.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeTrace {
    pub node_id: String,
    pub period_ms: u64,
    pub samples: Vec<PowerSample>,
    pub metadata: BTreeMap<String, String>,
}

impl NodeTrace {
    pub fn new(node_id: impl Into<String>, period_ms: u64) -> NodeTrace {
        NodeTrace {
            node_id: node_id.into(),
            period_ms,
            samples: Vec::new(),
            metadata: BTreeMap::new(),
        }
    }

    /// Appends a sample; `t_ms` must exceed the previous sample's.
    pub fn push(&mut self, sample: PowerSample) -> Result<(), TraceError> {
        if let Some(last) = self.samples.last() {
            if sample.t_ms <= last.t_ms {
                return Err(TraceError::InvalidSample(format!(
                    "t_ms {} not after previous {}",
                    sample.t_ms, last.t_ms
                )));
            }
        }
        self.samples.push(sample);
        Ok(())
    }
}

/// Node ids become file names and header tokens; keep them to a safe set.
pub fn is_safe_node_id(id: &str) -> bool {
    !id.is_empty()
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
}

fn check_metadata_key(key: &str) -> Result<(), TraceError> {
    if key.is_empty() || key.contains(['=', '\n']) || key.contains(char::is_whitespace) {
        return Err(TraceError::InvalidMetadataKey(key.to_string()));
    }
    Ok(())
}

fn format_power(w: f64) -> String {
    // Shortest round-trip representation; quantized values never show more
    // than six fractional digits.
    format!("{w}")
}

/// Serializes a trace to its text form.
pub fn render_trace(trace: &NodeTrace) -> Result<String, TraceError> {
    if trace.samples.is_empty() {
        return Err(TraceError::Empty);
    }
    if !is_safe_node_id(&trace.node_id) {
        return Err(TraceError::InvalidSample(format!(
            "node id {:?} is not filesystem-safe",
            trace.node_id
        )));
    }
    if trace.period_ms == 0 {
        return Err(TraceError::InvalidSample("period_ms must be positive".into()));
    }
    let mut out = String::new();
    writeln!(
        out,
        "{TRACE_MAGIC} node={} period_ms={}",
        trace.node_id, trace.period_ms
    )
    .unwrap();
    for (key, value) in &trace.metadata {
        check_metadata_key(key)?;
        if value.contains('\n') {
            return Err(TraceError::InvalidMetadataKey(format!("{key} (value has newline)")));
        }
        writeln!(out, "#meta {key}={value}").unwrap();
    }
    for s in &trace.samples {
        writeln!(
            out,
            "{},{},{},{}",
            s.t_ms,
            format_power(s.compute_w),
            format_power(s.disk_w),
            format_power(s.net_w)
        )
        .unwrap();
    }
    Ok(out)
}

/// Writes a trace file; the parent directory must exist.
pub fn write_trace(trace: &NodeTrace, path: &Path) -> Result<(), TraceError> {
    let text = render_trace(trace)?;
    fs::write(path, text).map_err(|source| TraceError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads and validates a trace file.
pub fn read_trace(path: &Path) -> Result<NodeTrace, TraceError> {
    let text = fs::read_to_string(path).map_err(|source| TraceError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_trace(&text, path)
}

pub fn parse_trace(text: &str, origin: &Path) -> Result<NodeTrace, TraceError> {
    let malformed = |line: usize, reason: String| TraceError::Malformed {
        path: origin.to_path_buf(),
        line,
        reason,
    };

    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| malformed(1, "empty file".into()))?;
    let rest = header
        .strip_prefix(TRACE_MAGIC)
        .ok_or_else(|| malformed(1, format!("header must start with {TRACE_MAGIC:?}")))?;
    let mut node_id: Option<String> = None;
    let mut period_ms: Option<u64> = None;
    for token in rest.split_whitespace() {
        match token.split_once('=') {
            Some(("node", v)) => node_id = Some(v.to_string()),
            Some(("period_ms", v)) => {
                period_ms = Some(
                    v.parse()
                        .map_err(|e| malformed(1, format!("bad period_ms: {e}")))?,
                )
            }
            _ => return Err(malformed(1, format!("unknown header token {token:?}"))),
        }
    }
    let node_id = node_id.ok_or_else(|| malformed(1, "missing node=".into()))?;
    if !is_safe_node_id(&node_id) {
        return Err(malformed(1, format!("unsafe node id {node_id:?}")));
    }
    let period_ms = period_ms.ok_or_else(|| malformed(1, "missing period_ms=".into()))?;
    if period_ms == 0 {
        return Err(malformed(1, "period_ms must be positive".into()));
    }

    let mut trace = NodeTrace::new(node_id, period_ms);
    for (idx, line) in lines {
        let lineno = idx + 1;
        if line.is_empty() {
            continue;
        }
        if let Some(meta) = line.strip_prefix("#meta ") {
            let (key, value) = meta
                .split_once('=')
                .ok_or_else(|| malformed(lineno, "metadata line without '='".into()))?;
            check_metadata_key(key).map_err(|e| malformed(lineno, e.to_string()))?;
            if trace.metadata.insert(key.to_string(), value.to_string()).is_some() {
                return Err(malformed(lineno, format!("duplicate metadata key {key:?}")));
            }
            continue;
        }
        if line.starts_with('#') {
            return Err(malformed(lineno, format!("unknown directive {line:?}")));
        }

        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(malformed(
                lineno,
                format!("expected t_ms,compute_w,disk_w,net_w; got {} fields", fields.len()),
            ));
        }
        let t_ms: u64 = fields[0]
            .parse()
            .map_err(|e| malformed(lineno, format!("bad t_ms: {e}")))?;
        let mut powers = [0.0f64; 3];
        for (slot, field) in powers.iter_mut().zip(&fields[1..]) {
            *slot = parse_power(field).map_err(|e| malformed(lineno, e))?;
        }
        let sample = PowerSample::new(t_ms, powers[0], powers[1], powers[2])
            .map_err(|e| malformed(lineno, e.to_string()))?;
        trace
            .push(sample)
            .map_err(|e| malformed(lineno, e.to_string()))?;
    }
    if trace.samples.is_empty() {
        return Err(TraceError::Empty);
    }
    Ok(trace)
}

/// Plain decimal, non-negative, at most six fractional digits.
fn parse_power(s: &str) -> Result<f64, String> {
    let (int_part, frac_part) = match s.split_once('.') {
        Some((i, f)) => (i, f),
        None => (s, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(format!("empty power field {s:?}"));
    }
    if !int_part.chars().all(|c| c.is_ascii_digit())
        || !frac_part.chars().all(|c| c.is_ascii_digit())
    {
        return Err(format!("power {s:?} must be a plain non-negative decimal"));
    }
    if frac_part.len() > 6 {
        return Err(format!("power {s:?} has more than 6 fractional digits"));
    }
    s.parse::<f64>().map_err(|e| format!("bad power {s:?}: {e}"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample(t: u64, c: f64, d: f64, n: f64) -> PowerSample {
        PowerSample::new(t, c, d, n).unwrap()
    }

    fn demo_trace() -> NodeTrace {
        let mut t = NodeTrace::new("n0", 1000);
        t.metadata.insert("opt_flag".into(), "-O2".into());
        t.metadata.insert("platform".into(), "desk".into());
        t.push(sample(1000, 12.5, 0.0, 0.25)).unwrap();
        t.push(sample(2000, 13.0, 1.5, 0.0)).unwrap();
        t.push(sample(3000, 11.75, 0.0, 0.0)).unwrap();
        t
    }

    #[test]
    fn round_trips_exactly() {
        let tmp = tempfile::tempdir().unwrap();
        let path = tmp.path().join("n0.trace");
        let trace = demo_trace();
        write_trace(&trace, &path).unwrap();
        let back = read_trace(&path).unwrap();
        assert_eq!(back, trace);
    }

    #[test]
    fn rejects_decreasing_timestamps() {
        let text = "#powerprof-trace v1 node=n0 period_ms=1000\n2000,1,0,0\n1000,1,0,0\n";
        let err = parse_trace(text, Path::new("x.trace")).unwrap_err();
        assert!(matches!(err, TraceError::Malformed { line: 3, .. }));
    }

    #[test]
    fn rejects_negative_power() {
        let text = "#powerprof-trace v1 node=n0 period_ms=1000\n1000,-1,0,0\n";
        let err = parse_trace(text, Path::new("x.trace")).unwrap_err();
        assert!(matches!(err, TraceError::Malformed { line: 2, .. }));
    }

    #[test]
    fn rejects_non_finite_power() {
        let text = "#powerprof-trace v1 node=n0 period_ms=1000\n1000,inf,0,0\n";
        assert!(parse_trace(text, Path::new("x.trace")).is_err());
        let text = "#powerprof-trace v1 node=n0 period_ms=1000\n1000,NaN,0,0\n";
        assert!(parse_trace(text, Path::new("x.trace")).is_err());
    }

    #[test]
    fn rejects_excess_precision() {
        let text = "#powerprof-trace v1 node=n0 period_ms=1000\n1000,0.1234567,0,0\n";
        let err = parse_trace(text, Path::new("x.trace")).unwrap_err();
        assert!(matches!(err, TraceError::Malformed { line: 2, .. }));
    }

    #[test]
    fn rejects_sampleless_file() {
        let text = "#powerprof-trace v1 node=n0 period_ms=1000\n";
        assert!(matches!(
            parse_trace(text, Path::new("x.trace")),
            Err(TraceError::Empty)
        ));
    }

    #[test]
    fn empty_trace_does_not_serialize() {
        let t = NodeTrace::new("n0", 1000);
        assert!(matches!(render_trace(&t), Err(TraceError::Empty)));
    }

    #[test]
    fn sample_constructor_quantizes_to_microwatts() {
        let s = sample(0, 0.123456789, 0.0, 0.0);
        assert_eq!(s.compute_w, 0.123457);
    }

    #[test]
    fn unsafe_node_ids_rejected() {
        assert!(!is_safe_node_id(""));
        assert!(!is_safe_node_id("a b"));
        assert!(!is_safe_node_id("a/b"));
        assert!(is_safe_node_id("node-07_x.1"));
    }

    prop_compose! {
        fn arb_sample(t: u64)(c in 0.0f64..5000.0, d in 0.0f64..500.0, n in 0.0f64..500.0)
            -> PowerSample
        {
            PowerSample::new(t, c, d, n).unwrap()
        }
    }

    fn arb_trace() -> impl Strategy<Value = NodeTrace> {
        (
            1u64..5000,
            prop::collection::vec((1u64..100, 0.0f64..5000.0, 0.0f64..500.0, 0.0f64..500.0), 1..40),
            prop::collection::btree_map("[a-z][a-z0-9_]{0,8}", "[ -<>-~]{0,12}", 0..4),
        )
            .prop_map(|(period, steps, metadata)| {
                let mut trace = NodeTrace::new("node-x", period);
                trace.metadata = metadata;
                let mut t = 0u64;
                for (dt, c, d, n) in steps {
                    t += dt;
                    trace.push(PowerSample::new(t, c, d, n).unwrap()).unwrap();
                }
                trace
            })
    }

    proptest! {
        #[test]
        fn randomized_traces_round_trip(trace in arb_trace()) {
            let text = render_trace(&trace).unwrap();
            let back = parse_trace(&text, Path::new("prop.trace")).unwrap();
            prop_assert_eq!(back, trace);
        }
    }
}
