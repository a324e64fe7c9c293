//! Periodic sampler.
//!
//! Converts counter snapshots into per-period component power samples and
//! persists one trace file per node. Ticks are fixed-rate (tick k fires at
//! start + k * period) so timestamps do not drift; a missed tick yields one
//! sample covering the actual elapsed interval. The first counter snapshot
//! only establishes the baseline, so n cumulative acquisitions produce n-1
//! samples, while a direct-power source produces one sample per row.

use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::{Duration, Instant};

use crate::source::{Acquisition, ComponentClass, EnergyReading, EnergySource, SourceError, energy_delta};
use crate::trace::{NodeTrace, PowerSample, TraceError, is_safe_node_id, write_trace};

/// Sleep granularity while waiting for the next tick; bounds stop latency.
const STOP_POLL: Duration = Duration::from_millis(20);

pub const DEFAULT_PERIOD_MS: u64 = 1000;
pub const MIN_PERIOD_MS: u64 = 10;

#[derive(Debug, Clone)]
pub struct SamplingConfig {
    pub period_ms: u64,
    pub node_id: String,
    pub output_dir: PathBuf,
}

impl SamplingConfig {
    pub fn new(node_id: impl Into<String>, output_dir: impl Into<PathBuf>) -> SamplingConfig {
        SamplingConfig {
            period_ms: DEFAULT_PERIOD_MS,
            node_id: node_id.into(),
            output_dir: output_dir.into(),
        }
    }

    pub fn validate(&self) -> Result<(), CollectorError> {
        if self.period_ms < MIN_PERIOD_MS {
            return Err(CollectorError::InvalidConfig(format!(
                "period_ms {} below minimum {MIN_PERIOD_MS}",
                self.period_ms
            )));
        }
        if !is_safe_node_id(&self.node_id) {
            return Err(CollectorError::InvalidConfig(format!(
                "node id {:?} is not filesystem-safe",
                self.node_id
            )));
        }
        Ok(())
    }

    pub fn trace_path(&self) -> PathBuf {
        self.output_dir.join(format!("{}.trace", self.node_id))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CollectorError {
    #[error(transparent)]
    Source(#[from] SourceError),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error("zero elapsed time between readings")]
    ZeroInterval,
    #[error("collection stopped before the first sample")]
    EmptyTrace,
    #[error("invalid sampling config: {0}")]
    InvalidConfig(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Takes one acquisition and turns it into a power sample.
///
/// Counter sources yield `power = delta / elapsed` per domain, summed into
/// the component class of each domain; `prev` must come from the same
/// source. Direct-power sources pass watts through and leave `prev`
/// untouched. Sample timestamps are rebased against `origin_ms`, the
/// timestamp of the first acquisition of the collection.
pub fn sample_once(
    source: &mut dyn EnergySource,
    prev: &[EnergyReading],
    origin_ms: u64,
) -> Result<(PowerSample, Vec<EnergyReading>), CollectorError> {
    let ranges: HashMap<String, (ComponentClass, u64)> = source
        .domains()
        .iter()
        .map(|d| (d.domain_id.clone(), (d.component_class, d.max_energy_range_uj)))
        .collect();

    match source.acquire()? {
        Acquisition::Counters(curr) => {
            let prev_by_id: HashMap<&str, &EnergyReading> =
                prev.iter().map(|r| (r.domain_id.as_str(), r)).collect();
            let mut by_class = [0.0f64; 3];
            let mut t_ms = 0u64;
            for reading in &curr {
                let (class, range) = ranges
                    .get(reading.domain_id.as_str())
                    .copied()
                    .ok_or_else(|| SourceError::DomainMismatch {
                        expected: "a declared domain".to_string(),
                        actual: reading.domain_id.clone(),
                    })?;
                let before = prev_by_id
                    .get(reading.domain_id.as_str())
                    .ok_or_else(|| SourceError::DomainMismatch {
                        expected: reading.domain_id.clone(),
                        actual: "missing baseline reading".to_string(),
                    })?;
                let elapsed_ms = reading.timestamp_ms.saturating_sub(before.timestamp_ms);
                if elapsed_ms == 0 {
                    return Err(CollectorError::ZeroInterval);
                }
                let delta_uj = energy_delta(before, reading, range)?;
                // uJ / (ms * 1000) = W
                by_class[class_index(class)] += delta_uj as f64 / (elapsed_ms as f64 * 1000.0);
                t_ms = reading.timestamp_ms.saturating_sub(origin_ms);
            }
            let sample = PowerSample::new(t_ms, by_class[0], by_class[1], by_class[2])?;
            Ok((sample, curr))
        }
        Acquisition::Power(row) => {
            let mut by_class = [0.0f64; 3];
            for (domain, watts) in source.domains().iter().zip(&row.watts) {
                by_class[class_index(domain.component_class)] += watts;
            }
            let t_ms = row.timestamp_ms.saturating_sub(origin_ms);
            let sample = PowerSample::new(t_ms, by_class[0], by_class[1], by_class[2])?;
            Ok((sample, prev.to_vec()))
        }
    }
}

fn class_index(class: ComponentClass) -> usize {
    match class {
        ComponentClass::Compute => 0,
        ComponentClass::Disk => 1,
        ComponentClass::Net => 2,
    }
}

/// Samples at each period tick until `stop` is raised or a replay source
/// runs out, then flushes the trace to `<output_dir>/<node_id>.trace` and
/// returns it. The returned trace equals the file content.
pub fn run_collection(
    source: &mut dyn EnergySource,
    config: &SamplingConfig,
    metadata: &BTreeMap<String, String>,
    stop: &AtomicBool,
) -> Result<NodeTrace, CollectorError> {
    config.validate()?;
    std::fs::create_dir_all(&config.output_dir)?;

    let mut trace = NodeTrace::new(config.node_id.clone(), config.period_ms);
    trace.metadata = metadata.clone();

    if stop.load(Ordering::SeqCst) {
        return Err(CollectorError::EmptyTrace);
    }

    // First acquisition: baseline for counter sources, first sample for
    // direct-power sources.
    let start = Instant::now();
    let (mut prev, origin_ms) = match source.acquire() {
        Ok(Acquisition::Counters(readings)) => {
            let origin = readings.first().map(|r| r.timestamp_ms).unwrap_or(0);
            (readings, origin)
        }
        Ok(Acquisition::Power(row)) => {
            let origin = row.timestamp_ms;
            let mut by_class = [0.0f64; 3];
            for (domain, watts) in source.domains().iter().zip(&row.watts) {
                by_class[class_index(domain.component_class)] += watts;
            }
            trace.push(PowerSample::new(0, by_class[0], by_class[1], by_class[2])?)?;
            (Vec::new(), origin)
        }
        Err(SourceError::ReplayExhausted) => return Err(CollectorError::EmptyTrace),
        Err(e) => return Err(e.into()),
    };

    let period = Duration::from_millis(config.period_ms);
    let mut tick: u32 = 1;
    'ticks: loop {
        let deadline = start + period * tick;
        loop {
            if stop.load(Ordering::SeqCst) {
                break 'ticks;
            }
            let now = Instant::now();
            if now >= deadline {
                break;
            }
            std::thread::sleep(STOP_POLL.min(deadline - now));
        }

        match sample_once(source, &prev, origin_ms) {
            Ok((sample, readings)) => {
                trace.push(sample)?;
                prev = readings;
            }
            Err(CollectorError::Source(SourceError::ReplayExhausted)) => break,
            Err(e) => return Err(e),
        }
        tick += 1;
    }

    if trace.samples.is_empty() {
        return Err(CollectorError::EmptyTrace);
    }
    write_trace(&trace, &config.trace_path())?;
    Ok(trace)
}
