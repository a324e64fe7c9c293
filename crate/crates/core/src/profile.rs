//! Power-profile statistics.
//!
//! Node power at each instant is the sum of the compute, disk, and network
//! component powers. A trace reduces to the pair of peak and median power
//! (plus mean, total energy, and runtime), and multi-node peaks aggregate by
//! summation: the worst case is every node hitting its peak simultaneously.
//!
//! All operations are pure functions of their inputs.

use crate::trace::{NodeTrace, PowerSample};

#[derive(Debug, thiserror::Error)]
pub enum ProfileError {
    #[error("trace has no samples")]
    EmptyTrace,
    #[error("series has no values")]
    EmptySeries,
    #[error("profile list is empty")]
    EmptyList,
}

/// Statistical summary of one node trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerProfile {
    pub w_max_w: f64,
    pub w_med_w: f64,
    pub w_avg_w: f64,
    pub energy_total_j: f64,
    pub runtime_s: f64,
    pub sample_count: usize,
}

/// Multi-node roll-up: worst-case simultaneous peak and total energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggregateProfile {
    pub w_max_total_w: f64,
    pub energy_total_j: f64,
    pub node_count: usize,
}

/// Total node power for one sample: compute + disk + net.
pub fn node_power(sample: &PowerSample) -> f64 {
    sample.compute_w + sample.disk_w + sample.net_w
}

/// Peak node power over the whole trace.
pub fn w_max(trace: &NodeTrace) -> Result<f64, ProfileError> {
    trace
        .samples
        .iter()
        .map(node_power)
        .fold(None, |acc: Option<f64>, p| {
            Some(acc.map_or(p, |m| if p > m { p } else { m }))
        })
        .ok_or(ProfileError::EmptyTrace)
}

/// Median of a power series: sort ascending, take the middle element for
/// odd length or the mean of the two middle elements for even length. The
/// input series is left unmodified.
pub fn w_med(powers: &[f64]) -> Result<f64, ProfileError> {
    if powers.is_empty() {
        return Err(ProfileError::EmptySeries);
    }
    let mut sorted = powers.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let n = sorted.len();
    if n % 2 == 1 {
        Ok(sorted[n / 2])
    } else {
        Ok((sorted[n / 2 - 1] + sorted[n / 2]) / 2.0)
    }
}

/// Arithmetic mean of node power over the trace.
pub fn w_avg(trace: &NodeTrace) -> Result<f64, ProfileError> {
    if trace.samples.is_empty() {
        return Err(ProfileError::EmptyTrace);
    }
    let sum: f64 = trace.samples.iter().map(node_power).sum();
    Ok(sum / trace.samples.len() as f64)
}

/// Total energy in joules by the rectangle rule: each sample's power times
/// its actual preceding interval, with the first sample covering one period.
pub fn energy_total(trace: &NodeTrace) -> Result<f64, ProfileError> {
    if trace.samples.is_empty() {
        return Err(ProfileError::EmptyTrace);
    }
    let mut prev_t: Option<u64> = None;
    let mut joules = 0.0;
    for sample in &trace.samples {
        let interval_ms = match prev_t {
            Some(t) => sample.t_ms - t,
            None => trace.period_ms,
        };
        joules += node_power(sample) * (interval_ms as f64 / 1000.0);
        prev_t = Some(sample.t_ms);
    }
    Ok(joules)
}

/// Runtime in seconds: timestamp span plus one period, so a single sample
/// covers exactly one sampling interval.
pub fn runtime_s(trace: &NodeTrace) -> Result<f64, ProfileError> {
    let first = trace.samples.first().ok_or(ProfileError::EmptyTrace)?;
    let last = trace.samples.last().unwrap();
    Ok(((last.t_ms - first.t_ms) + trace.period_ms) as f64 / 1000.0)
}

/// Assembles the full profile for one trace.
pub fn profile_of(trace: &NodeTrace) -> Result<PowerProfile, ProfileError> {
    let powers: Vec<f64> = trace.samples.iter().map(node_power).collect();
    Ok(PowerProfile {
        w_max_w: w_max(trace)?,
        w_med_w: w_med(&powers)?,
        w_avg_w: w_avg(trace)?,
        energy_total_j: energy_total(trace)?,
        runtime_s: runtime_s(trace)?,
        sample_count: trace.samples.len(),
    })
}

/// Sums member peaks and energies.
///
/// Peaks accumulate at microwatt resolution (the trace format's power
/// granularity), which makes the total independent of summation order and
/// aggregation associative over any partitioning of the node list.
pub fn aggregate_max(profiles: &[PowerProfile]) -> Result<AggregateProfile, ProfileError> {
    if profiles.is_empty() {
        return Err(ProfileError::EmptyList);
    }
    let peak_uw: i128 = profiles.iter().map(|p| to_microwatts(p.w_max_w)).sum();
    let energy: f64 = profiles.iter().map(|p| p.energy_total_j).sum();
    Ok(AggregateProfile {
        w_max_total_w: from_microwatts(peak_uw),
        energy_total_j: energy,
        node_count: profiles.len(),
    })
}

impl AggregateProfile {
    /// Merges two aggregates as if their node lists were concatenated.
    pub fn combine(&self, other: &AggregateProfile) -> AggregateProfile {
        AggregateProfile {
            w_max_total_w: from_microwatts(
                to_microwatts(self.w_max_total_w) + to_microwatts(other.w_max_total_w),
            ),
            energy_total_j: self.energy_total_j + other.energy_total_j,
            node_count: self.node_count + other.node_count,
        }
    }
}

fn to_microwatts(w: f64) -> i128 {
    (w * 1e6).round() as i128
}

fn from_microwatts(uw: i128) -> f64 {
    uw as f64 / 1e6
}
