//! Energy counter sources.
//!
//! A source exposes one or more power domains, each backed by a cumulative
//! energy counter that wraps at a fixed range. Three providers are supported:
//! the powercap sysfs tree, raw MSR registers, and file-backed replay for
//! deterministic, hardware-free runs.

mod msr;
mod powercap;
mod replay;

pub use msr::MsrSource;
pub use powercap::PowercapSource;
pub use replay::ReplaySource;

use std::fmt;
use std::path::PathBuf;

/// Component class a power domain contributes to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ComponentClass {
    Compute,
    Disk,
    Net,
}

impl ComponentClass {
    pub fn parse(s: &str) -> Option<ComponentClass> {
        match s {
            "compute" => Some(ComponentClass::Compute),
            "disk" => Some(ComponentClass::Disk),
            "net" => Some(ComponentClass::Net),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            ComponentClass::Compute => "compute",
            ComponentClass::Disk => "disk",
            ComponentClass::Net => "net",
        }
    }
}

impl fmt::Display for ComponentClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One power domain exposed by a source.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DomainDescriptor {
    /// Opaque key, unique within a source.
    pub domain_id: String,
    /// Human label, e.g. "package-0" or "dram".
    pub name: String,
    /// Counter value in microjoules at which the counter wraps to zero.
    pub max_energy_range_uj: u64,
    pub component_class: ComponentClass,
}

/// One cumulative energy counter observation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnergyReading {
    pub domain_id: String,
    /// Milliseconds on the source's monotonic timebase (arbitrary epoch).
    pub timestamp_ms: u64,
    /// Cumulative microjoules, always below the domain's wrap range.
    pub energy_uj: u64,
}

/// One direct power observation (replay files in power mode).
#[derive(Debug, Clone, PartialEq)]
pub struct PowerRow {
    pub timestamp_ms: u64,
    /// Watts per domain, aligned with [`EnergySource::domains`].
    pub watts: Vec<f64>,
}

/// What a single acquisition yields.
#[derive(Debug, Clone, PartialEq)]
pub enum Acquisition {
    /// Cumulative counter snapshot, one reading per domain, all stamped
    /// with the same acquisition timestamp.
    Counters(Vec<EnergyReading>),
    /// Direct per-domain power, bypassing delta arithmetic.
    Power(PowerRow),
}

/// Selects a counter provider.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SourceKind {
    Powercap,
    Msr,
    Replay(PathBuf),
}

impl SourceKind {
    /// Parses the CLI form `powercap`, `msr`, or `replay:<path>`.
    pub fn parse(s: &str) -> Result<SourceKind, SourceError> {
        match s {
            "powercap" => Ok(SourceKind::Powercap),
            "msr" => Ok(SourceKind::Msr),
            _ => match s.strip_prefix("replay:") {
                Some(path) if !path.is_empty() => Ok(SourceKind::Replay(PathBuf::from(path))),
                _ => Err(SourceError::UnknownKind(s.to_string())),
            },
        }
    }
}

impl fmt::Display for SourceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SourceKind::Powercap => f.write_str("powercap"),
            SourceKind::Msr => f.write_str("msr"),
            SourceKind::Replay(p) => write!(f, "replay:{}", p.display()),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SourceError {
    #[error("source unavailable: {0}")]
    SourceUnavailable(String),
    #[error("permission denied reading {path}")]
    PermissionDenied { path: PathBuf },
    #[error("malformed replay file {path}, line {line}: {reason}")]
    MalformedReplayFile {
        path: PathBuf,
        line: usize,
        reason: String,
    },
    #[error("read failure: {0}")]
    ReadFailure(#[from] std::io::Error),
    #[error("replay file exhausted")]
    ReplayExhausted,
    #[error("domain mismatch: expected {expected}, got {actual}")]
    DomainMismatch { expected: String, actual: String },
    #[error("non-monotonic timestamps: {prev_ms} ms then {curr_ms} ms")]
    NonMonotonicTime { prev_ms: u64, curr_ms: u64 },
    #[error("counter value {energy_uj} outside wrap range {range_uj}")]
    CounterOutOfRange { energy_uj: u64, range_uj: u64 },
    #[error("unknown source kind {0:?} (expected powercap, msr, or replay:<path>)")]
    UnknownKind(String),
}

/// A counter provider. One instance is owned by exactly one sampling loop;
/// distinct instances may run in parallel.
pub trait EnergySource: Send {
    fn domains(&self) -> &[DomainDescriptor];

    /// Reads the next observation. Counter sources snapshot every domain at
    /// one instant; replay sources step through the file one row per call and
    /// return [`SourceError::ReplayExhausted`] past the last row.
    fn acquire(&mut self) -> Result<Acquisition, SourceError>;

    /// Convenience for cumulative sources: the counter snapshot itself.
    fn read_counters(&mut self) -> Result<Vec<EnergyReading>, SourceError> {
        match self.acquire()? {
            Acquisition::Counters(r) => Ok(r),
            Acquisition::Power(row) => Err(SourceError::ReadFailure(std::io::Error::other(
                format!("power-mode source has no counters (row at {} ms)", row.timestamp_ms),
            ))),
        }
    }
}

/// Opens a source of the given kind.
pub fn open_source(kind: &SourceKind) -> Result<Box<dyn EnergySource>, SourceError> {
    match kind {
        SourceKind::Powercap => Ok(Box::new(PowercapSource::open()?)),
        SourceKind::Msr => Ok(Box::new(MsrSource::open()?)),
        SourceKind::Replay(path) => Ok(Box::new(ReplaySource::open(path)?)),
    }
}

/// Lists the domains a source of the given kind would expose.
pub fn enumerate_domains(kind: &SourceKind) -> Result<Vec<DomainDescriptor>, SourceError> {
    Ok(open_source(kind)?.domains().to_vec())
}

/// Wraparound-corrected difference between two cumulative readings of the
/// same domain: `(curr - prev) mod range`, always in `[0, range)`.
pub fn energy_delta(
    prev: &EnergyReading,
    curr: &EnergyReading,
    range_uj: u64,
) -> Result<u64, SourceError> {
    if prev.domain_id != curr.domain_id {
        return Err(SourceError::DomainMismatch {
            expected: prev.domain_id.clone(),
            actual: curr.domain_id.clone(),
        });
    }
    if curr.timestamp_ms < prev.timestamp_ms {
        return Err(SourceError::NonMonotonicTime {
            prev_ms: prev.timestamp_ms,
            curr_ms: curr.timestamp_ms,
        });
    }
    for r in [prev, curr] {
        if r.energy_uj >= range_uj {
            return Err(SourceError::CounterOutOfRange {
                energy_uj: r.energy_uj,
                range_uj,
            });
        }
    }
    if curr.energy_uj >= prev.energy_uj {
        Ok(curr.energy_uj - prev.energy_uj)
    } else {
        // Counter wrapped; assume at most one wrap between readings.
        Ok(range_uj - prev.energy_uj + curr.energy_uj)
    }
}
