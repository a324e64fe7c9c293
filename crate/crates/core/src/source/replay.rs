//! File-backed replay source.
//!
//! Line-oriented text format:
//!
//! ```text
//! #powerprof-energy v1 domains=<name[:class],...> range_uj=<R> [mode=cumulative|power]
//! t_ms,<name>=<value>,...
//! ```
//!
//! In cumulative mode (the default) values are integer microjoules below the
//! wrap range and deltas go through the wraparound correction. In power mode
//! values are watts and feed samples directly; `range_uj` is not required.

use std::fs;
use std::path::Path;

use super::{
    Acquisition, ComponentClass, DomainDescriptor, EnergyReading, EnergySource, PowerRow,
    SourceError,
};

pub const REPLAY_MAGIC: &str = "#powerprof-energy v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReplayMode {
    Cumulative,
    Power,
}

#[derive(Debug, Clone)]
enum Row {
    Energy { t_ms: u64, uj: Vec<u64> },
    Power { t_ms: u64, watts: Vec<f64> },
}

/// Deterministic replay of a recorded energy or power series.
#[derive(Debug)]
pub struct ReplaySource {
    domains: Vec<DomainDescriptor>,
    mode: ReplayMode,
    rows: Vec<Row>,
    cursor: usize,
}

impl ReplaySource {
    pub fn open(path: &Path) -> Result<ReplaySource, SourceError> {
        let text = fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => {
                SourceError::SourceUnavailable(format!("replay file {} not found", path.display()))
            }
            std::io::ErrorKind::PermissionDenied => SourceError::PermissionDenied {
                path: path.to_path_buf(),
            },
            _ => SourceError::ReadFailure(e),
        })?;
        Self::parse(path, &text)
    }

    pub fn mode(&self) -> ReplayMode {
        self.mode
    }

    fn parse(path: &Path, text: &str) -> Result<ReplaySource, SourceError> {
        let malformed = |line: usize, reason: String| SourceError::MalformedReplayFile {
            path: path.to_path_buf(),
            line,
            reason,
        };

        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| malformed(1, "empty file".into()))?;
        let (domains, mode, range_uj) = parse_header(path, header)?;

        let mut rows = Vec::new();
        let mut last_t: Option<u64> = None;
        for (idx, line) in lines {
            let lineno = idx + 1;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields = line.split(',');
            let t_ms: u64 = fields
                .next()
                .unwrap()
                .trim()
                .parse()
                .map_err(|e| malformed(lineno, format!("bad timestamp: {e}")))?;
            if let Some(prev) = last_t {
                if t_ms <= prev {
                    return Err(malformed(
                        lineno,
                        format!("timestamp {t_ms} not after previous {prev}"),
                    ));
                }
            }
            last_t = Some(t_ms);

            let mut values: Vec<Option<f64>> = vec![None; domains.len()];
            for field in fields {
                let (name, value) = field
                    .split_once('=')
                    .ok_or_else(|| malformed(lineno, format!("expected <name>=<value>, got {field:?}")))?;
                let name = name.trim();
                let pos = domains
                    .iter()
                    .position(|d| d.name == name)
                    .ok_or_else(|| malformed(lineno, format!("unknown domain {name:?}")))?;
                if values[pos].is_some() {
                    return Err(malformed(lineno, format!("duplicate domain {name:?}")));
                }
                let v: f64 = value
                    .trim()
                    .parse()
                    .map_err(|e| malformed(lineno, format!("bad value for {name}: {e}")))?;
                values[pos] = Some(v);
            }
            let values: Vec<f64> = values
                .into_iter()
                .enumerate()
                .map(|(i, v)| v.ok_or_else(|| malformed(lineno, format!("missing domain {:?}", domains[i].name))))
                .collect::<Result<_, _>>()?;

            match mode {
                ReplayMode::Cumulative => {
                    let range = range_uj.expect("cumulative mode has a range");
                    let mut uj = Vec::with_capacity(values.len());
                    for (i, v) in values.iter().enumerate() {
                        if !v.is_finite() || *v < 0.0 || v.fract() != 0.0 {
                            return Err(malformed(
                                lineno,
                                format!("energy for {:?} must be a non-negative integer", domains[i].name),
                            ));
                        }
                        let v = *v as u64;
                        if v >= range {
                            return Err(malformed(
                                lineno,
                                format!("energy {v} for {:?} not below range_uj {range}", domains[i].name),
                            ));
                        }
                        uj.push(v);
                    }
                    rows.push(Row::Energy { t_ms, uj });
                }
                ReplayMode::Power => {
                    for (i, v) in values.iter().enumerate() {
                        if !v.is_finite() || *v < 0.0 {
                            return Err(malformed(
                                lineno,
                                format!("power for {:?} must be finite and non-negative", domains[i].name),
                            ));
                        }
                    }
                    rows.push(Row::Power { t_ms, watts: values });
                }
            }
        }

        Ok(ReplaySource {
            domains,
            mode,
            rows,
            cursor: 0,
        })
    }
}

fn parse_header(
    path: &Path,
    header: &str,
) -> Result<(Vec<DomainDescriptor>, ReplayMode, Option<u64>), SourceError> {
    let malformed = |reason: String| SourceError::MalformedReplayFile {
        path: path.to_path_buf(),
        line: 1,
        reason,
    };

    let rest = header
        .strip_prefix(REPLAY_MAGIC)
        .ok_or_else(|| malformed(format!("header must start with {REPLAY_MAGIC:?}")))?;

    let mut domains_field: Option<String> = None;
    let mut range_uj: Option<u64> = None;
    let mut mode = ReplayMode::Cumulative;
    for token in rest.split_whitespace() {
        let (key, value) = token
            .split_once('=')
            .ok_or_else(|| malformed(format!("expected key=value, got {token:?}")))?;
        match key {
            "domains" => domains_field = Some(value.to_string()),
            "range_uj" => {
                let r: u64 = value
                    .parse()
                    .map_err(|e| malformed(format!("bad range_uj: {e}")))?;
                if r == 0 {
                    return Err(malformed("range_uj must be positive".into()));
                }
                range_uj = Some(r);
            }
            "mode" => {
                mode = match value {
                    "cumulative" => ReplayMode::Cumulative,
                    "power" => ReplayMode::Power,
                    _ => return Err(malformed(format!("unknown mode {value:?}"))),
                };
            }
            _ => return Err(malformed(format!("unknown header key {key:?}"))),
        }
    }

    let domains_field = domains_field.ok_or_else(|| malformed("missing domains=".into()))?;
    if mode == ReplayMode::Cumulative && range_uj.is_none() {
        return Err(malformed("cumulative mode requires range_uj=".into()));
    }
    // Power rows never wrap; give those domains the widest possible range.
    let range = range_uj.unwrap_or(u64::MAX);

    let mut domains = Vec::new();
    for part in domains_field.split(',') {
        let (name, class) = match part.split_once(':') {
            Some((n, c)) => {
                let class = ComponentClass::parse(c)
                    .ok_or_else(|| malformed(format!("unknown component class {c:?}")))?;
                (n, class)
            }
            None => (part, ComponentClass::Compute),
        };
        if name.is_empty() {
            return Err(malformed("empty domain name".into()));
        }
        if domains.iter().any(|d: &DomainDescriptor| d.name == name) {
            return Err(malformed(format!("duplicate domain {name:?}")));
        }
        domains.push(DomainDescriptor {
            domain_id: name.to_string(),
            name: name.to_string(),
            max_energy_range_uj: range,
            component_class: class,
        });
    }
    if domains.is_empty() {
        return Err(malformed("domains= lists no domains".into()));
    }
    Ok((domains, mode, range_uj))
}

impl EnergySource for ReplaySource {
    fn domains(&self) -> &[DomainDescriptor] {
        &self.domains
    }

    fn acquire(&mut self) -> Result<Acquisition, SourceError> {
        let row = self.rows.get(self.cursor).ok_or(SourceError::ReplayExhausted)?;
        self.cursor += 1;
        Ok(match row {
            Row::Energy { t_ms, uj } => Acquisition::Counters(
                self.domains
                    .iter()
                    .zip(uj)
                    .map(|(d, &energy_uj)| EnergyReading {
                        domain_id: d.domain_id.clone(),
                        timestamp_ms: *t_ms,
                        energy_uj,
                    })
                    .collect(),
            ),
            Row::Power { t_ms, watts } => Acquisition::Power(PowerRow {
                timestamp_ms: *t_ms,
                watts: watts.clone(),
            }),
        })
    }
}
