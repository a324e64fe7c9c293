//! Powercap sysfs source.
//!
//! Reads the top-level RAPL zones `intel-rapl:<n>` only; subzones (core,
//! uncore) are children of the package counter and reading both would count
//! the same energy twice.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use super::{Acquisition, ComponentClass, DomainDescriptor, EnergyReading, EnergySource, SourceError};

const POWERCAP_ROOT: &str = "/sys/class/powercap";

#[derive(Debug)]
struct Zone {
    energy_path: PathBuf,
}

#[derive(Debug)]
pub struct PowercapSource {
    domains: Vec<DomainDescriptor>,
    zones: Vec<Zone>,
    opened: Instant,
}

impl PowercapSource {
    pub fn open() -> Result<PowercapSource, SourceError> {
        Self::open_at(Path::new(POWERCAP_ROOT))
    }

    /// Opens against an alternate sysfs root (container mounts, tests).
    pub fn open_at(root: &Path) -> Result<PowercapSource, SourceError> {
        let entries = fs::read_dir(root).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => SourceError::SourceUnavailable(format!(
                "powercap tree {} not present",
                root.display()
            )),
            std::io::ErrorKind::PermissionDenied => SourceError::PermissionDenied {
                path: root.to_path_buf(),
            },
            _ => SourceError::ReadFailure(e),
        })?;

        let mut zone_dirs: Vec<(u32, PathBuf)> = Vec::new();
        for entry in entries {
            let entry = entry.map_err(SourceError::ReadFailure)?;
            let file_name = entry.file_name();
            let name = file_name.to_string_lossy();
            // Top-level zones only: "intel-rapl:0" but not "intel-rapl:0:0".
            if let Some(idx) = name.strip_prefix("intel-rapl:") {
                if let Ok(n) = idx.parse::<u32>() {
                    zone_dirs.push((n, entry.path()));
                }
            }
        }
        zone_dirs.sort_by_key(|(n, _)| *n);
        if zone_dirs.is_empty() {
            return Err(SourceError::SourceUnavailable(format!(
                "no intel-rapl zones under {}",
                root.display()
            )));
        }

        let mut domains = Vec::new();
        let mut zones = Vec::new();
        for (_, dir) in zone_dirs {
            let name = read_trimmed(&dir.join("name"))?;
            let range: u64 = read_trimmed(&dir.join("max_energy_range_uj"))?
                .parse()
                .map_err(|e| {
                    SourceError::ReadFailure(std::io::Error::other(format!(
                        "bad max_energy_range_uj in {}: {e}",
                        dir.display()
                    )))
                })?;
            let id = dir
                .file_name()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| name.clone());
            domains.push(DomainDescriptor {
                domain_id: id,
                name,
                max_energy_range_uj: range,
                component_class: ComponentClass::Compute,
            });
            zones.push(Zone {
                energy_path: dir.join("energy_uj"),
            });
        }

        Ok(PowercapSource {
            domains,
            zones,
            opened: Instant::now(),
        })
    }
}

fn read_trimmed(path: &Path) -> Result<String, SourceError> {
    match fs::read_to_string(path) {
        Ok(s) => Ok(s.trim().to_string()),
        Err(e) if e.kind() == std::io::ErrorKind::PermissionDenied => {
            Err(SourceError::PermissionDenied {
                path: path.to_path_buf(),
            })
        }
        Err(e) => Err(SourceError::ReadFailure(e)),
    }
}

impl EnergySource for PowercapSource {
    fn domains(&self) -> &[DomainDescriptor] {
        &self.domains
    }

    fn acquire(&mut self) -> Result<Acquisition, SourceError> {
        let timestamp_ms = self.opened.elapsed().as_millis() as u64;
        let mut readings = Vec::with_capacity(self.zones.len());
        for (zone, domain) in self.zones.iter().zip(&self.domains) {
            let energy_uj: u64 = read_trimmed(&zone.energy_path)?.parse().map_err(|e| {
                SourceError::ReadFailure(std::io::Error::other(format!(
                    "bad energy_uj in {}: {e}",
                    zone.energy_path.display()
                )))
            })?;
            readings.push(EnergyReading {
                domain_id: domain.domain_id.clone(),
                timestamp_ms,
                energy_uj,
            });
        }
        Ok(Acquisition::Counters(readings))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fake_zone(root: &Path, idx: u32, name: &str, energy: u64, range: u64) {
        let dir = root.join(format!("intel-rapl:{idx}"));
        fs::create_dir_all(&dir).unwrap();
        fs::write(dir.join("name"), format!("{name}\n")).unwrap();
        fs::write(dir.join("energy_uj"), format!("{energy}\n")).unwrap();
        fs::write(dir.join("max_energy_range_uj"), format!("{range}\n")).unwrap();
    }

    #[test]
    fn absent_tree_is_unavailable() {
        let err = PowercapSource::open_at(Path::new("/nonexistent/powercap")).unwrap_err();
        assert!(matches!(err, SourceError::SourceUnavailable(_)));
    }

    #[test]
    fn enumerates_top_level_zones_only() {
        let tmp = tempfile::tempdir().unwrap();
        fake_zone(tmp.path(), 0, "package-0", 12345, 262_143_328_850);
        fake_zone(tmp.path(), 1, "package-1", 777, 262_143_328_850);
        // Subzone dir inside package-0 must be ignored.
        let sub = tmp.path().join("intel-rapl:0").join("intel-rapl:0:0");
        fs::create_dir_all(&sub).unwrap();
        fs::write(sub.join("name"), "core\n").unwrap();
        fs::write(sub.join("energy_uj"), "1\n").unwrap();
        fs::write(sub.join("max_energy_range_uj"), "100\n").unwrap();

        let src = PowercapSource::open_at(tmp.path()).unwrap();
        let names: Vec<_> = src.domains().iter().map(|d| d.name.as_str()).collect();
        assert_eq!(names, vec!["package-0", "package-1"]);
        assert!(src
            .domains()
            .iter()
            .all(|d| d.component_class == ComponentClass::Compute));
        assert_eq!(src.domains()[0].max_energy_range_uj, 262_143_328_850);
    }

    #[test]
    fn reads_counters_with_shared_timestamp() {
        let tmp = tempfile::tempdir().unwrap();
        fake_zone(tmp.path(), 0, "package-0", 1000, 1_000_000);
        fake_zone(tmp.path(), 1, "dram", 400, 1_000_000);
        let mut src = PowercapSource::open_at(tmp.path()).unwrap();
        let readings = src.read_counters().unwrap();
        assert_eq!(readings.len(), 2);
        assert_eq!(readings[0].energy_uj, 1000);
        assert_eq!(readings[1].energy_uj, 400);
        assert_eq!(readings[0].timestamp_ms, readings[1].timestamp_ms);
    }

    #[test]
    fn empty_tree_is_unavailable() {
        let tmp = tempfile::tempdir().unwrap();
        let err = PowercapSource::open_at(tmp.path()).unwrap_err();
        assert!(matches!(err, SourceError::SourceUnavailable(_)));
    }
}
