//! MSR RAPL source.
//!
//! Reads the package energy status register through `/dev/cpu/<n>/msr`,
//! which exposes each register as 8 little-endian bytes at the byte offset
//! equal to the register address. The energy counter is the low 32 bits of
//! `0x611`; its unit is `0.5^ESU` joules with ESU in bits 12:8 of the
//! power-unit register `0x606`, so the counter wraps every `2^32 * unit`
//! joules.

use std::fs::File;
use std::os::unix::fs::FileExt;
use std::path::Path;
use std::time::Instant;

use super::{Acquisition, ComponentClass, DomainDescriptor, EnergyReading, EnergySource, SourceError};

const MSR_RAPL_POWER_UNIT: u64 = 0x606;
const MSR_PKG_ENERGY_STATUS: u64 = 0x611;
const MSR_DEVICE: &str = "/dev/cpu/0/msr";

#[derive(Debug)]
pub struct MsrSource {
    device: File,
    domains: Vec<DomainDescriptor>,
    /// Microjoules per raw counter unit.
    unit_uj: f64,
    opened: Instant,
}

impl MsrSource {
    pub fn open() -> Result<MsrSource, SourceError> {
        Self::open_at(Path::new(MSR_DEVICE))
    }

    /// Opens an explicit device node (other CPUs, tests).
    pub fn open_at(path: &Path) -> Result<MsrSource, SourceError> {
        let device = File::open(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => SourceError::SourceUnavailable(format!(
                "MSR device {} not present (is the msr module loaded?)",
                path.display()
            )),
            std::io::ErrorKind::PermissionDenied => SourceError::PermissionDenied {
                path: path.to_path_buf(),
            },
            _ => SourceError::ReadFailure(e),
        })?;

        let power_unit = read_msr(&device, MSR_RAPL_POWER_UNIT)?;
        let esu = (power_unit >> 8) & 0x1f;
        let unit_j = 0.5f64.powi(esu as i32);
        let unit_uj = unit_j * 1e6;
        let range_uj = ((1u64 << 32) as f64 * unit_uj) as u64;

        Ok(MsrSource {
            device,
            domains: vec![DomainDescriptor {
                domain_id: "msr:pkg0".to_string(),
                name: "package-0".to_string(),
                max_energy_range_uj: range_uj,
                component_class: ComponentClass::Compute,
            }],
            unit_uj,
            opened: Instant::now(),
        })
    }
}

fn read_msr(device: &File, register: u64) -> Result<u64, SourceError> {
    let mut buf = [0u8; 8];
    device
        .read_exact_at(&mut buf, register)
        .map_err(SourceError::ReadFailure)?;
    Ok(u64::from_le_bytes(buf))
}

impl EnergySource for MsrSource {
    fn domains(&self) -> &[DomainDescriptor] {
        &self.domains
    }

    fn acquire(&mut self) -> Result<Acquisition, SourceError> {
        let raw = read_msr(&self.device, MSR_PKG_ENERGY_STATUS)? & 0xffff_ffff;
        let energy_uj = (raw as f64 * self.unit_uj) as u64;
        Ok(Acquisition::Counters(vec![EnergyReading {
            domain_id: self.domains[0].domain_id.clone(),
            timestamp_ms: self.opened.elapsed().as_millis() as u64,
            energy_uj,
        }]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::{Seek, SeekFrom, Write};
    use std::path::PathBuf;

    /// A sparse regular file stands in for the device node; read_exact_at
    /// behaves the same on both.
    fn fake_msr_device(dir: &Path, esu: u64, pkg_raw: u64) -> PathBuf {
        let path = dir.join("msr");
        let mut f = File::create(&path).unwrap();
        f.seek(SeekFrom::Start(MSR_RAPL_POWER_UNIT)).unwrap();
        f.write_all(&(esu << 8).to_le_bytes()).unwrap();
        f.seek(SeekFrom::Start(MSR_PKG_ENERGY_STATUS)).unwrap();
        // High 32 bits are reserved; set them to junk to check masking.
        f.write_all(&(pkg_raw | 0xdead_beef_0000_0000).to_le_bytes())
            .unwrap();
        path
    }

    #[test]
    fn decodes_unit_and_range() {
        let tmp = tempfile::tempdir().unwrap();
        let path = fake_msr_device(tmp.path(), 14, 0);
        let src = MsrSource::open_at(&path).unwrap();
        let d = &src.domains()[0];
        // ESU 14: unit = 2^-14 J ≈ 61.035 µJ, range = 2^32 * unit.
        assert_eq!(d.max_energy_range_uj, 262_144_000_000);
        assert_eq!(d.component_class, ComponentClass::Compute);
    }

    #[test]
    fn reads_masked_counter_in_microjoules() {
        let tmp = tempfile::tempdir().unwrap();
        let path = fake_msr_device(tmp.path(), 14, 1 << 14);
        let mut src = MsrSource::open_at(&path).unwrap();
        let readings = src.read_counters().unwrap();
        assert_eq!(readings.len(), 1);
        // 2^14 raw units at 2^-14 J each = exactly 1 J.
        assert_eq!(readings[0].energy_uj, 1_000_000);
    }

    #[test]
    fn missing_device_is_unavailable() {
        let err = MsrSource::open_at(Path::new("/nonexistent/msr")).unwrap_err();
        assert!(matches!(err, SourceError::SourceUnavailable(_)));
    }
}
