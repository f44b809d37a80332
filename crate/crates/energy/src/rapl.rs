//! Linux powercap (RAPL) backend.
//!
//! Reads the sysfs tree bit-exactly:
//!
//! * `/sys/class/powercap/intel-rapl:<n>` — one zone per package; the zone
//!   is used when its `name` starts with `package` (other top-level zones
//!   such as `psys` are ignored),
//! * `/sys/class/powercap/intel-rapl:<n>:<m>` — subzones whose `name`
//!   contains `dram` feed the Dram domain,
//! * `energy_uj` — ASCII decimal cumulative microjoules, newline-terminated,
//! * `max_energy_range_uj` — ASCII decimal wraparound modulus.
//!
//! With one counter per domain the raw value passes through and the trace
//! layer handles wraparound. With several (multi-socket), each counter is
//! unwrapped here and the sum reported as a non-wrapping virtual counter.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::backend::{EnergyBackend, PollReading};
use crate::error::MeterError;
use crate::trace::PowerDomain;

pub const DEFAULT_POWERCAP_ROOT: &str = "/sys/class/powercap";

#[derive(Debug)]
struct CounterFile {
    energy_path: PathBuf,
    max_uj: u64,
    prev: Option<u64>,
    offset_uj: u64,
}

impl CounterFile {
    fn open(zone: &Path) -> Result<Self, MeterError> {
        let energy_path = zone.join("energy_uj");
        let max_uj = read_u64(&zone.join("max_energy_range_uj"))?;
        // Probe readability now so `open` fails loudly instead of the first
        // poll (energy_uj is often root-readable only).
        read_u64(&energy_path)?;
        Ok(Self { energy_path, max_uj, prev: None, offset_uj: 0 })
    }

    fn read_raw(&self) -> Result<u64, MeterError> {
        read_u64(&self.energy_path)
    }

    /// Read with local wrap correction (used when counters are aggregated).
    fn read_unwrapped(&mut self) -> Result<u64, MeterError> {
        let raw = self.read_raw()?;
        if let Some(prev) = self.prev {
            if raw < prev {
                self.offset_uj += self.max_uj;
            }
        }
        self.prev = Some(raw);
        Ok(raw + self.offset_uj)
    }
}

fn read_u64(path: &Path) -> Result<u64, MeterError> {
    let text = fs::read_to_string(path).map_err(|e| {
        MeterError::Unavailable(format!("cannot read {}: {e}", path.display()))
    })?;
    text.trim().parse::<u64>().map_err(|e| MeterError::Parse {
        path: path.display().to_string(),
        detail: e.to_string(),
    })
}

fn zone_name(zone: &Path) -> Option<String> {
    fs::read_to_string(zone.join("name")).ok().map(|s| s.trim().to_string())
}

/// Top-level `intel-rapl:<n>` zones under `root`, sorted by index.
fn package_zones(root: &Path) -> Result<Vec<PathBuf>, MeterError> {
    let entries = fs::read_dir(root).map_err(|e| {
        MeterError::Unavailable(format!("no powercap tree at {}: {e}", root.display()))
    })?;
    let mut zones: Vec<(u32, PathBuf)> = Vec::new();
    for entry in entries.flatten() {
        let name = entry.file_name();
        let Some(name) = name.to_str() else { continue };
        let Some(index) = name.strip_prefix("intel-rapl:") else { continue };
        if let Ok(n) = index.parse::<u32>() {
            zones.push((n, entry.path()));
        }
    }
    zones.sort_by_key(|(n, _)| *n);
    Ok(zones.into_iter().map(|(_, p)| p).collect())
}

/// Subzones `intel-rapl:<n>:<m>` of one package zone, sorted by index.
fn subzones(zone: &Path) -> Vec<PathBuf> {
    let Some(prefix) = zone.file_name().and_then(|n| n.to_str()).map(str::to_string) else {
        return Vec::new();
    };
    let Ok(entries) = fs::read_dir(zone) else { return Vec::new() };
    let mut subs: Vec<(u32, PathBuf)> = Vec::new();
    for entry in entries.flatten() {
        let name = entry.file_name();
        let Some(name) = name.to_str() else { continue };
        let Some(index) = name.strip_prefix(&format!("{prefix}:")) else { continue };
        if let Ok(m) = index.parse::<u32>() {
            subs.push((m, entry.path()));
        }
    }
    subs.sort_by_key(|(m, _)| *m);
    subs.into_iter().map(|(_, p)| p).collect()
}

/// RAPL backend over a powercap tree.
#[derive(Debug)]
pub struct RaplBackend {
    packages: Vec<CounterFile>,
    drams: Vec<CounterFile>,
}

impl RaplBackend {
    /// Open against the system tree.
    pub fn open() -> Result<Self, MeterError> {
        Self::open_at(Path::new(DEFAULT_POWERCAP_ROOT))
    }

    /// Open against an arbitrary tree root (tests use a fake tree).
    pub fn open_at(root: &Path) -> Result<Self, MeterError> {
        let mut packages = Vec::new();
        let mut drams = Vec::new();
        for zone in package_zones(root)? {
            let Some(name) = zone_name(&zone) else { continue };
            if !name.starts_with("package") {
                continue;
            }
            packages.push(CounterFile::open(&zone)?);
            for sub in subzones(&zone) {
                if zone_name(&sub).is_some_and(|n| n.contains("dram")) {
                    drams.push(CounterFile::open(&sub)?);
                }
            }
        }
        if packages.is_empty() {
            return Err(MeterError::Unavailable(format!(
                "no readable package-level rapl zone under {}",
                root.display()
            )));
        }
        Ok(Self { packages, drams })
    }

    fn read_domain(files: &mut [CounterFile]) -> Result<u64, MeterError> {
        if files.len() == 1 {
            files[0].read_raw()
        } else {
            let mut total = 0u64;
            for f in files {
                total += f.read_unwrapped()?;
            }
            Ok(total)
        }
    }
}

impl EnergyBackend for RaplBackend {
    fn name(&self) -> &'static str {
        "rapl"
    }

    fn domains(&self) -> Vec<PowerDomain> {
        if self.drams.is_empty() {
            vec![PowerDomain::Package]
        } else {
            vec![PowerDomain::Package, PowerDomain::Dram]
        }
    }

    fn counter_max_uj(&self, domain: PowerDomain) -> u64 {
        let files = match domain {
            PowerDomain::Package => &self.packages,
            PowerDomain::Dram => &self.drams,
        };
        match files.len() {
            1 => files[0].max_uj,
            // Aggregated counters are pre-unwrapped and never wrap.
            _ => u64::MAX,
        }
    }

    fn poll(&mut self) -> Result<PollReading, MeterError> {
        let t = Instant::now();
        let mut values_uj = vec![(PowerDomain::Package, Self::read_domain(&mut self.packages)?)];
        if !self.drams.is_empty() {
            values_uj.push((PowerDomain::Dram, Self::read_domain(&mut self.drams)?));
        }
        Ok(PollReading { t, values_uj })
    }
}

/// What `probe` reports about RAPL on this machine.
#[derive(Debug, Clone)]
pub struct RaplProbe {
    pub package_zones: usize,
    pub dram_zones: usize,
    pub readable: bool,
    pub detail: String,
}

impl RaplProbe {
    pub fn available(&self) -> bool {
        self.readable && self.package_zones > 0
    }
}

/// Non-failing capability probe of the system powercap tree.
pub fn probe_rapl() -> RaplProbe {
    probe_rapl_at(Path::new(DEFAULT_POWERCAP_ROOT))
}

pub fn probe_rapl_at(root: &Path) -> RaplProbe {
    match RaplBackend::open_at(root) {
        Ok(backend) => RaplProbe {
            package_zones: backend.packages.len(),
            dram_zones: backend.drams.len(),
            readable: true,
            detail: format!(
                "{} package counter(s), {} dram counter(s)",
                backend.packages.len(),
                backend.drams.len()
            ),
        },
        Err(e) => RaplProbe { package_zones: 0, dram_zones: 0, readable: false, detail: e.to_string() },
    }
}
