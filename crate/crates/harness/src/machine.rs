//! Machine metadata echoed into every record.

use std::fs;

use serde::{Deserialize, Serialize};

use crate::affinity;
use crate::numa;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MachineMeta {
    pub cpu_model: String,
    pub logical_cpus: usize,
    pub numa_nodes: Vec<u32>,
    /// Which energy backend actually produced the measurements.
    pub energy_backend: String,
    /// False when only the package domain was measurable.
    pub dram_domain: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hostname: Option<String>,
}

impl MachineMeta {
    pub fn collect(energy_backend: &str, dram_domain: bool) -> Self {
        Self {
            cpu_model: cpu_model(),
            logical_cpus: affinity::logical_cpus(),
            numa_nodes: numa::numa_nodes(),
            energy_backend: energy_backend.to_string(),
            dram_domain,
            hostname: fs::read_to_string("/proc/sys/kernel/hostname")
                .ok()
                .map(|s| s.trim().to_string()),
        }
    }
}

fn cpu_model() -> String {
    fs::read_to_string("/proc/cpuinfo")
        .ok()
        .and_then(|text| {
            text.lines()
                .find(|l| l.starts_with("model name"))
                .and_then(|l| l.split(':').nth(1))
                .map(|m| m.trim().to_string())
        })
        .unwrap_or_else(|| "unknown".to_string())
}
