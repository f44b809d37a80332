//! Run records: one experiment's configuration echo plus per-kernel metrics.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, MemoryTarget};
use crate::machine::MachineMeta;
use lb_core::LayoutKind;

/// Metrics of one kernel, taken from the median repetition (by wall time);
/// min and max wall times of all repetitions are retained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelMetrics {
    /// Wall time of the whole iteration batch, nanoseconds.
    pub wall_ns: u64,
    pub wall_ns_min: u64,
    pub wall_ns_max: u64,
    /// `wall_ns / (sites * iterations)`.
    pub ns_per_site: f64,
    pub p_avg_w_package: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_avg_w_dram: Option<f64>,
    /// Sum over available domains.
    pub p_avg_w_total: f64,
    /// `wall_s * p_avg_w_total`.
    pub e_s_joules: f64,
    /// `e_s_joules / (sites * iterations)`.
    pub e_s_per_site_j: f64,
    /// Propagate only: `2 * q * 8 * sites * iterations / wall_ns` (GB/s,
    /// GB = 1e9 bytes).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bandwidth_gbs: Option<f64>,
}

/// One finished experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config: ExperimentConfig,
    pub machine: MachineMeta,
    /// Keyed by kernel name: "propagate" and, when measured, "collide".
    pub kernels: BTreeMap<String, KernelMetrics>,
    /// Layout- and thread-invariant logical checksum of the final field.
    pub checksum: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    pub timestamp_unix_s: u64,
}

/// A sweep combination that could not run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkipRecord {
    pub skipped: bool,
    pub layout: LayoutKind,
    pub threads: usize,
    pub memory_target: MemoryTarget,
    pub reason: String,
}

/// One JSON line of a sweep output file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SweepRecord {
    Run(Box<RunRecord>),
    Skip(SkipRecord),
}

impl SweepRecord {
    pub fn as_run(&self) -> Option<&RunRecord> {
        match self {
            SweepRecord::Run(r) => Some(r),
            SweepRecord::Skip(_) => None,
        }
    }
}

/// Propagate's figure of merit: one read and one write of every population
/// value per iteration, in GB/s (GB = 1e9 bytes; bytes/ns = GB/s).
pub fn propagate_bandwidth(q: usize, sites: usize, iterations: usize, wall_ns: u64) -> f64 {
    let bytes = 2.0 * q as f64 * 8.0 * sites as f64 * iterations as f64;
    bytes / wall_ns as f64
}

/// Parse a JSON Lines record stream; blank lines are skipped, anything else
/// must parse, and failures carry the 1-based line number.
pub fn parse_jsonl(text: &str) -> Result<Vec<SweepRecord>, crate::error::HarnessError> {
    let mut records = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: SweepRecord = serde_json::from_str(line).map_err(|e| {
            crate::error::HarnessError::ConfigParse(format!("line {}: {e}", idx + 1))
        })?;
        records.push(record);
    }
    Ok(records)
}

/// Serialize one record as a JSON line.
pub fn to_jsonl_line(record: &SweepRecord) -> String {
    serde_json::to_string(record).expect("record serialization cannot fail")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bandwidth_hand_value() {
        // 2 * 37 * 8 * 1e6 * 100 bytes over one second.
        assert_eq!(propagate_bandwidth(37, 1_000_000, 100, 1_000_000_000), 59.2);
    }

    #[test]
    fn bandwidth_is_rate_invariant() {
        let one = propagate_bandwidth(37, 4096, 10, 77_000_000);
        let two = propagate_bandwidth(37, 4096, 20, 154_000_000);
        assert!((one - two).abs() < 1e-12);
    }

    #[test]
    fn bandwidth_scales_linearly_in_q() {
        let q9 = propagate_bandwidth(9, 4096, 10, 50_000_000);
        let q37 = propagate_bandwidth(37, 4096, 10, 50_000_000);
        assert!((q37 / q9 - 37.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn jsonl_parse_reports_the_bad_line() {
        let skip = SweepRecord::Skip(SkipRecord {
            skipped: true,
            layout: LayoutKind::Aos,
            threads: 1,
            memory_target: MemoryTarget::Default,
            reason: "test".into(),
        });
        let good = to_jsonl_line(&skip);
        let text = format!("{good}\n\nnot json\n");
        let err = parse_jsonl(&text).unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
        let ok = parse_jsonl(&format!("{good}\n{good}\n")).unwrap();
        assert_eq!(ok.len(), 2);
    }
}
