//! Report rendering: aligned text tables, CSV, stacked-bar SVG charts and
//! side-by-side comparisons. Everything here is a pure function of the
//! records — no re-measurement, only ratio and argmin arithmetic — and the
//! output is byte-deterministic for identical input.

pub mod comparison;
pub mod csv;
pub mod svg;
pub mod table;

use lb_harness::RunRecord;

/// Rows are ordered by (layout, threads, memory target, kernel); records
/// keep that order everywhere so CSV, table and chart agree.
pub(crate) fn sorted_rows(records: &[RunRecord]) -> Vec<(&RunRecord, &str)> {
    let mut rows: Vec<(&RunRecord, &str)> = Vec::new();
    for record in records {
        for kernel in record.kernels.keys() {
            rows.push((record, kernel.as_str()));
        }
    }
    rows.sort_by(|(ra, ka), (rb, kb)| {
        ra.config
            .layout
            .to_string()
            .cmp(&rb.config.layout.to_string())
            .then(ra.config.threads.cmp(&rb.config.threads))
            .then(ra.config.memory_target.to_string().cmp(&rb.config.memory_target.to_string()))
            .then(ka.cmp(kb))
    });
    rows
}

/// Scale a joules-per-site value to a display unit: (factor, suffix).
pub(crate) fn si_unit(max_value_j: f64) -> (f64, &'static str) {
    if max_value_j >= 1.0 {
        (1.0, "J")
    } else if max_value_j >= 1e-3 {
        (1e3, "mJ")
    } else if max_value_j >= 1e-6 {
        (1e6, "uJ")
    } else if max_value_j >= 1e-9 {
        (1e9, "nJ")
    } else {
        (1e12, "pJ")
    }
}
