//! Aligned text table for stdout.

use lb_harness::RunRecord;

use super::{si_unit, sorted_rows};

pub fn render_table(records: &[RunRecord]) -> String {
    let rows = sorted_rows(records);
    let max_es = rows
        .iter()
        .map(|(r, k)| r.kernels[*k].e_s_per_site_j)
        .fold(0.0f64, f64::max);
    let (scale, unit) = si_unit(max_es);

    let mut out = String::new();
    out.push_str(&format!(
        "{:<12} {:>7} {:>10} {:<10} {:>12} {:>9} {:>9} {:>12} {:>10}\n",
        "layout",
        "threads",
        "target",
        "kernel",
        "ns/site",
        "P_pkg[W]",
        "P_dram[W]",
        &format!("E_s[{unit}/site]"),
        "BW[GB/s]"
    ));
    for (record, kernel) in &rows {
        let k = &record.kernels[*kernel];
        out.push_str(&format!(
            "{:<12} {:>7} {:>10} {:<10} {:>12.3} {:>9.2} {:>9} {:>12.4} {:>10}\n",
            record.config.layout.to_string(),
            record.config.threads,
            record.config.memory_target.to_string(),
            kernel,
            k.ns_per_site,
            k.p_avg_w_package,
            k.p_avg_w_dram.map_or("-".to_string(), |v| format!("{v:.2}")),
            k.e_s_per_site_j * scale,
            k.bandwidth_gbs.map_or("-".to_string(), |v| format!("{v:.2}")),
        ));
    }
    if rows.is_empty() {
        out.push_str("(no records)\n");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_records_render_a_placeholder() {
        let s = render_table(&[]);
        assert!(s.contains("(no records)"));
    }
}
