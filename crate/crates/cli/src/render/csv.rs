//! CSV export: fixed header, one row per (record, kernel), numbers in
//! scientific notation at full round-trip precision.

use lb_harness::RunRecord;

use super::sorted_rows;

pub const CSV_HEADER: &str =
    "layout,threads,memory_target,kernel,ns_per_site,p_avg_w_pkg,p_avg_w_dram,e_s_per_site_j,bandwidth_gbs";

fn sci(v: f64) -> String {
    format!("{v:e}")
}

fn opt_sci(v: Option<f64>) -> String {
    v.map(sci).unwrap_or_default()
}

pub fn render_csv(records: &[RunRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for (record, kernel) in sorted_rows(records) {
        let k = &record.kernels[kernel];
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            record.config.layout,
            record.config.threads,
            record.config.memory_target,
            kernel,
            sci(k.ns_per_site),
            sci(k.p_avg_w_package),
            opt_sci(k.p_avg_w_dram),
            sci(k.e_s_per_site_j),
            opt_sci(k.bandwidth_gbs),
        ));
    }
    out
}
