//! Self-contained stacked-bar SVG charts: groups are layouts (split per
//! memory target when several are present), bars within a group are thread
//! counts, the package segment sits at the bottom and the dram segment on
//! top, and the y axis is joules per site with an SI prefix picked from the
//! data. No plotting library; identical input renders identical bytes.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use lb_harness::RunRecord;

use super::si_unit;

const BAR_W: f64 = 34.0;
const BAR_GAP: f64 = 6.0;
const GROUP_GAP: f64 = 36.0;
const PLOT_H: f64 = 320.0;
const MARGIN_L: f64 = 86.0;
const MARGIN_R: f64 = 160.0;
const MARGIN_T: f64 = 56.0;
const MARGIN_B: f64 = 86.0;
const COLOR_PKG: &str = "#4878a8";
const COLOR_DRAM: &str = "#e8a33d";

fn nice_ceiling(x: f64) -> f64 {
    if !x.is_finite() || x <= 0.0 {
        return 1.0;
    }
    let base = 10f64.powf(x.log10().floor());
    for m in [1.0, 2.0, 2.5, 5.0, 10.0] {
        if m * base >= x {
            return m * base;
        }
    }
    10.0 * base
}

struct Bar {
    threads: usize,
    pkg_j: f64,
    dram_j: Option<f64>,
}

struct Group {
    label: String,
    bars: Vec<Bar>,
}

/// Render the energy chart for one kernel ("propagate" or "collide").
pub fn render_energy_chart(records: &[RunRecord], kernel: &str) -> Result<String, String> {
    let rows: Vec<&RunRecord> =
        records.iter().filter(|r| r.kernels.contains_key(kernel)).collect();
    if rows.is_empty() {
        return Err(format!("no records carry kernel `{kernel}`"));
    }

    let targets: BTreeSet<String> =
        rows.iter().map(|r| r.config.memory_target.to_string()).collect();
    let split_targets = targets.len() > 1;
    let group_label = |r: &RunRecord| {
        if split_targets {
            format!("{} @ {}", r.config.layout, r.config.memory_target)
        } else {
            r.config.layout.to_string()
        }
    };

    let mut labels: Vec<String> = rows.iter().map(|r| group_label(r)).collect();
    labels.sort();
    labels.dedup();

    let mut dram_missing = 0usize;
    let groups: Vec<Group> = labels
        .into_iter()
        .map(|label| {
            let mut bars: Vec<Bar> = rows
                .iter()
                .filter(|r| group_label(r) == label)
                .map(|r| {
                    let k = &r.kernels[kernel];
                    let total = k.e_s_per_site_j;
                    let (pkg_j, dram_j) = match k.p_avg_w_dram {
                        Some(_) if k.p_avg_w_total > 0.0 => {
                            let pkg = total * (k.p_avg_w_package / k.p_avg_w_total);
                            (pkg, Some(total - pkg))
                        }
                        Some(_) => (total, Some(0.0)),
                        None => {
                            dram_missing += 1;
                            (total, None)
                        }
                    };
                    Bar { threads: r.config.threads, pkg_j, dram_j }
                })
                .collect();
            bars.sort_by_key(|b| b.threads);
            Group { label, bars }
        })
        .collect();

    let max_total = groups
        .iter()
        .flat_map(|g| g.bars.iter())
        .map(|b| b.pkg_j + b.dram_j.unwrap_or(0.0))
        .fold(0.0f64, f64::max);
    let (scale, unit) = si_unit(max_total);
    let y_max = nice_ceiling(max_total * scale);

    let group_width =
        |g: &Group| g.bars.len() as f64 * BAR_W + g.bars.len().saturating_sub(1) as f64 * BAR_GAP;
    let plot_w: f64 = groups.iter().map(group_width).sum::<f64>()
        + GROUP_GAP * (groups.len() as f64 - 1.0).max(0.0);
    let width = MARGIN_L + plot_w.max(200.0) + MARGIN_R;
    let height = MARGIN_T + PLOT_H + MARGIN_B;
    let baseline = MARGIN_T + PLOT_H;
    let y_of = |v_scaled: f64| baseline - (v_scaled / y_max) * PLOT_H;

    let mut svg = String::new();
    let _ = write!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}">"#
    );
    let _ = write!(svg, r#"<rect width="{width:.0}" height="{height:.0}" fill="white"/>"#);
    let _ = write!(
        svg,
        r#"<text x="{:.1}" y="28" font-family="sans-serif" font-size="17" font-weight="bold">Energy to solution per lattice site &#8212; {}</text>"#,
        MARGIN_L,
        xml_escape(kernel)
    );

    // Gridlines and y tick labels.
    for tick in 0..=5 {
        let value = y_max * tick as f64 / 5.0;
        let y = y_of(value);
        let _ = write!(
            svg,
            r##"<line x1="{MARGIN_L:.1}" y1="{y:.2}" x2="{:.1}" y2="{y:.2}" stroke="#dddddd" stroke-width="1"/>"##,
            MARGIN_L + plot_w.max(200.0)
        );
        let _ = write!(
            svg,
            r#"<text x="{:.1}" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="end">{value:.2}</text>"#,
            MARGIN_L - 8.0,
            y + 4.0
        );
    }
    // Axes.
    let _ = write!(
        svg,
        r#"<line x1="{MARGIN_L:.1}" y1="{MARGIN_T:.1}" x2="{MARGIN_L:.1}" y2="{baseline:.1}" stroke="black" stroke-width="1"/>"#
    );
    let _ = write!(
        svg,
        r#"<line x1="{MARGIN_L:.1}" y1="{baseline:.1}" x2="{:.1}" y2="{baseline:.1}" stroke="black" stroke-width="1"/>"#,
        MARGIN_L + plot_w.max(200.0)
    );
    let _ = write!(
        svg,
        r#"<text x="20" y="{:.1}" font-family="sans-serif" font-size="13" transform="rotate(-90 20 {:.1})" text-anchor="middle">{unit} / site</text>"#,
        MARGIN_T + PLOT_H / 2.0,
        MARGIN_T + PLOT_H / 2.0
    );

    // Bars.
    let mut x = MARGIN_L;
    for group in &groups {
        let group_x0 = x;
        for bar in &group.bars {
            let pkg = bar.pkg_j * scale;
            let dram = bar.dram_j.unwrap_or(0.0) * scale;
            let y_pkg = y_of(pkg);
            let _ = write!(
                svg,
                r#"<rect class="seg-pkg" x="{x:.2}" y="{y_pkg:.2}" width="{BAR_W:.1}" height="{:.2}" fill="{COLOR_PKG}"/>"#,
                baseline - y_pkg
            );
            if bar.dram_j.is_some() {
                let y_top = y_of(pkg + dram);
                let _ = write!(
                    svg,
                    r#"<rect class="seg-dram" x="{x:.2}" y="{y_top:.2}" width="{BAR_W:.1}" height="{:.2}" fill="{COLOR_DRAM}"/>"#,
                    y_pkg - y_top
                );
            }
            let _ = write!(
                svg,
                r#"<text x="{:.2}" y="{:.1}" font-family="sans-serif" font-size="11" text-anchor="middle">{}</text>"#,
                x + BAR_W / 2.0,
                baseline + 16.0,
                bar.threads
            );
            x += BAR_W + BAR_GAP;
        }
        x -= BAR_GAP;
        let _ = write!(
            svg,
            r#"<text class="group-label" x="{:.2}" y="{:.1}" font-family="sans-serif" font-size="12" text-anchor="middle">{}</text>"#,
            (group_x0 + x) / 2.0,
            baseline + 36.0,
            xml_escape(&group.label)
        );
        x += GROUP_GAP;
    }
    let _ = write!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="12" text-anchor="middle">threads per bar, grouped by layout</text>"#,
        MARGIN_L + plot_w.max(200.0) / 2.0,
        baseline + 58.0
    );

    // Legend.
    let lx = MARGIN_L + plot_w.max(200.0) + 16.0;
    let _ = write!(
        svg,
        r#"<rect x="{lx:.1}" y="{:.1}" width="14" height="14" fill="{COLOR_PKG}"/><text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="12">package (bottom)</text>"#,
        MARGIN_T,
        lx + 20.0,
        MARGIN_T + 11.0
    );
    let _ = write!(
        svg,
        r#"<rect x="{lx:.1}" y="{:.1}" width="14" height="14" fill="{COLOR_DRAM}"/><text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="12">dram (top)</text>"#,
        MARGIN_T + 22.0,
        lx + 20.0,
        MARGIN_T + 33.0
    );
    if dram_missing > 0 {
        let _ = write!(
            svg,
            r##"<text x="{lx:.1}" y="{:.1}" font-family="sans-serif" font-size="11" fill="#884444">dram unavailable on {dram_missing} run(s)</text>"##,
            MARGIN_T + 55.0
        );
    }
    svg.push_str("</svg>");
    Ok(svg)
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
