//! Side-by-side comparison of named record sets (for example, this
//! machine's runs against externally produced ones): per kernel, each set's
//! best energy per site, the configuration achieving it, and the ratio
//! against the first set.

use std::collections::BTreeSet;

use lb_harness::RunRecord;

pub fn render_comparison(sets: &[(String, Vec<RunRecord>)]) -> Result<String, String> {
    if sets.len() < 2 {
        return Err("comparison needs at least two record sets".into());
    }
    // Kernels present in every set.
    let mut shared: Option<BTreeSet<String>> = None;
    for (_, records) in sets {
        let kernels: BTreeSet<String> =
            records.iter().flat_map(|r| r.kernels.keys().cloned()).collect();
        shared = Some(match shared {
            None => kernels,
            Some(prev) => prev.intersection(&kernels).cloned().collect(),
        });
    }
    let shared = shared.unwrap_or_default();
    if shared.is_empty() {
        return Err("record sets share no kernels".into());
    }

    let mut out = String::new();
    out.push_str(&format!(
        "{:<10} {:<14} {:>14} {:>8}  {}\n",
        "kernel", "set", "best E_s/site", "ratio", "best config"
    ));
    for kernel in &shared {
        let mut baseline: Option<f64> = None;
        for (name, records) in sets {
            let best = records
                .iter()
                .filter_map(|r| r.kernels.get(kernel).map(|k| (k.e_s_per_site_j, r)))
                .min_by(|a, b| a.0.total_cmp(&b.0));
            let Some((value, record)) = best else {
                out.push_str(&format!("{kernel:<10} {name:<14} {:>14} {:>8}  -\n", "-", "-"));
                continue;
            };
            let ratio = match baseline {
                None => {
                    baseline = Some(value);
                    1.0
                }
                Some(base) => value / base,
            };
            out.push_str(&format!(
                "{:<10} {:<14} {:>14.6e} {:>8.3}  {} threads={} target={}\n",
                kernel,
                name,
                value,
                ratio,
                record.config.layout,
                record.config.threads,
                record.config.memory_target,
            ));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use lb_core::LayoutKind;
    use lb_harness::{
        BackendChoice, CollideSpec, ExperimentConfig, KernelMetrics, MachineMeta, MemoryTarget,
        QModel,
    };
    use std::collections::BTreeMap;

    fn record(layout: LayoutKind, es: f64) -> RunRecord {
        let metrics = KernelMetrics {
            wall_ns: 1,
            wall_ns_min: 1,
            wall_ns_max: 1,
            ns_per_site: 1.0,
            p_avg_w_package: 1.0,
            p_avg_w_dram: None,
            p_avg_w_total: 1.0,
            e_s_joules: es,
            e_s_per_site_j: es,
            bandwidth_gbs: None,
        };
        let mut kernels = BTreeMap::new();
        kernels.insert("propagate".to_string(), metrics.clone());
        kernels.insert("collide".to_string(), metrics);
        RunRecord {
            config: ExperimentConfig {
                nx: 4,
                ny: 4,
                q_model: QModel::D2Q37,
                layout,
                threads: 1,
                memory_target: MemoryTarget::Default,
                collide_mode: CollideSpec::Surrogate { fma_per_pop: 1 },
                iterations: 1,
                warmup_iterations: 0,
                sampler_period_ms: 50.0,
                backend: BackendChoice::default(),
                fallback_synthetic: false,
                seed: 0,
                repetitions: 1,
                pad_clustered: true,
                pin_threads: false,
                booted_memory_mode: None,
            },
            machine: MachineMeta {
                cpu_model: "test".into(),
                logical_cpus: 1,
                numa_nodes: vec![],
                energy_backend: "synthetic".into(),
                dram_domain: false,
                hostname: None,
            },
            kernels,
            checksum: 0.0,
            warnings: vec![],
            timestamp_unix_s: 0,
        }
    }

    #[test]
    fn identical_sets_have_unit_ratios() {
        let a = vec![record(LayoutKind::Aos, 2e-7), record(LayoutKind::Soa, 1e-7)];
        let sets = vec![("left".to_string(), a.clone()), ("right".to_string(), a)];
        let out = render_comparison(&sets).unwrap();
        for line in out.lines().skip(1) {
            assert!(line.contains("1.000"), "{line}");
            // The best config is the SoA record in both sets.
            assert!(line.contains("SoA"), "{line}");
        }
    }

    #[test]
    fn doubled_energy_shows_ratio_two() {
        let a = vec![record(LayoutKind::Aos, 1e-7)];
        let b = vec![record(LayoutKind::Aos, 2e-7)];
        let sets = vec![("base".to_string(), a), ("double".to_string(), b)];
        let out = render_comparison(&sets).unwrap();
        let double_line = out.lines().find(|l| l.contains("double")).unwrap();
        assert!(double_line.contains("2.000"), "{double_line}");
    }

    #[test]
    fn per_kernel_best_may_come_from_different_configs() {
        let mut fast_propagate = record(LayoutKind::CSoa { vl: 8 }, 1e-7);
        fast_propagate.kernels.get_mut("collide").unwrap().e_s_per_site_j = 9e-7;
        let mut fast_collide = record(LayoutKind::CAosoa { vl: 8 }, 9e-7);
        fast_collide.kernels.get_mut("collide").unwrap().e_s_per_site_j = 1e-7;
        let sets = vec![
            ("mine".to_string(), vec![fast_propagate, fast_collide]),
            ("other".to_string(), vec![record(LayoutKind::Soa, 5e-7)]),
        ];
        let out = render_comparison(&sets).unwrap();
        let mine_lines: Vec<&str> = out.lines().filter(|l| l.contains("mine")).collect();
        let collide_line = mine_lines.iter().find(|l| l.starts_with("collide")).unwrap();
        let propagate_line = mine_lines.iter().find(|l| l.starts_with("propagate")).unwrap();
        assert!(collide_line.contains("CAoSoA(8)"), "{collide_line}");
        assert!(propagate_line.contains("CSoA(8)"), "{propagate_line}");
    }

    #[test]
    fn disjoint_kernels_error() {
        let mut only_propagate = record(LayoutKind::Aos, 1e-7);
        only_propagate.kernels.remove("collide");
        let mut only_collide = record(LayoutKind::Aos, 1e-7);
        only_collide.kernels.remove("propagate");
        let sets = vec![
            ("a".to_string(), vec![only_propagate]),
            ("b".to_string(), vec![only_collide]),
        ];
        assert!(render_comparison(&sets).is_err());
    }
}
