//! A single experiment: allocate under the memory target, pin workers,
//! warm up, run marker-delimited kernel batches under the sampler, and
//! reduce marker spans to per-site metrics.

use std::time::{SystemTime, UNIX_EPOCH};

use lb_core::{
    collide_bgk, collide_surrogate, halo_exchange, propagate, CollideMode, FieldPattern,
    LatticeGeometry, LayoutIndexer, PopulationField, StepBuffers, VelocitySet, WorkerPlan,
};
use lb_energy::{
    open_backend, session_record, BackendSpec, EnergyBackend, EnergyTrace, MeterError,
    PowerDomain, SyntheticPowerModel,
};

use crate::affinity::pin_workers;
use crate::config::{BackendChoice, ExperimentConfig, MemoryTarget};
use crate::error::HarnessError;
use crate::machine::MachineMeta;
use crate::numa::bind_to_node;
use crate::record::{propagate_bandwidth, KernelMetrics, RunRecord};

/// Run one experiment to completion.
///
/// Never run two experiments concurrently in one process: timed regions
/// must not overlap for the energy attribution to mean anything (sweeps
/// serialize for exactly this reason).
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunRecord, HarnessError> {
    cfg.validate()?;
    let mut warnings: Vec<String> = Vec::new();

    let set = VelocitySet::build(&cfg.q_model.to_model())?;
    let geo = LatticeGeometry::for_set(cfg.nx, cfg.ny, &set)?;

    // Worker placement: cores first, SMT after; refusal to oversubscribe is
    // policy when pinning, a warning when running unpinned.
    let plan = if cfg.pin_threads {
        match pin_workers(cfg.threads) {
            Ok(aff) => {
                if !aff.honored {
                    warnings.push("affinity:not-honored".into());
                }
                WorkerPlan::with_pin(cfg.threads, aff.pin_fn())?
            }
            Err(e @ HarnessError::Oversubscribed { .. }) => return Err(e),
            Err(_) => {
                warnings.push("affinity:unsupported".into());
                WorkerPlan::new(cfg.threads)?
            }
        }
    } else {
        if cfg.threads > crate::affinity::logical_cpus() {
            warnings.push("threads:oversubscribed".into());
        }
        WorkerPlan::new(cfg.threads)?
    };

    let mut backend = open_configured_backend(cfg, &mut warnings)?;
    let domains = backend.domains();
    let dram_available = domains.contains(&PowerDomain::Dram);
    if !dram_available {
        warnings.push("dram:unavailable".into());
    }
    let machine = MachineMeta::collect(backend.name(), dram_available);

    // Allocate and first-touch the lattice under the memory target; the
    // init patterns write every element, which commits the pages.
    let mut buffers = {
        let _guard = match cfg.memory_target {
            MemoryTarget::Default => None,
            MemoryTarget::NumaNode(node) => Some(bind_to_node(node)?),
        };
        let indexer =
            LayoutIndexer::with_padding(cfg.layout, geo, set.q, cfg.pad_clustered)?;
        let front = PopulationField::from_indexer(
            indexer.clone(),
            &FieldPattern::RandomSeeded(cfg.seed),
        )?;
        let back = PopulationField::from_indexer(indexer, &FieldPattern::Uniform(0.0))?;
        StepBuffers::new(front, back)?
    };

    let mode = cfg.collide_mode.to_mode(cfg.seed)?;

    // Warmup: one unmeasured batch of each phase.
    for _ in 0..cfg.warmup_iterations {
        propagate_once(&mut buffers, &set, &plan)?;
    }
    if cfg.collide_mode.measures_collide() {
        for _ in 0..cfg.warmup_iterations {
            collide_once(&mut buffers, &set, &mode, &plan)?;
        }
    }

    let iterations = cfg.iterations;
    let repetitions = cfg.repetitions;
    let measure_collide = cfg.collide_mode.measures_collide();
    let (trace, body_result) =
        session_record(backend.as_mut(), cfg.sampler_period_ms, |session| {
            for _ in 0..repetitions {
                session.mark("propagate:start");
                for _ in 0..iterations {
                    propagate_once(&mut buffers, &set, &plan)?;
                }
                session.mark("propagate:stop");
                if measure_collide {
                    session.mark("collide:start");
                    for _ in 0..iterations {
                        collide_once(&mut buffers, &set, &mode, &plan)?;
                    }
                    session.mark("collide:stop");
                }
            }
            Ok::<f64, HarnessError>(buffers.front().checksum())
        })?;
    let checksum = body_result?;
    if trace.partial {
        warnings.push("sampler:partial".into());
    }

    let sites = cfg.sites();
    let mut kernels = std::collections::BTreeMap::new();
    kernels.insert(
        "propagate".to_string(),
        kernel_metrics(&trace, "propagate", sites, iterations, Some(set.q), dram_available)?,
    );
    if measure_collide {
        kernels.insert(
            "collide".to_string(),
            kernel_metrics(&trace, "collide", sites, iterations, None, dram_available)?,
        );
    }

    Ok(RunRecord {
        config: cfg.clone(),
        machine,
        kernels,
        checksum,
        warnings,
        timestamp_unix_s: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
    })
}

fn propagate_once(
    buffers: &mut StepBuffers,
    set: &VelocitySet,
    plan: &WorkerPlan,
) -> Result<(), HarnessError> {
    halo_exchange(buffers.front_mut());
    {
        let (front, back) = buffers.split();
        propagate(front, back, set, plan)?;
    }
    buffers.swap();
    Ok(())
}

fn collide_once(
    buffers: &mut StepBuffers,
    set: &VelocitySet,
    mode: &CollideMode,
    plan: &WorkerPlan,
) -> Result<(), HarnessError> {
    match mode {
        CollideMode::None => {}
        CollideMode::Bgk(params) => collide_bgk(buffers.front_mut(), set, *params, plan)?,
        CollideMode::Surrogate(params) => collide_surrogate(buffers.front_mut(), params, plan),
    }
    Ok(())
}

fn open_configured_backend(
    cfg: &ExperimentConfig,
    warnings: &mut Vec<String>,
) -> Result<Box<dyn EnergyBackend>, HarnessError> {
    match cfg.backend {
        BackendChoice::Synthetic { package_w, dram_w } => {
            Ok(open_backend(BackendSpec::Synthetic(SyntheticPowerModel::constant(
                package_w, dram_w,
            )?))?)
        }
        BackendChoice::Rapl => match open_backend(BackendSpec::Rapl) {
            Ok(b) => Ok(b),
            Err(MeterError::Unavailable(detail)) if cfg.fallback_synthetic => {
                warnings.push(format!("rapl:unavailable ({detail}), using:synthetic"));
                let model = SyntheticPowerModel::constant(100.0, 10.0)?;
                Ok(open_backend(BackendSpec::Synthetic(model))?)
            }
            Err(e) => Err(e.into()),
        },
    }
}

/// Reduce the marker spans of one kernel to metrics: the median repetition
/// by wall time carries power and energy; min/max wall are retained.
fn kernel_metrics(
    trace: &EnergyTrace,
    kernel: &str,
    sites: usize,
    iterations: usize,
    bandwidth_q: Option<usize>,
    dram_available: bool,
) -> Result<KernelMetrics, HarnessError> {
    let spans = trace.spans(&format!("{kernel}:start"), &format!("{kernel}:stop"));
    if spans.is_empty() {
        return Err(HarnessError::InvalidConfig(format!("no {kernel} spans in trace")));
    }
    let mut order: Vec<usize> = (0..spans.len()).collect();
    order.sort_by_key(|&i| spans[i].1 - spans[i].0);
    let median = spans[order[(order.len() - 1) / 2]];

    let (t0, t1) = median;
    let wall_ns = (t1 - t0).max(1);
    let wall_s = wall_ns as f64 * 1e-9;
    let p_avg_w_package = trace.average_power(t0, t1, PowerDomain::Package)?;
    let p_avg_w_dram = if dram_available {
        Some(trace.average_power(t0, t1, PowerDomain::Dram)?)
    } else {
        None
    };
    let p_avg_w_total = trace.average_power_total(t0, t1)?;
    let e_s_joules = lb_energy::energy_to_solution(wall_s, p_avg_w_total);
    let norm = (sites * iterations) as f64;

    Ok(KernelMetrics {
        wall_ns,
        wall_ns_min: spans.iter().map(|(a, b)| b - a).min().unwrap_or(wall_ns),
        wall_ns_max: spans.iter().map(|(a, b)| b - a).max().unwrap_or(wall_ns),
        ns_per_site: wall_ns as f64 / norm,
        p_avg_w_package,
        p_avg_w_dram,
        p_avg_w_total,
        e_s_joules,
        e_s_per_site_j: e_s_joules / norm,
        bandwidth_gbs: bandwidth_q.map(|q| propagate_bandwidth(q, sites, iterations, wall_ns)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{CollideSpec, QModel};
    use lb_core::LayoutKind;

    fn small_config() -> ExperimentConfig {
        ExperimentConfig {
            nx: 16,
            ny: 16,
            q_model: QModel::D2Q37,
            layout: LayoutKind::CSoa { vl: 8 },
            threads: 1,
            memory_target: MemoryTarget::Default,
            collide_mode: CollideSpec::Surrogate { fma_per_pop: 16 },
            iterations: 5,
            warmup_iterations: 1,
            sampler_period_ms: 5.0,
            backend: BackendChoice::Synthetic { package_w: 100.0, dram_w: 10.0 },
            fallback_synthetic: false,
            seed: 7,
            repetitions: 3,
            pad_clustered: true,
            pin_threads: false,
            booted_memory_mode: None,
        }
    }

    #[test]
    fn record_satisfies_metric_identities() {
        let record = run_experiment(&small_config()).unwrap();
        assert_eq!(record.kernels.len(), 2);
        let sites = record.config.sites();
        for (name, k) in &record.kernels {
            let wall_s = k.wall_ns as f64 * 1e-9;
            assert!(
                (k.e_s_joules - wall_s * k.p_avg_w_total).abs() <= 1e-9 * k.e_s_joules.abs(),
                "{name}: e_s identity"
            );
            let back = k.ns_per_site * (sites * record.config.iterations) as f64;
            assert_eq!(back.round() as u64, k.wall_ns, "{name}: normalization identity");
            assert!(
                (k.e_s_per_site_j * (sites * record.config.iterations) as f64 - k.e_s_joules)
                    .abs()
                    <= 1e-9 * k.e_s_joules.abs(),
                "{name}: per-site identity"
            );
            assert!(k.wall_ns_min <= k.wall_ns && k.wall_ns <= k.wall_ns_max);
        }
        assert!(record.kernels["propagate"].bandwidth_gbs.is_some());
        assert!(record.kernels["collide"].bandwidth_gbs.is_none());
    }

    #[test]
    fn checksum_is_thread_invariant() {
        let one = run_experiment(&small_config()).unwrap();
        let mut cfg = small_config();
        cfg.threads = 2;
        let two = run_experiment(&cfg).unwrap();
        assert_eq!(one.checksum.to_bits(), two.checksum.to_bits());
    }

    #[test]
    fn checksum_is_layout_invariant() {
        let base = run_experiment(&small_config()).unwrap();
        for layout in [LayoutKind::Aos, LayoutKind::Soa, LayoutKind::CAosoa { vl: 8 }] {
            let mut cfg = small_config();
            cfg.layout = layout;
            let other = run_experiment(&cfg).unwrap();
            assert_eq!(other.checksum.to_bits(), base.checksum.to_bits(), "{layout}");
        }
    }

    #[test]
    fn config_echo_round_trips() {
        let record = run_experiment(&small_config()).unwrap();
        let json = serde_json::to_string(&record).unwrap();
        let back: RunRecord = serde_json::from_str(&json).unwrap();
        assert_eq!(back.config, record.config);
        assert_eq!(back, record);
    }

    #[test]
    fn missing_numa_node_fails_loudly() {
        let mut cfg = small_config();
        cfg.memory_target = MemoryTarget::NumaNode(63);
        let err = run_experiment(&cfg).unwrap_err();
        assert!(err.is_capability());
    }

    #[test]
    fn synthetic_power_shows_up_in_metrics() {
        // Constant 100 W package + 10 W dram: measured averages must sit
        // right at the model values.
        let record = run_experiment(&small_config()).unwrap();
        let k = &record.kernels["propagate"];
        assert!((k.p_avg_w_package - 100.0).abs() < 1.0, "pkg {}", k.p_avg_w_package);
        assert!((k.p_avg_w_dram.unwrap() - 10.0).abs() < 0.5, "dram {:?}", k.p_avg_w_dram);
        assert!((k.p_avg_w_total - 110.0).abs() < 1.5);
    }
}
