//! The built-in correctness suite behind the `validate` subcommand: layout
//! equivalence, the propagate translation oracle, BGK conservation, the
//! synthetic energy-integration oracle, metric identities, and thread-count
//! determinism. Each check runs end-to-end against the public APIs and
//! reports one pass/fail line.

use std::time::{Duration, Instant};

use lb_core::{
    step, step_reference, BgkParams, CollideMode, FieldPattern, LatticeGeometry, LatticeModel,
    LayoutKind, PopulationField, SiteCoord, StepBuffers, SurrogateParams, VelocitySet, WorkerPlan,
};
use lb_energy::{session_record, PowerDomain, PowerSegment, SyntheticBackend, SyntheticPowerModel};

use crate::config::{BackendChoice, CollideSpec, ExperimentConfig, MemoryTarget, QModel};
use crate::experiment::run_experiment;
use crate::record::propagate_bandwidth;

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub duration: Duration,
}

fn run_check(name: &'static str, body: impl FnOnce() -> Result<String, String>) -> CheckResult {
    let start = Instant::now();
    let outcome = body();
    let duration = start.elapsed();
    match outcome {
        Ok(detail) => CheckResult { name, passed: true, detail, duration },
        Err(detail) => CheckResult { name, passed: false, detail, duration },
    }
}

/// Run the whole validation suite.
pub fn run_validation_suite() -> Vec<CheckResult> {
    vec![
        run_check("cross-layout equivalence", check_cross_layout_equivalence),
        run_check("propagate translation oracle", check_translation_oracle),
        run_check("bgk conservation", check_bgk_conservation),
        run_check("energy integration oracle", check_energy_integration),
        run_check("metric identities", check_metric_identities),
        run_check("thread-count determinism", check_thread_determinism),
    ]
}

fn buffers(
    nx: usize,
    ny: usize,
    set: &VelocitySet,
    layout: LayoutKind,
    pattern: &FieldPattern,
) -> Result<StepBuffers, String> {
    let geo = LatticeGeometry::for_set(nx, ny, set).map_err(|e| e.to_string())?;
    let front = PopulationField::init(geo, set.q, layout, pattern).map_err(|e| e.to_string())?;
    let back = PopulationField::init(geo, set.q, layout, &FieldPattern::Uniform(0.0))
        .map_err(|e| e.to_string())?;
    StepBuffers::new(front, back).map_err(|e| e.to_string())
}

/// 32x32, q=37, 10 surrogate steps (F=64), seeds {1,2,3}: all four layouts
/// must match the scalar AoS oracle checksum bitwise, in under 10 seconds.
fn check_cross_layout_equivalence() -> Result<String, String> {
    let started = Instant::now();
    let set = VelocitySet::build(&LatticeModel::D2Q37).map_err(|e| e.to_string())?;
    for seed in [1u64, 2, 3] {
        let params = SurrogateParams::from_seed(64, seed).map_err(|e| e.to_string())?;
        let mode = CollideMode::Surrogate(params);
        let pattern = FieldPattern::RandomSeeded(seed);

        let mut oracle = buffers(32, 32, &set, LayoutKind::Aos, &pattern)?;
        for _ in 0..10 {
            step_reference(&mut oracle, &set, &mode).map_err(|e| e.to_string())?;
        }
        let expected = oracle.front().checksum().to_bits();

        for layout in LayoutKind::all_default() {
            let mut bufs = buffers(32, 32, &set, layout, &pattern)?;
            let plan = WorkerPlan::new(2).map_err(|e| e.to_string())?;
            for _ in 0..10 {
                step(&mut bufs, &set, &mode, &plan).map_err(|e| e.to_string())?;
            }
            let got = bufs.front().checksum().to_bits();
            if got != expected {
                return Err(format!(
                    "seed {seed}, layout {layout}: checksum {got:#x} != oracle {expected:#x}"
                ));
            }
        }
    }
    let elapsed = started.elapsed();
    if elapsed > Duration::from_secs(10) {
        return Err(format!("took {elapsed:?}, budget is 10 s"));
    }
    Ok(format!("3 seeds x 4 layouts bitwise equal to the scalar oracle in {elapsed:?}"))
}

/// Every D2Q37 velocity: an impulse lands at ((x + t*cx) mod nx,
/// (y + t*cy) mod ny) exactly after t = 7 steps on a 16x16 lattice.
fn check_translation_oracle() -> Result<String, String> {
    let set = VelocitySet::build(&LatticeModel::D2Q37).map_err(|e| e.to_string())?;
    let (nx, ny, t) = (16usize, 16usize, 7i64);
    for (pop, c) in set.vectors.iter().enumerate() {
        let pattern = FieldPattern::Impulse { x: 2, y: 3, pop, value: 1.0 };
        let mut bufs = buffers(nx, ny, &set, LayoutKind::CAosoa { vl: 8 }, &pattern)?;
        let plan = WorkerPlan::new(2).map_err(|e| e.to_string())?;
        for _ in 0..t {
            step(&mut bufs, &set, &CollideMode::None, &plan).map_err(|e| e.to_string())?;
        }
        let ex = (2 + t * c[0] as i64).rem_euclid(nx as i64) as usize;
        let ey = (3 + t * c[1] as i64).rem_euclid(ny as i64) as usize;
        let got = bufs.front().read(SiteCoord::new(ex, ey), pop);
        if got != 1.0 {
            return Err(format!("velocity {c:?}: expected impulse at ({ex},{ey}), found {got}"));
        }
        if bufs.front().checksum() != 1.0 {
            return Err(format!("velocity {c:?}: stray mass appeared"));
        }
    }
    Ok(format!("all {} velocities translate exactly over {t} steps", set.q))
}

/// D2Q9, 64x64, tau = 0.8, random initial state, 200 steps: global mass
/// drift <= 1e-10 relative, momentum drift <= 1e-10 per unit mass;
/// equilibrium input unchanged to 1e-15.
fn check_bgk_conservation() -> Result<String, String> {
    let set = VelocitySet::build(&LatticeModel::D2Q9).map_err(|e| e.to_string())?;
    let mode = CollideMode::Bgk(BgkParams::new(0.8).map_err(|e| e.to_string())?);
    let mut bufs = buffers(64, 64, &set, LayoutKind::CSoa { vl: 8 }, &FieldPattern::RandomSeeded(20))?;
    let plan = WorkerPlan::new(2).map_err(|e| e.to_string())?;

    let global = |field: &PopulationField| -> (f64, f64, f64) {
        let mut mass = 0.0;
        let mut mx = 0.0;
        let mut my = 0.0;
        for x in 0..64 {
            for y in 0..64 {
                let (rho, m) = field.moments(&set, SiteCoord::new(x, y)).unwrap();
                mass += rho;
                mx += m[0];
                my += m[1];
            }
        }
        (mass, mx, my)
    };

    let (mass0, mx0, my0) = global(bufs.front());
    for _ in 0..200 {
        step(&mut bufs, &set, &mode, &plan).map_err(|e| e.to_string())?;
    }
    let (mass1, mx1, my1) = global(bufs.front());

    let mass_drift = ((mass1 - mass0) / mass0).abs();
    if mass_drift > 1e-10 {
        return Err(format!("mass drift {mass_drift:e} exceeds 1e-10"));
    }
    let momentum_drift = ((mx1 - mx0).abs().max((my1 - my0).abs())) / mass0;
    if momentum_drift > 1e-10 {
        return Err(format!("momentum drift {momentum_drift:e} per unit mass exceeds 1e-10"));
    }

    // Equilibrium fixed point: f_p = w_p everywhere survives a full step.
    let geo = LatticeGeometry::for_set(16, 16, &set).map_err(|e| e.to_string())?;
    let mut eq = PopulationField::init(geo, 9, LayoutKind::Aos, &FieldPattern::Uniform(0.0))
        .map_err(|e| e.to_string())?;
    let weights = set.weights.clone().expect("d2q9 has weights");
    for x in 0..16 {
        for y in 0..16 {
            for (p, w) in weights.iter().enumerate() {
                eq.write(SiteCoord::new(x, y), p, *w);
            }
        }
    }
    let mut eq_bufs = StepBuffers::new(eq.clone(), eq.clone()).map_err(|e| e.to_string())?;
    step(&mut eq_bufs, &set, &mode, &plan).map_err(|e| e.to_string())?;
    for x in 0..16 {
        for y in 0..16 {
            for (p, w) in weights.iter().enumerate() {
                let f = eq_bufs.front().read(SiteCoord::new(x, y), p);
                if (f - w).abs() > 1e-15 {
                    return Err(format!("equilibrium moved at ({x},{y},{p}): {f} vs {w}"));
                }
            }
        }
    }
    Ok(format!(
        "mass drift {mass_drift:.2e}, momentum drift {momentum_drift:.2e}, equilibrium fixed"
    ))
}

/// Two-segment synthetic model sampled at 10 ms: interval energy over
/// [0, 4 s] must equal 400 J package / 30 J dram within one counter quantum
/// (plus one per wrap); a small counter modulus forcing a wrap must give
/// the same totals.
fn check_energy_integration() -> Result<String, String> {
    let segments = vec![
        PowerSegment { duration_ns: 2_000_000_000, package_w: 50.0, dram_w: 5.0 },
        PowerSegment { duration_ns: 2_000_000_000, package_w: 150.0, dram_w: 10.0 },
    ];
    let mut details = Vec::new();
    for counter_max_uj in [u64::MAX, 262_144_000u64] {
        let model = SyntheticPowerModel::new(segments.clone(), counter_max_uj)
            .map_err(|e| e.to_string())?;
        let mut backend = SyntheticBackend::new(model).map_err(|e| e.to_string())?;
        let (trace, ()) = session_record(&mut backend, 10.0, |_| {
            std::thread::sleep(Duration::from_millis(4050));
        })
        .map_err(|e| e.to_string())?;

        let horizon = 4_000_000_000u64;
        for (domain, expected) in [(PowerDomain::Package, 400.0), (PowerDomain::Dram, 30.0)] {
            let wraps = trace.wraps(domain);
            let got = trace
                .interval_energy(0, horizon, domain)
                .map_err(|e| e.to_string())?;
            let tol_j = (1 + wraps) as f64 * 1e-6;
            if (got - expected).abs() > tol_j {
                return Err(format!(
                    "counter_max {counter_max_uj}: {domain} energy {got} J != {expected} J \
                     (tol {tol_j} J, wraps {wraps})"
                ));
            }
            details.push(format!("{domain}={got:.6}J/wraps={wraps}"));
        }
        if counter_max_uj != u64::MAX && trace.wraps(PowerDomain::Package) == 0 {
            return Err("wrap variant never wrapped; modulus too large for the load".into());
        }
    }
    Ok(details.join(", "))
}

/// Metric identities on a real record, plus the hand bandwidth value.
fn check_metric_identities() -> Result<String, String> {
    let hand = propagate_bandwidth(37, 1_000_000, 100, 1_000_000_000);
    if hand != 59.2 {
        return Err(format!("bandwidth formula gave {hand}, expected 59.2"));
    }

    let cfg = ExperimentConfig {
        nx: 16,
        ny: 16,
        q_model: QModel::D2Q37,
        layout: LayoutKind::CSoa { vl: 8 },
        threads: 1,
        memory_target: MemoryTarget::Default,
        collide_mode: CollideSpec::Surrogate { fma_per_pop: 32 },
        iterations: 5,
        warmup_iterations: 1,
        sampler_period_ms: 5.0,
        backend: BackendChoice::Synthetic { package_w: 100.0, dram_w: 10.0 },
        fallback_synthetic: false,
        seed: 11,
        repetitions: 3,
        pad_clustered: true,
        pin_threads: false,
        booted_memory_mode: None,
    };
    let record = run_experiment(&cfg).map_err(|e| e.to_string())?;
    let norm = (cfg.sites() * cfg.iterations) as f64;
    for (name, k) in &record.kernels {
        let wall_s = k.wall_ns as f64 * 1e-9;
        if (k.e_s_joules - wall_s * k.p_avg_w_total).abs() > 1e-9 * k.e_s_joules.abs() {
            return Err(format!("{name}: e_s != wall_s * p_avg"));
        }
        if (k.ns_per_site * norm).round() as u64 != k.wall_ns {
            return Err(format!("{name}: ns_per_site normalization broken"));
        }
        if (k.e_s_per_site_j * norm - k.e_s_joules).abs() > 1e-9 * k.e_s_joules.abs() {
            return Err(format!("{name}: e_s_per_site normalization broken"));
        }
    }
    let bw = record.kernels["propagate"].bandwidth_gbs.ok_or("missing bandwidth")?;
    let recomputed =
        propagate_bandwidth(37, cfg.sites(), cfg.iterations, record.kernels["propagate"].wall_ns);
    if bw != recomputed {
        return Err(format!("bandwidth mismatch: {bw} vs {recomputed}"));
    }
    Ok(format!("identities hold; hand bandwidth {hand} GB/s"))
}

/// Checksums must be bitwise identical across 1, 2 and 4 workers for both
/// kernels on every layout.
fn check_thread_determinism() -> Result<String, String> {
    let d2q37 = VelocitySet::build(&LatticeModel::D2Q37).map_err(|e| e.to_string())?;
    let d2q9 = VelocitySet::build(&LatticeModel::D2Q9).map_err(|e| e.to_string())?;
    let surrogate = CollideMode::Surrogate(SurrogateParams::from_seed(32, 6).map_err(|e| e.to_string())?);
    let bgk = CollideMode::Bgk(BgkParams::new(0.8).map_err(|e| e.to_string())?);

    for (set, mode, label) in [(&d2q37, &surrogate, "surrogate"), (&d2q9, &bgk, "bgk")] {
        for layout in LayoutKind::all_default() {
            let mut reference: Option<u64> = None;
            for threads in [1usize, 2, 4] {
                let mut bufs =
                    buffers(16, 16, set, layout, &FieldPattern::RandomSeeded(40))?;
                let plan = WorkerPlan::new(threads).map_err(|e| e.to_string())?;
                for _ in 0..5 {
                    step(&mut bufs, set, mode, &plan).map_err(|e| e.to_string())?;
                }
                let sum = bufs.front().checksum().to_bits();
                match reference {
                    None => reference = Some(sum),
                    Some(r) if r != sum => {
                        return Err(format!(
                            "{label}/{layout}: {threads} workers diverged ({sum:#x} vs {r:#x})"
                        ));
                    }
                    _ => {}
                }
            }
        }
    }
    Ok("both kernels bitwise stable across 1/2/4 workers on all layouts".into())
}
