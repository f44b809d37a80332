//! Sweeps: sequential execution of the layout × threads × memory-target
//! product, with records emitted incrementally so a crash keeps everything
//! finished so far.

use lb_core::LayoutKind;

use crate::config::{ExperimentConfig, MemoryTarget, SweepAxes};
use crate::error::HarnessError;
use crate::experiment::run_experiment;
use crate::record::{SkipRecord, SweepRecord};

/// The cartesian product over the axes applied to a base configuration.
#[derive(Debug, Clone)]
pub struct SweepPlan {
    pub base: ExperimentConfig,
    pub layouts: Vec<LayoutKind>,
    pub threads: Vec<usize>,
    pub memory_targets: Vec<MemoryTarget>,
}

impl SweepPlan {
    pub fn new(base: ExperimentConfig, axes: SweepAxes) -> Result<Self, HarnessError> {
        if axes.layouts.is_empty() || axes.threads.is_empty() || axes.memory_targets.is_empty() {
            return Err(HarnessError::InvalidConfig("sweep axes must be non-empty".into()));
        }
        Ok(Self {
            base,
            layouts: axes.layouts,
            threads: axes.threads,
            memory_targets: axes.memory_targets,
        })
    }

    /// Combinations in deterministic order: memory target, layout, threads.
    pub fn combinations(&self) -> Vec<ExperimentConfig> {
        let mut combos = Vec::new();
        for &memory_target in &self.memory_targets {
            for &layout in &self.layouts {
                for &threads in &self.threads {
                    let mut cfg = self.base.clone();
                    cfg.memory_target = memory_target;
                    cfg.layout = layout;
                    cfg.threads = threads;
                    combos.push(cfg);
                }
            }
        }
        combos
    }
}

#[derive(Debug)]
pub struct SweepSummary {
    pub records: Vec<SweepRecord>,
    pub completed: usize,
    pub skipped: usize,
    /// All completed runs produced the same logical checksum — the
    /// cross-combination determinism contract.
    pub checksums_consistent: bool,
}

/// Run every combination sequentially (measurements must never overlap).
/// `emit` is called with each record as soon as it exists; failures of one
/// combination are recorded as skips and the sweep continues.
pub fn run_sweep(
    plan: &SweepPlan,
    mut emit: impl FnMut(&SweepRecord) -> Result<(), HarnessError>,
) -> Result<SweepSummary, HarnessError> {
    let combos = plan.combinations();
    if combos.is_empty() {
        return Err(HarnessError::InvalidConfig("empty sweep plan".into()));
    }
    let mut records = Vec::with_capacity(combos.len());
    let mut checksums: Vec<u64> = Vec::new();
    for cfg in &combos {
        let record = match cfg.validate().and_then(|()| run_experiment(cfg)) {
            Ok(r) => {
                checksums.push(r.checksum.to_bits());
                SweepRecord::Run(Box::new(r))
            }
            Err(e) => SweepRecord::Skip(SkipRecord {
                skipped: true,
                layout: cfg.layout,
                threads: cfg.threads,
                memory_target: cfg.memory_target,
                reason: e.to_string(),
            }),
        };
        emit(&record)?;
        records.push(record);
    }
    let completed = checksums.len();
    let skipped = records.len() - completed;
    let checksums_consistent = checksums.windows(2).all(|w| w[0] == w[1]);
    Ok(SweepSummary { records, completed, skipped, checksums_consistent })
}
