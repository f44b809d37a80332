//! Experiment harness: takes an [`ExperimentConfig`], sets worker count and
//! affinity, targets a memory node, runs warmup plus marker-delimited timed
//! kernel batches, and turns the resulting energy trace into per-site
//! normalized metrics ([`RunRecord`]). Sweeps run the cartesian product of
//! layouts, thread counts and memory targets sequentially, appending
//! records incrementally.

pub mod affinity;
pub mod config;
pub mod error;
pub mod experiment;
pub mod machine;
pub mod numa;
pub mod record;
pub mod sweep;
pub mod validate;

pub use affinity::{pin_workers, AffinityPlan};
pub use config::{BackendChoice, CollideSpec, ExperimentConfig, MemoryTarget, QModel, SweepAxes};
pub use error::HarnessError;
pub use experiment::run_experiment;
pub use machine::MachineMeta;
pub use record::{parse_jsonl, propagate_bandwidth, to_jsonl_line, KernelMetrics, RunRecord, SkipRecord, SweepRecord};
pub use sweep::{run_sweep, SweepPlan, SweepSummary};
