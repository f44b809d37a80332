//! Deterministic synthetic power model, used as a test oracle and as a
//! fallback backend on machines without readable energy counters.
//!
//! The model is piecewise-constant power per domain; its cumulative energy
//! has a closed form, so sampled counters can be checked exactly. The last
//! segment extends indefinitely.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::backend::{EnergyBackend, PollReading};
use crate::error::MeterError;
use crate::trace::PowerDomain;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerSegment {
    pub duration_ns: u64,
    pub package_w: f64,
    pub dram_w: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticPowerModel {
    pub segments: Vec<PowerSegment>,
    /// Counter wraparound modulus in microjoules. Pick a small value to
    /// exercise wrap correction.
    pub counter_max_uj: u64,
}

impl SyntheticPowerModel {
    pub fn new(segments: Vec<PowerSegment>, counter_max_uj: u64) -> Result<Self, MeterError> {
        if segments.is_empty() {
            return Err(MeterError::InvalidModel("at least one segment required".into()));
        }
        for s in &segments {
            if s.duration_ns == 0 {
                return Err(MeterError::InvalidModel("segment durations must be positive".into()));
            }
            if !s.package_w.is_finite()
                || s.package_w < 0.0
                || !s.dram_w.is_finite()
                || s.dram_w < 0.0
            {
                return Err(MeterError::InvalidModel("powers must be nonnegative".into()));
            }
        }
        if counter_max_uj == 0 {
            return Err(MeterError::InvalidModel("counter_max_uj must be positive".into()));
        }
        Ok(Self { segments, counter_max_uj })
    }

    /// Constant power on both domains, never wrapping in practice.
    pub fn constant(package_w: f64, dram_w: f64) -> Result<Self, MeterError> {
        Self::new(
            vec![PowerSegment { duration_ns: 1_000_000_000, package_w, dram_w }],
            u64::MAX,
        )
    }

    fn power(&self, segment: &PowerSegment, domain: PowerDomain) -> f64 {
        match domain {
            PowerDomain::Package => segment.package_w,
            PowerDomain::Dram => segment.dram_w,
        }
    }

    /// Exact cumulative energy at `t_ns` in microjoules (1 W = 1e-3 uJ/ns).
    pub fn cumulative_uj(&self, domain: PowerDomain, t_ns: u64) -> f64 {
        let mut remaining = t_ns;
        let mut total = 0.0;
        for segment in &self.segments {
            let within = remaining.min(segment.duration_ns);
            total += self.power(segment, domain) * within as f64 * 1e-3;
            remaining -= within;
            if remaining == 0 {
                return total;
            }
        }
        // Beyond the schedule the last segment's power holds.
        let last = self.segments.last().expect("validated non-empty");
        total + self.power(last, domain) * remaining as f64 * 1e-3
    }

    /// What a quantized, wrapping hardware counter would show at `t_ns`.
    pub fn counter_uj(&self, domain: PowerDomain, t_ns: u64) -> u64 {
        (self.cumulative_uj(domain, t_ns) as u64) % self.counter_max_uj
    }
}

/// Backend producing counters from a [`SyntheticPowerModel`].
///
/// The model clock starts at the first poll, so a session's first sample
/// reads exactly zero and segment boundaries are aligned to the session
/// timeline.
#[derive(Debug)]
pub struct SyntheticBackend {
    model: SyntheticPowerModel,
    epoch: Option<Instant>,
}

impl SyntheticBackend {
    pub fn new(model: SyntheticPowerModel) -> Result<Self, MeterError> {
        // Re-validate in case the model was built literally.
        let model = SyntheticPowerModel::new(model.segments, model.counter_max_uj)?;
        Ok(Self { model, epoch: None })
    }

    pub fn model(&self) -> &SyntheticPowerModel {
        &self.model
    }
}

impl EnergyBackend for SyntheticBackend {
    fn name(&self) -> &'static str {
        "synthetic"
    }

    fn domains(&self) -> Vec<PowerDomain> {
        vec![PowerDomain::Package, PowerDomain::Dram]
    }

    fn counter_max_uj(&self, _domain: PowerDomain) -> u64 {
        self.model.counter_max_uj
    }

    fn poll(&mut self) -> Result<PollReading, MeterError> {
        let now = Instant::now();
        let epoch = *self.epoch.get_or_insert(now);
        let t_ns = now.duration_since(epoch).as_nanos() as u64;
        Ok(PollReading {
            t: now,
            values_uj: vec![
                (PowerDomain::Package, self.model.counter_uj(PowerDomain::Package, t_ns)),
                (PowerDomain::Dram, self.model.counter_uj(PowerDomain::Dram, t_ns)),
            ],
        })
    }
}
