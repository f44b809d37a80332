//! Backend abstraction over energy counter sources.

use std::time::Instant;

use crate::error::MeterError;
use crate::rapl::RaplBackend;
use crate::synthetic::{SyntheticBackend, SyntheticPowerModel};
use crate::trace::PowerDomain;

/// One poll: every domain read back-to-back under a common timestamp.
#[derive(Debug, Clone)]
pub struct PollReading {
    pub t: Instant,
    pub values_uj: Vec<(PowerDomain, u64)>,
}

/// A source of cumulative energy counters.
pub trait EnergyBackend: Send {
    /// Short human-readable identifier ("rapl", "synthetic").
    fn name(&self) -> &'static str;

    /// Domains this backend reports.
    fn domains(&self) -> Vec<PowerDomain>;

    /// Wraparound modulus of one domain's counter, in microjoules.
    fn counter_max_uj(&self, domain: PowerDomain) -> u64;

    /// Read all domains once.
    fn poll(&mut self) -> Result<PollReading, MeterError>;
}

/// Which backend to open.
#[derive(Debug, Clone)]
pub enum BackendSpec {
    Rapl,
    Synthetic(SyntheticPowerModel),
}

/// Open a backend. RAPL requires a readable powercap tree and fails with a
/// capability error otherwise; synthetic always works.
pub fn open_backend(spec: BackendSpec) -> Result<Box<dyn EnergyBackend>, MeterError> {
    match spec {
        BackendSpec::Rapl => Ok(Box::new(RaplBackend::open()?)),
        BackendSpec::Synthetic(model) => Ok(Box::new(SyntheticBackend::new(model)?)),
    }
}
