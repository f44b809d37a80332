//! Session-based energy measurement with user markers.
//!
//! A session samples cumulative per-domain energy counters at a fixed
//! period while a measured body runs; the body places markers into the
//! stream, and queries against the finished [`EnergyTrace`] turn marker
//! spans into joules and watts with counter-wraparound correction.
//!
//! Two backends exist: the Linux powercap tree (RAPL `package`/`dram`
//! counters) and a deterministic synthetic power model that doubles as the
//! test oracle.

pub mod backend;
pub mod error;
pub mod rapl;
pub mod session;
pub mod synthetic;
pub mod trace;

pub use backend::{open_backend, BackendSpec, EnergyBackend, PollReading};
pub use error::MeterError;
pub use rapl::{probe_rapl, RaplBackend, RaplProbe};
pub use session::{session_record, SessionHandle};
pub use synthetic::{PowerSegment, SyntheticBackend, SyntheticPowerModel};
pub use trace::{EnergySample, EnergyTrace, Marker, PowerDomain};

/// Energy-to-solution: the product of time-to-solution and average power.
pub fn energy_to_solution(t_s: f64, p_avg_w: f64) -> f64 {
    t_s * p_avg_w
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn energy_to_solution_is_the_product() {
        assert_eq!(energy_to_solution(2.0, 100.0), 200.0);
        assert_eq!(energy_to_solution(5.0, 0.0), 0.0);
    }
}
