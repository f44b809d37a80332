use thiserror::Error;

use crate::trace::PowerDomain;

#[derive(Debug, Error)]
pub enum MeterError {
    /// The requested backend cannot run on this machine (missing powercap
    /// tree, unreadable counters, unsupported platform).
    #[error("energy backend unavailable: {0}")]
    Unavailable(String),

    #[error("sampling period {0} ms outside the supported [1, 1000] ms range")]
    InvalidPeriod(f64),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("cannot parse `{path}`: {detail}")]
    Parse { path: String, detail: String },

    #[error("invalid synthetic model: {0}")]
    InvalidModel(String),

    #[error("trace holds no samples for domain {0}")]
    NoSamples(PowerDomain),

    #[error("domain {0} is not part of this trace")]
    UnknownDomain(PowerDomain),

    #[error("t={t_ns} ns outside the sampled range [{first_ns}, {last_ns}] ns")]
    OutOfRange { t_ns: u64, first_ns: u64, last_ns: u64 },

    #[error("empty interval: t0={t0_ns} ns, t1={t1_ns} ns")]
    BadInterval { t0_ns: u64, t1_ns: u64 },
}
