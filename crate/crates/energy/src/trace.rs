//! Energy traces: timestamped cumulative counter samples plus markers, and
//! the interval queries computed from them.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::MeterError;

/// The two reported power domains. Anything else a machine exposes is
/// ignored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PowerDomain {
    Package,
    Dram,
}

impl std::fmt::Display for PowerDomain {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PowerDomain::Package => write!(f, "package"),
            PowerDomain::Dram => write!(f, "dram"),
        }
    }
}

/// One reading of one domain's cumulative counter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "(u64, PowerDomain, u64)", into = "(u64, PowerDomain, u64)")]
pub struct EnergySample {
    /// Nanoseconds since the session's first sample (monotonic clock).
    pub t_ns: u64,
    pub domain: PowerDomain,
    /// Raw cumulative counter value in microjoules; wraps at the domain's
    /// `counter_max_uj`.
    pub cumulative_uj: u64,
}

impl From<(u64, PowerDomain, u64)> for EnergySample {
    fn from((t_ns, domain, cumulative_uj): (u64, PowerDomain, u64)) -> Self {
        Self { t_ns, domain, cumulative_uj }
    }
}

impl From<EnergySample> for (u64, PowerDomain, u64) {
    fn from(s: EnergySample) -> Self {
        (s.t_ns, s.domain, s.cumulative_uj)
    }
}

/// A labeled instant placed by the measured body.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "(u64, String)", into = "(u64, String)")]
pub struct Marker {
    pub t_ns: u64,
    pub label: String,
}

impl From<(u64, String)> for Marker {
    fn from((t_ns, label): (u64, String)) -> Self {
        Self { t_ns, label }
    }
}

impl From<Marker> for (u64, String) {
    fn from(m: Marker) -> Self {
        (m.t_ns, m.label)
    }
}

/// A finished measurement session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyTrace {
    pub domains: Vec<PowerDomain>,
    /// Wraparound modulus per domain, in microjoules.
    pub counter_max_uj: BTreeMap<PowerDomain, u64>,
    /// Time-ordered samples; domains sampled in one poll share a timestamp.
    pub samples: Vec<EnergySample>,
    /// Time-ordered markers.
    pub markers: Vec<Marker>,
    /// True when the sampler failed mid-run; queries may cover a shorter
    /// range than the body.
    #[serde(default)]
    pub partial: bool,
}

impl EnergyTrace {
    /// Samples of one domain, in time order.
    fn domain_samples(&self, domain: PowerDomain) -> impl Iterator<Item = &EnergySample> {
        self.samples.iter().filter(move |s| s.domain == domain)
    }

    /// Wrap-corrected cumulative series for one domain: raw counter deltas
    /// that come out negative get one modulus added per crossing.
    fn unwrapped(&self, domain: PowerDomain) -> Result<Vec<(u64, u64)>, MeterError> {
        if !self.domains.contains(&domain) {
            return Err(MeterError::UnknownDomain(domain));
        }
        let max = self.counter_max_uj.get(&domain).copied().unwrap_or(u64::MAX);
        let mut out: Vec<(u64, u64)> = Vec::new();
        let mut offset: u64 = 0;
        let mut prev_raw: Option<u64> = None;
        for s in self.domain_samples(domain) {
            if let Some(prev) = prev_raw {
                if s.cumulative_uj < prev {
                    offset += max;
                }
            }
            prev_raw = Some(s.cumulative_uj);
            debug_assert!(out.last().map_or(true, |(t, _)| *t < s.t_ns));
            out.push((s.t_ns, s.cumulative_uj + offset));
        }
        if out.is_empty() {
            return Err(MeterError::NoSamples(domain));
        }
        Ok(out)
    }

    /// Number of counter wraps observed for one domain.
    pub fn wraps(&self, domain: PowerDomain) -> usize {
        let mut wraps = 0;
        let mut prev: Option<u64> = None;
        for s in self.domain_samples(domain) {
            if let Some(p) = prev {
                if s.cumulative_uj < p {
                    wraps += 1;
                }
            }
            prev = Some(s.cumulative_uj);
        }
        wraps
    }

    /// Unwrapped cumulative energy at `t_ns`, linearly interpolated between
    /// the bracketing samples (equivalent to piecewise-constant power).
    fn cumulative_uj_at(&self, domain: PowerDomain, t_ns: u64) -> Result<f64, MeterError> {
        let series = self.unwrapped(domain)?;
        let (first, last) = (series[0].0, series[series.len() - 1].0);
        if t_ns < first || t_ns > last {
            return Err(MeterError::OutOfRange { t_ns, first_ns: first, last_ns: last });
        }
        let pos = series.partition_point(|(t, _)| *t <= t_ns);
        // `pos >= 1` because t_ns >= first.
        let (t0, e0) = series[pos - 1];
        if t0 == t_ns || pos == series.len() {
            return Ok(e0 as f64);
        }
        let (t1, e1) = series[pos];
        let frac = (t_ns - t0) as f64 / (t1 - t0) as f64;
        Ok(e0 as f64 + (e1 as f64 - e0 as f64) * frac)
    }

    /// Energy in joules spent by one domain over `[t0_ns, t1_ns]`.
    pub fn interval_energy(
        &self,
        t0_ns: u64,
        t1_ns: u64,
        domain: PowerDomain,
    ) -> Result<f64, MeterError> {
        if t0_ns >= t1_ns {
            return Err(MeterError::BadInterval { t0_ns, t1_ns });
        }
        let e0 = self.cumulative_uj_at(domain, t0_ns)?;
        let e1 = self.cumulative_uj_at(domain, t1_ns)?;
        Ok((e1 - e0) * 1e-6)
    }

    /// Energy in joules summed over every domain in the trace.
    pub fn interval_energy_total(&self, t0_ns: u64, t1_ns: u64) -> Result<f64, MeterError> {
        let mut total = 0.0;
        for &d in &self.domains {
            total += self.interval_energy(t0_ns, t1_ns, d)?;
        }
        Ok(total)
    }

    /// Average power in watts of one domain over `[t0_ns, t1_ns]`.
    pub fn average_power(
        &self,
        t0_ns: u64,
        t1_ns: u64,
        domain: PowerDomain,
    ) -> Result<f64, MeterError> {
        let e = self.interval_energy(t0_ns, t1_ns, domain)?;
        Ok(e / ((t1_ns - t0_ns) as f64 * 1e-9))
    }

    /// Average power in watts summed over every domain in the trace.
    pub fn average_power_total(&self, t0_ns: u64, t1_ns: u64) -> Result<f64, MeterError> {
        let e = self.interval_energy_total(t0_ns, t1_ns)?;
        Ok(e / ((t1_ns - t0_ns) as f64 * 1e-9))
    }

    /// Sampled time range (first and last sample timestamps).
    pub fn time_range(&self) -> Option<(u64, u64)> {
        match (self.samples.first(), self.samples.last()) {
            (Some(a), Some(b)) => Some((a.t_ns, b.t_ns)),
            _ => None,
        }
    }

    /// Pair up the n-th `start`-labeled marker with the n-th `stop`-labeled
    /// one, in stream order.
    pub fn spans(&self, start: &str, stop: &str) -> Vec<(u64, u64)> {
        let mut starts = std::collections::VecDeque::new();
        let mut spans = Vec::new();
        for m in &self.markers {
            if m.label == start {
                starts.push_back(m.t_ns);
            } else if m.label == stop {
                if let Some(t0) = starts.pop_front() {
                    spans.push((t0, m.t_ns));
                }
            }
        }
        spans
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("trace serialization cannot fail")
    }

    pub fn from_json(s: &str) -> Result<Self, MeterError> {
        serde_json::from_str(s).map_err(|e| MeterError::Parse {
            path: "<trace json>".into(),
            detail: e.to_string(),
        })
    }
}
