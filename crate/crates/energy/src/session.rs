//! Measurement sessions: a sampler thread polls the backend at a fixed
//! period while the measured body runs on the calling thread and places
//! markers; the result is an immutable [`EnergyTrace`].
//!
//! Timestamps are normalized to the first sample, so every marker and every
//! query time lives on one session timeline. The sampler takes one sample
//! before the body starts and one after it finishes, so the trace always
//! brackets the measured work.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{mpsc, Mutex};
use std::time::{Duration, Instant};

use crate::backend::{EnergyBackend, PollReading};
use crate::error::MeterError;
use crate::trace::{EnergySample, EnergyTrace, Marker};

/// Marker insertion handle passed to the measured body.
pub struct SessionHandle<'a> {
    marks: &'a Mutex<Vec<(Instant, String)>>,
}

impl SessionHandle<'_> {
    pub fn mark(&self, label: impl Into<String>) {
        self.marks
            .lock()
            .expect("marker queue poisoned")
            .push((Instant::now(), label.into()));
    }
}

/// Maximum nap between stop-flag checks; keeps session teardown prompt
/// without waking much more often than the sampling period.
const STOP_CHECK_NAP: Duration = Duration::from_millis(10);

/// Sample all domains of `backend` every `period_ms` while `body` runs.
pub fn session_record<R>(
    backend: &mut dyn EnergyBackend,
    period_ms: f64,
    body: impl FnOnce(&SessionHandle) -> R,
) -> Result<(EnergyTrace, R), MeterError> {
    if !(1.0..=1000.0).contains(&period_ms) {
        return Err(MeterError::InvalidPeriod(period_ms));
    }
    let period = Duration::from_secs_f64(period_ms * 1e-3);
    let domains = backend.domains();
    let counter_max_uj: BTreeMap<_, _> =
        domains.iter().map(|&d| (d, backend.counter_max_uj(d))).collect();

    let stop = AtomicBool::new(false);
    let marks: Mutex<Vec<(Instant, String)>> = Mutex::new(Vec::new());
    let (ready_tx, ready_rx) = mpsc::channel::<bool>();

    let (readings, failure, body_out) = std::thread::scope(|scope| {
        let stop = &stop;
        let sampler = scope.spawn(move || {
            let mut readings: Vec<PollReading> = Vec::new();
            let first = match backend.poll() {
                Ok(r) => r,
                Err(e) => {
                    ready_tx.send(false).ok();
                    return (readings, Some(e));
                }
            };
            let mut next = first.t + period;
            readings.push(first);
            ready_tx.send(true).ok();

            while !stop.load(Ordering::Acquire) {
                let now = Instant::now();
                if now < next {
                    std::thread::sleep((next - now).min(STOP_CHECK_NAP));
                    continue;
                }
                match backend.poll() {
                    Ok(r) => readings.push(r),
                    Err(e) => return (readings, Some(e)),
                }
                next += period;
            }
            // Final sample bracketing the body.
            match backend.poll() {
                Ok(r) => readings.push(r),
                Err(e) => return (readings, Some(e)),
            }
            (readings, None)
        });

        let started = ready_rx.recv().unwrap_or(false);
        let body_out = started.then(|| body(&SessionHandle { marks: &marks }));
        stop.store(true, Ordering::Release);
        let (readings, failure) = sampler.join().expect("sampler thread panicked");
        (readings, failure, body_out)
    });

    let Some(body_out) = body_out else {
        return Err(failure.unwrap_or_else(|| {
            MeterError::Unavailable("backend failed before the first sample".into())
        }));
    };

    let epoch = readings[0].t;
    let mut samples = Vec::new();
    let mut last_t: BTreeMap<_, u64> = BTreeMap::new();
    for reading in &readings {
        let t_ns = reading.t.duration_since(epoch).as_nanos() as u64;
        for &(domain, uj) in &reading.values_uj {
            // Keep per-domain timestamps strictly increasing even if two
            // polls land in the same clock tick.
            if last_t.get(&domain).is_some_and(|&t| t >= t_ns) {
                continue;
            }
            last_t.insert(domain, t_ns);
            samples.push(EnergySample { t_ns, domain, cumulative_uj: uj });
        }
    }

    let markers = marks
        .into_inner()
        .expect("marker queue poisoned")
        .into_iter()
        .map(|(t, label)| Marker { t_ns: t.saturating_duration_since(epoch).as_nanos() as u64, label })
        .collect();

    let trace = EnergyTrace {
        domains,
        counter_max_uj,
        samples,
        markers,
        partial: failure.is_some(),
    };
    Ok((trace, body_out))
}
