//! The two benchmark kernels.
//!
//! `propagate` pulls every population from its upstream site (gather
//! scheme); it moves data and computes nothing, so all layout paths are
//! bitwise-comparable. `collide` comes in two flavors: a physics BGK
//! operator for weighted sets (D2Q9) and a compute-bound surrogate — a
//! fixed-order Horner polynomial applied per population — that is
//! verifiable bitwise for any Q.
//!
//! Every kernel has a scalar reference path (`*_reference`) that walks
//! logical coordinates with index wrapping and no halo, and a layout-aware
//! threaded path. The per-site arithmetic order is fixed and identical in
//! all layout paths, so for a given input the logical output is
//! bitwise-identical across layouts and across worker counts.

mod collide;
mod propagate;

pub use collide::{collide_bgk, collide_bgk_reference, collide_surrogate, collide_surrogate_reference};
pub use propagate::{propagate, propagate_reference};

use std::ops::Range;
use std::sync::Arc;

use crate::error::CoreError;
use crate::field::PopulationField;
use crate::velocity::VelocitySet;

/// How a kernel call distributes its work.
///
/// Kernels spawn exactly `threads` workers per call (the worker count is a
/// swept experimental variable, so it is honored literally, even if some
/// workers end up with an empty range). Each worker owns a contiguous range
/// of lattice rows; workers write disjoint storage regions and join before
/// the call returns. An optional pin callback runs on each worker before it
/// touches data.
#[derive(Clone)]
pub struct WorkerPlan {
    threads: usize,
    pin: Option<Arc<dyn Fn(usize) + Send + Sync>>,
}

impl WorkerPlan {
    /// Single worker on the calling thread.
    pub fn serial() -> Self {
        Self { threads: 1, pin: None }
    }

    pub fn new(threads: usize) -> Result<Self, CoreError> {
        if threads == 0 {
            return Err(CoreError::InvalidParam("worker count must be at least 1".into()));
        }
        Ok(Self { threads, pin: None })
    }

    /// Worker `i` runs `pin(i)` right after spawning (affinity hooks).
    pub fn with_pin(threads: usize, pin: Arc<dyn Fn(usize) + Send + Sync>) -> Result<Self, CoreError> {
        let mut plan = Self::new(threads)?;
        plan.pin = Some(pin);
        Ok(plan)
    }

    pub fn threads(&self) -> usize {
        self.threads
    }
}

impl std::fmt::Debug for WorkerPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("WorkerPlan")
            .field("threads", &self.threads)
            .field("pinned", &self.pin.is_some())
            .finish()
    }
}

/// Contiguous row range of worker `i` out of `threads` over `nx` rows.
fn chunk_range(nx: usize, threads: usize, i: usize) -> Range<usize> {
    let base = nx / threads;
    let rem = nx % threads;
    let start = i * base + i.min(rem);
    let len = base + usize::from(i < rem);
    start..(start + len).min(nx)
}

/// Run `body(worker, rows)` on exactly `plan.threads` workers and join.
pub(crate) fn for_each_row_chunk<F>(plan: &WorkerPlan, nx: usize, body: F)
where
    F: Fn(usize, Range<usize>) + Sync,
{
    if plan.threads == 1 && plan.pin.is_none() {
        body(0, 0..nx);
        return;
    }
    std::thread::scope(|scope| {
        for i in 0..plan.threads {
            let range = chunk_range(nx, plan.threads, i);
            let body = &body;
            let pin = plan.pin.clone();
            scope.spawn(move || {
                if let Some(pin) = &pin {
                    pin(i);
                }
                body(i, range);
            });
        }
    });
}

/// Shared-writable view of one field's storage for partitioned kernels.
///
/// Safety contract: every worker writes only addresses derived from its own
/// row range; the layout address map is a bijection, so disjoint site sets
/// produce disjoint address sets.
pub(crate) struct RawStorage {
    ptr: *mut f64,
    len: usize,
}

unsafe impl Send for RawStorage {}
unsafe impl Sync for RawStorage {}

impl RawStorage {
    pub(crate) fn of(field: &mut PopulationField) -> Self {
        let len = field.as_slice().len();
        Self { ptr: field.storage_ptr(), len }
    }

    /// # Safety
    /// `idx < len` and no other worker touches `idx` during this call.
    #[inline]
    pub(crate) unsafe fn write(&self, idx: usize, v: f64) {
        debug_assert!(idx < self.len);
        unsafe { *self.ptr.add(idx) = v }
    }

    /// # Safety
    /// `idx < len` and no other worker writes `idx` during this call.
    #[inline]
    pub(crate) unsafe fn read(&self, idx: usize) -> f64 {
        debug_assert!(idx < self.len);
        unsafe { *self.ptr.add(idx) }
    }

    /// Copy `n` elements out of a shared slice into `dst_off..dst_off+n`.
    ///
    /// # Safety
    /// Destination range in bounds and owned by the calling worker.
    #[inline]
    pub(crate) unsafe fn copy_from(&self, src: &[f64], src_off: usize, dst_off: usize, n: usize) {
        debug_assert!(src_off + n <= src.len());
        debug_assert!(dst_off + n <= self.len);
        unsafe {
            std::ptr::copy_nonoverlapping(src.as_ptr().add(src_off), self.ptr.add(dst_off), n);
        }
    }
}

/// BGK relaxation parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BgkParams {
    /// Relaxation time in lattice units; linear stability needs `tau > 0.5`.
    pub tau: f64,
}

impl BgkParams {
    pub fn new(tau: f64) -> Result<Self, CoreError> {
        if !tau.is_finite() || tau <= 0.5 {
            return Err(CoreError::InvalidParam(format!("bgk tau must exceed 0.5, got {tau}")));
        }
        Ok(Self { tau })
    }
}

/// Coefficients of the compute-bound surrogate collision.
///
/// Each population value is replaced by a degree-F polynomial of itself,
/// evaluated by Horner's rule: exactly F multiply-add pairs per population.
/// Seeded coefficients are drawn in `[-1/(F+1), 1/(F+1)]`, which makes the
/// polynomial map `[-1, 1]` into itself, so iterated steps stay bounded.
#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateParams {
    coeffs: Vec<f64>,
}

impl SurrogateParams {
    /// Derive `fma_per_pop + 1` coefficients from a seed.
    pub fn from_seed(fma_per_pop: usize, seed: u64) -> Result<Self, CoreError> {
        if fma_per_pop == 0 {
            return Err(CoreError::InvalidParam("surrogate needs at least 1 fma per pop".into()));
        }
        let mut rng = crate::rng::SplitMix64::new(seed);
        let scale = 1.0 / (fma_per_pop as f64 + 1.0);
        let coeffs = (0..=fma_per_pop).map(|_| (2.0 * rng.next_f64() - 1.0) * scale).collect();
        Ok(Self { coeffs })
    }

    /// Explicit coefficients; degree is `coeffs.len() - 1`.
    pub fn from_coeffs(coeffs: Vec<f64>) -> Result<Self, CoreError> {
        if coeffs.len() < 2 {
            return Err(CoreError::InvalidParam("surrogate needs at least 2 coefficients".into()));
        }
        if coeffs.iter().any(|c| !c.is_finite() || c.abs() > 1.0) {
            return Err(CoreError::InvalidParam("surrogate coefficients must be in [-1, 1]".into()));
        }
        Ok(Self { coeffs })
    }

    /// Multiply-add pairs per population value.
    pub fn fma_per_pop(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }
}

/// Collision selector for a full step.
#[derive(Debug, Clone, PartialEq)]
pub enum CollideMode {
    None,
    Bgk(BgkParams),
    Surrogate(SurrogateParams),
}

/// Double buffer for the propagate/collide sequence.
///
/// `front` holds the current state; `step` writes into `back` and swaps, so
/// the two fields never alias and the freshest data is always in `front`.
#[derive(Debug, Clone)]
pub struct StepBuffers {
    front: PopulationField,
    back: PopulationField,
}

impl StepBuffers {
    pub fn new(front: PopulationField, back: PopulationField) -> Result<Self, CoreError> {
        check_compatible(&front, &back)?;
        Ok(Self { front, back })
    }

    pub fn front(&self) -> &PopulationField {
        &self.front
    }

    pub fn front_mut(&mut self) -> &mut PopulationField {
        &mut self.front
    }

    /// Split borrow for propagate: read side, write side.
    pub fn split(&mut self) -> (&PopulationField, &mut PopulationField) {
        (&self.front, &mut self.back)
    }

    pub fn swap(&mut self) {
        std::mem::swap(&mut self.front, &mut self.back);
    }
}

pub(crate) fn check_compatible(a: &PopulationField, b: &PopulationField) -> Result<(), CoreError> {
    if a.geometry() != b.geometry() {
        return Err(CoreError::FieldMismatch("geometries differ".into()));
    }
    if a.q() != b.q() {
        return Err(CoreError::FieldMismatch("population counts differ".into()));
    }
    if a.layout() != b.layout() {
        return Err(CoreError::FieldMismatch(format!(
            "layouts differ: {} vs {}",
            a.layout(),
            b.layout()
        )));
    }
    Ok(())
}

/// Copy periodic images of the interior into the halo ring.
///
/// Must run before `propagate` whenever the field content changed; `step`
/// does this automatically.
pub fn halo_exchange(field: &mut PopulationField) {
    field.refresh_halo();
}

/// One full time step: halo exchange, propagate front -> back, collide in
/// place on back, then swap roles.
pub fn step(
    buffers: &mut StepBuffers,
    set: &VelocitySet,
    mode: &CollideMode,
    plan: &WorkerPlan,
) -> Result<(), CoreError> {
    buffers.front.refresh_halo();
    {
        let (front, back) = (&buffers.front, &mut buffers.back);
        propagate(front, back, set, plan)?;
    }
    match mode {
        CollideMode::None => {}
        CollideMode::Bgk(params) => collide_bgk(&mut buffers.back, set, *params, plan)?,
        CollideMode::Surrogate(params) => collide_surrogate(&mut buffers.back, params, plan),
    }
    buffers.swap();
    Ok(())
}

/// Scalar reference step: wrapping reference kernels, no halo, no threads.
pub fn step_reference(
    buffers: &mut StepBuffers,
    set: &VelocitySet,
    mode: &CollideMode,
) -> Result<(), CoreError> {
    {
        let (front, back) = (&buffers.front, &mut buffers.back);
        propagate_reference(front, back, set)?;
    }
    match mode {
        CollideMode::None => {}
        CollideMode::Bgk(params) => collide_bgk_reference(&mut buffers.back, set, *params)?,
        CollideMode::Surrogate(params) => collide_surrogate_reference(&mut buffers.back, params),
    }
    buffers.swap();
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chunks_cover_rows_exactly_once() {
        for nx in [1usize, 2, 7, 16, 64] {
            for threads in [1usize, 2, 3, 4, 9, 70] {
                let mut seen = vec![0u32; nx];
                for i in 0..threads {
                    for x in chunk_range(nx, threads, i) {
                        seen[x] += 1;
                    }
                }
                assert!(seen.iter().all(|&n| n == 1), "nx={nx} threads={threads}");
            }
        }
    }

    #[test]
    fn surrogate_params_validation() {
        assert!(SurrogateParams::from_seed(0, 1).is_err());
        let p = SurrogateParams::from_seed(64, 1).unwrap();
        assert_eq!(p.fma_per_pop(), 64);
        let bound = 1.0 / 65.0;
        assert!(p.coeffs().iter().all(|c| c.abs() <= bound));

        assert!(SurrogateParams::from_coeffs(vec![1.0]).is_err());
        assert!(SurrogateParams::from_coeffs(vec![1.5, 0.0]).is_err());
        assert!(SurrogateParams::from_coeffs(vec![1.0, 0.0]).is_ok());
    }

    #[test]
    fn bgk_params_validation() {
        assert!(BgkParams::new(0.5).is_err());
        assert!(BgkParams::new(f64::NAN).is_err());
        assert!(BgkParams::new(0.8).is_ok());
    }
}
