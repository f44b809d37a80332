//! The two collision operators.
//!
//! BGK relaxes each site toward the standard second-order equilibrium; it
//! needs a weighted (physics-mode) velocity set. The surrogate replaces
//! every population value by a fixed polynomial of itself — no physics, but
//! a tunable, bit-exactly checkable compute load for any Q.

use super::{for_each_row_chunk, BgkParams, RawStorage, SurrogateParams, WorkerPlan};
use crate::error::CoreError;
use crate::field::PopulationField;
use crate::geometry::SiteCoord;
use crate::layout::LayoutKind;
use crate::velocity::VelocitySet;

/// Degree-F Horner evaluation: exactly F multiply-add pairs.
/// Both the optimized and the reference paths use this exact operation
/// order, which is what makes their outputs bitwise-comparable.
#[inline]
fn horner(coeffs: &[f64], f: f64) -> f64 {
    let mut acc = coeffs[0];
    for &c in &coeffs[1..] {
        acc = acc * f + c;
    }
    acc
}

/// In-place BGK collision, threaded by lattice rows.
///
/// Per site, in fixed order: moments, equilibrium, relaxation
/// `f <- f - (f - f_eq)/tau`. The arithmetic never depends on the layout,
/// so all layouts produce bitwise-identical logical fields.
pub fn collide_bgk(
    field: &mut PopulationField,
    set: &VelocitySet,
    params: BgkParams,
    plan: &WorkerPlan,
) -> Result<(), CoreError> {
    if set.q != field.q() {
        return Err(CoreError::QMismatch { set_q: set.q, field_q: field.q() });
    }
    let weights = set.weights.as_ref().ok_or(CoreError::MissingWeights)?.clone();
    let cs2 = set.speed_of_sound_sq.ok_or(CoreError::MissingWeights)?;
    let cs4 = cs2 * cs2;
    let inv_tau = 1.0 / params.tau;
    let q = field.q();
    let (nx, ny) = (field.geometry().nx, field.geometry().ny);
    let ix = field.indexer().clone();
    let vectors = set.vectors.clone();

    let dst = RawStorage::of(field);
    for_each_row_chunk(plan, nx, |_, rows| {
        let mut f = vec![0.0f64; q];
        for x in rows {
            for y in 0..ny {
                // Safety: this worker exclusively owns sites in its rows.
                unsafe {
                    for (p, slot) in f.iter_mut().enumerate() {
                        *slot = dst.read(ix.address_xy(x, y, p));
                    }
                }
                let mut rho = 0.0;
                let mut mx = 0.0;
                let mut my = 0.0;
                for (p, c) in vectors.iter().enumerate() {
                    rho += f[p];
                    mx += c[0] as f64 * f[p];
                    my += c[1] as f64 * f[p];
                }
                let (ux, uy) = if rho != 0.0 { (mx / rho, my / rho) } else { (0.0, 0.0) };
                let usq = ux * ux + uy * uy;
                for (p, c) in vectors.iter().enumerate() {
                    let cu = c[0] as f64 * ux + c[1] as f64 * uy;
                    let feq = weights[p]
                        * rho
                        * (1.0 + cu / cs2 + (cu * cu) / (2.0 * cs4) - usq / (2.0 * cs2));
                    let fnew = f[p] - (f[p] - feq) * inv_tau;
                    unsafe { dst.write(ix.address_xy(x, y, p), fnew) };
                }
            }
        }
    });
    field.mark_halo_stale();
    Ok(())
}

/// Independent scalar BGK: logical reads/writes, equilibrium computed in a
/// factored form. Agrees with [`collide_bgk`] to rounding, not bitwise.
pub fn collide_bgk_reference(
    field: &mut PopulationField,
    set: &VelocitySet,
    params: BgkParams,
) -> Result<(), CoreError> {
    if set.q != field.q() {
        return Err(CoreError::QMismatch { set_q: set.q, field_q: field.q() });
    }
    let weights = set.weights.as_ref().ok_or(CoreError::MissingWeights)?;
    let cs2 = set.speed_of_sound_sq.ok_or(CoreError::MissingWeights)?;
    let (nx, ny) = (field.geometry().nx, field.geometry().ny);
    for x in 0..nx {
        for y in 0..ny {
            let site = SiteCoord::new(x, y);
            let (rho, mom) = field.moments(set, site)?;
            let (ux, uy) = if rho != 0.0 { (mom[0] / rho, mom[1] / rho) } else { (0.0, 0.0) };
            let usq = ux * ux + uy * uy;
            for (p, c) in set.vectors.iter().enumerate() {
                let a = (c[0] as f64 * ux + c[1] as f64 * uy) / cs2;
                let feq = weights[p] * rho * (1.0 + a + 0.5 * a * a - usq / (2.0 * cs2));
                let f = field.read(site, p);
                field.write(site, p, f - (f - feq) / params.tau);
            }
        }
    }
    Ok(())
}

/// In-place surrogate collision, threaded by lattice rows.
///
/// Every logical value f becomes `poly(f)` via [`horner`]. Storage is
/// walked in layout order as contiguous per-row runs; padded slots get the
/// same treatment, which is harmless since they carry no logical content.
pub fn collide_surrogate(field: &mut PopulationField, params: &SurrogateParams, plan: &WorkerPlan) {
    let coeffs = params.coeffs().to_vec();
    let q = field.q();
    let nx = field.geometry().nx;
    let ny_padded = field.indexer().ny_padded();
    let kind = field.layout();

    let dst = RawStorage::of(field);
    let apply = |range: std::ops::Range<usize>| {
        for idx in range {
            // Safety: ranges of distinct workers never overlap.
            unsafe { dst.write(idx, horner(&coeffs, dst.read(idx))) };
        }
    };
    for_each_row_chunk(plan, nx, |_, rows| {
        if rows.is_empty() {
            return;
        }
        match kind {
            // Row chunks are contiguous storage blocks in these layouts.
            LayoutKind::Aos | LayoutKind::CAosoa { .. } => {
                apply(rows.start * ny_padded * q..rows.end * ny_padded * q);
            }
            // One contiguous run per population plane.
            LayoutKind::Soa | LayoutKind::CSoa { .. } => {
                let plane = nx * ny_padded;
                for p in 0..q {
                    apply(p * plane + rows.start * ny_padded..p * plane + rows.end * ny_padded);
                }
            }
        }
    });
    field.mark_halo_stale();
}

/// Scalar surrogate oracle: canonical (site-major, pop-minor) walk over
/// logical values with the same Horner order, hence bitwise-equal results.
pub fn collide_surrogate_reference(field: &mut PopulationField, params: &SurrogateParams) {
    let (nx, ny) = (field.geometry().nx, field.geometry().ny);
    for x in 0..nx {
        for y in 0..ny {
            let site = SiteCoord::new(x, y);
            for p in 0..field.q() {
                let f = field.read(site, p);
                field.write(site, p, horner(params.coeffs(), f));
            }
        }
    }
}
