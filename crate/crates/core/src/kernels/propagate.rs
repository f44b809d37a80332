//! Pull-scheme streaming: `nxt[s][p] = prv[s - c_p][p]` with periodic wrap.
//!
//! The optimized path walks each layout in its natural storage order and
//! turns lane-coherent moves into straight block copies; sources that fall
//! outside the interior come from the halo ring, which the caller must have
//! refreshed. Since propagate only moves values, every path — reference or
//! optimized, any layout, any worker count — produces bitwise-identical
//! logical output.

use super::{check_compatible, for_each_row_chunk, RawStorage, WorkerPlan};
use crate::error::CoreError;
use crate::field::PopulationField;
use crate::geometry::SiteCoord;
use crate::layout::LayoutKind;
use crate::velocity::VelocitySet;

fn validate(
    prv: &PopulationField,
    nxt: &PopulationField,
    set: &VelocitySet,
) -> Result<(), CoreError> {
    check_compatible(prv, nxt)?;
    if set.q != prv.q() {
        return Err(CoreError::QMismatch { set_q: set.q, field_q: prv.q() });
    }
    let reach = set.max_component();
    if !prv.geometry().halo_covers(reach) {
        return Err(CoreError::HaloTooSmall { halo: prv.geometry().halo, required: reach });
    }
    Ok(())
}

/// Layout-aware threaded propagate. Precondition: `prv`'s halo ring is
/// fresh (see [`super::halo_exchange`]); `prv` is left unmodified.
pub fn propagate(
    prv: &PopulationField,
    nxt: &mut PopulationField,
    set: &VelocitySet,
    plan: &WorkerPlan,
) -> Result<(), CoreError> {
    validate(prv, nxt, set)?;
    debug_assert!(prv.halo_fresh(), "propagate needs a halo exchange first");

    let dst = RawStorage::of(nxt);
    let nx = prv.geometry().nx;
    match prv.layout() {
        LayoutKind::Aos => {
            for_each_row_chunk(plan, nx, |_, rows| propagate_aos(prv, &dst, set, rows));
        }
        LayoutKind::Soa => {
            for_each_row_chunk(plan, nx, |_, rows| propagate_soa(prv, &dst, set, rows));
        }
        LayoutKind::CSoa { vl } => {
            for_each_row_chunk(plan, nx, |_, rows| {
                propagate_clustered(prv, &dst, set, rows, vl, false);
            });
        }
        LayoutKind::CAosoa { vl } => {
            for_each_row_chunk(plan, nx, |_, rows| {
                propagate_clustered(prv, &dst, set, rows, vl, true);
            });
        }
    }
    nxt.mark_halo_stale();
    Ok(())
}

fn propagate_aos(
    prv: &PopulationField,
    dst: &RawStorage,
    set: &VelocitySet,
    rows: std::ops::Range<usize>,
) {
    let ix = prv.indexer();
    let ny = prv.geometry().ny;
    for x in rows {
        for y in 0..ny {
            let dbase = ix.address_xy(x, y, 0);
            for (p, c) in set.vectors.iter().enumerate() {
                let v = prv.read_extended(x as i64 - c[0] as i64, y as i64 - c[1] as i64, p);
                // Safety: this worker owns rows `rows`; addresses are
                // bijective per (site, pop).
                unsafe { dst.write(dbase + p, v) };
            }
        }
    }
}

fn propagate_soa(
    prv: &PopulationField,
    dst: &RawStorage,
    set: &VelocitySet,
    rows: std::ops::Range<usize>,
) {
    let ix = prv.indexer();
    let (nx, ny) = (prv.geometry().nx, prv.geometry().ny);
    let src = prv.as_slice();
    for (p, c) in set.vectors.iter().enumerate() {
        let (cx, cy) = (c[0] as i64, c[1] as i64);
        for x in rows.clone() {
            let sx = x as i64 - cx;
            let dcol = ix.address_xy(x, 0, p);
            if sx >= 0 && (sx as usize) < nx {
                // Interior source column: bulk copy the unwrapped span,
                // patch the wrapped edges from the halo ring. On lattices
                // shorter than the stencil reach the span is empty and
                // every row goes through the ring.
                let y0 = (cy.max(0) as usize).min(ny);
                let y1 = ((ny as i64 + cy.min(0)).max(y0 as i64)) as usize;
                for y in 0..y0 {
                    let v = prv.read_extended(sx, y as i64 - cy, p);
                    unsafe { dst.write(dcol + y, v) };
                }
                if y1 > y0 {
                    let scol = ix.address_xy(sx as usize, (y0 as i64 - cy) as usize, p);
                    unsafe { dst.copy_from(src, scol, dcol + y0, y1 - y0) };
                }
                for y in y1..ny {
                    let v = prv.read_extended(sx, y as i64 - cy, p);
                    unsafe { dst.write(dcol + y, v) };
                }
            } else {
                for y in 0..ny {
                    let v = prv.read_extended(sx, y as i64 - cy, p);
                    unsafe { dst.write(dcol + y, v) };
                }
            }
        }
    }
}

/// CSoA / CAoSoA: per cluster, a lane-stable move is one vl-wide copy; lane
/// edges and halo sources go through scalar reads. The block copy is only
/// taken on unpadded geometries, where a full lane run is guaranteed to be
/// logical content.
fn propagate_clustered(
    prv: &PopulationField,
    dst: &RawStorage,
    set: &VelocitySet,
    rows: std::ops::Range<usize>,
    vl: usize,
    pops_inner: bool,
) {
    let ix = prv.indexer();
    let (nx, ny) = (prv.geometry().nx, prv.geometry().ny);
    let h = ix.lane_stride();
    let no_pad = ix.ny_padded() == ny;

    let per_cluster = |x: usize, r: usize, p: usize, c: &[i32; 2]| {
        let (cx, cy) = (c[0] as i64, c[1] as i64);
        let dbase = ix.address_xy(x, r, p);
        let sx = x as i64 - cx;
        let sr = r as i64 - cy;
        if no_pad && sx >= 0 && (sx as usize) < nx && sr >= 0 && (sr as usize) < h {
            let sbase = ix.address_xy(sx as usize, sr as usize, p);
            unsafe { dst.copy_from(prv.as_slice(), sbase, dbase, vl) };
        } else {
            for l in 0..vl {
                let y = r + l * h;
                if y >= ny {
                    break; // padded lane slots hold no logical content
                }
                let v = prv.read_extended(sx, y as i64 - cy, p);
                unsafe { dst.write(dbase + l, v) };
            }
        }
    };

    if pops_inner {
        // CAoSoA order: cluster outer, populations adjacent inside it.
        for x in rows {
            for r in 0..h {
                for (p, c) in set.vectors.iter().enumerate() {
                    per_cluster(x, r, p, c);
                }
            }
        }
    } else {
        // CSoA order: one population plane at a time.
        for (p, c) in set.vectors.iter().enumerate() {
            for x in rows.clone() {
                for r in 0..h {
                    per_cluster(x, r, p, c);
                }
            }
        }
    }
}

/// Scalar reference: logical reads with index wrapping, no halo, no
/// threads. This is the oracle every optimized path is compared against.
pub fn propagate_reference(
    prv: &PopulationField,
    nxt: &mut PopulationField,
    set: &VelocitySet,
) -> Result<(), CoreError> {
    validate(prv, nxt, set)?;
    let (nx, ny) = (prv.geometry().nx as i64, prv.geometry().ny as i64);
    for x in 0..prv.geometry().nx {
        for y in 0..prv.geometry().ny {
            for (p, c) in set.vectors.iter().enumerate() {
                let sx = (x as i64 - c[0] as i64).rem_euclid(nx) as usize;
                let sy = (y as i64 - c[1] as i64).rem_euclid(ny) as usize;
                let v = prv.read(SiteCoord::new(sx, sy), p);
                nxt.write(SiteCoord::new(x, y), p, v);
            }
        }
    }
    Ok(())
}
