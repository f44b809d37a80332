//! Population fields: Q reals per lattice site stored under a chosen layout.
//!
//! The layout indexer addresses the interior only. Halo cells — periodic
//! images needed by the propagate stencil — live in a separate ring buffer
//! with a fixed layout-independent indexing, refreshed by
//! [`crate::kernels::halo_exchange`] before each propagate.

use serde::{Deserialize, Serialize};

use crate::error::CoreError;
use crate::geometry::{LatticeGeometry, SiteCoord};
use crate::layout::{LayoutIndexer, LayoutKind};
use crate::rng::SplitMix64;
use crate::velocity::VelocitySet;

/// Initialization patterns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FieldPattern {
    /// Every logical value set to the constant.
    Uniform(f64),
    /// Exactly one `(site, pop)` set to `value`, everything else zero.
    Impulse { x: usize, y: usize, pop: usize, value: f64 },
    /// Reproducible pseudo-random values in `[0, 1)`, drawn in canonical
    /// (site-major, pop-minor) order so the logical content does not depend
    /// on the layout.
    RandomSeeded(u64),
}

/// Frame of periodic-image cells around the interior.
///
/// The ring is stored site-major (bottom strip, top strip, left strip,
/// right strip), populations contiguous per cell. Its layout is the same
/// for every field layout; it is a staging area, not a measured data
/// structure.
#[derive(Debug, Clone, PartialEq)]
struct HaloRing {
    nx: usize,
    ny: usize,
    halo: usize,
    q: usize,
    data: Vec<f64>,
}

impl HaloRing {
    fn new(geo: &LatticeGeometry, q: usize) -> Self {
        let h = geo.halo;
        let sites = 2 * h * (geo.nx + 2 * h) + 2 * h * geo.ny;
        Self { nx: geo.nx, ny: geo.ny, halo: h, q, data: vec![0.0; sites * q] }
    }

    /// Ring cell index for an extended coordinate outside the interior.
    #[inline]
    fn cell(&self, x: i64, y: i64) -> usize {
        let h = self.halo as i64;
        let (nx, ny) = (self.nx as i64, self.ny as i64);
        debug_assert!((-h..nx + h).contains(&x) && (-h..ny + h).contains(&y));
        debug_assert!(x < 0 || x >= nx || y < 0 || y >= ny, "interior coordinate in halo lookup");
        let wide = nx + 2 * h;
        if y < 0 {
            ((y + h) * wide + (x + h)) as usize
        } else if y >= ny {
            (h * wide + (y - ny) * wide + (x + h)) as usize
        } else if x < 0 {
            (2 * h * wide) as usize + ((x + h) * ny + y) as usize
        } else {
            (2 * h * wide) as usize + (h as usize * self.ny) + ((x - nx) * ny + y) as usize
        }
    }

    #[inline]
    fn get(&self, x: i64, y: i64, pop: usize) -> f64 {
        self.data[self.cell(x, y) * self.q + pop]
    }

    #[inline]
    fn set(&mut self, x: i64, y: i64, pop: usize, v: f64) {
        let idx = self.cell(x, y) * self.q + pop;
        self.data[idx] = v;
    }
}

/// Q real values per site under one of the four layouts.
#[derive(Debug, Clone)]
pub struct PopulationField {
    indexer: LayoutIndexer,
    storage: Vec<f64>,
    ring: HaloRing,
    halo_fresh: bool,
}

impl PopulationField {
    /// Allocate and initialize a field.
    pub fn init(
        geometry: LatticeGeometry,
        q: usize,
        layout: LayoutKind,
        pattern: &FieldPattern,
    ) -> Result<Self, CoreError> {
        let indexer = LayoutIndexer::new(layout, geometry, q)?;
        Self::from_indexer(indexer, pattern)
    }

    /// Allocate under a pre-built indexer (lets callers control padding).
    pub fn from_indexer(indexer: LayoutIndexer, pattern: &FieldPattern) -> Result<Self, CoreError> {
        let geometry = *indexer.geometry();
        let q = indexer.q();
        let storage = vec![0.0; indexer.capacity()];
        let ring = HaloRing::new(&geometry, q);
        let mut field = Self { indexer, storage, ring, halo_fresh: false };
        field.fill(pattern)?;
        Ok(field)
    }

    /// Overwrite the logical content with a pattern. Padding stays zero.
    pub fn fill(&mut self, pattern: &FieldPattern) -> Result<(), CoreError> {
        let geo = self.geometry();
        let q = self.q();
        match *pattern {
            FieldPattern::Uniform(v) => {
                self.for_each_logical_addr(|storage, addr| storage[addr] = v);
            }
            FieldPattern::Impulse { x, y, pop, value } => {
                let site = SiteCoord::in_geometry(x, y, &geo)?;
                let addr = self.indexer.try_address(site, pop)?;
                self.storage.fill(0.0);
                self.storage[addr] = value;
            }
            FieldPattern::RandomSeeded(seed) => {
                let mut rng = SplitMix64::new(seed);
                self.for_each_logical_addr(|storage, addr| storage[addr] = rng.next_f64());
            }
        }
        let _ = q;
        self.halo_fresh = false;
        Ok(())
    }

    /// Visit logical slots in canonical (site-major, pop-minor) order.
    fn for_each_logical_addr(&mut self, mut f: impl FnMut(&mut [f64], usize)) {
        let geo = *self.indexer.geometry();
        let q = self.indexer.q();
        for x in 0..geo.nx {
            for y in 0..geo.ny {
                for pop in 0..q {
                    let addr = self.indexer.address_xy(x, y, pop);
                    f(&mut self.storage, addr);
                }
            }
        }
    }

    pub fn geometry(&self) -> LatticeGeometry {
        *self.indexer.geometry()
    }

    pub fn q(&self) -> usize {
        self.indexer.q()
    }

    pub fn layout(&self) -> LayoutKind {
        self.indexer.kind()
    }

    pub fn indexer(&self) -> &LayoutIndexer {
        &self.indexer
    }

    /// Raw storage, including padding. Exposed for kernels and tests.
    pub fn as_slice(&self) -> &[f64] {
        &self.storage
    }

    pub(crate) fn storage_ptr(&mut self) -> *mut f64 {
        self.storage.as_mut_ptr()
    }

    /// Logical read. Panics on out-of-range coordinates.
    #[inline]
    pub fn read(&self, site: SiteCoord, pop: usize) -> f64 {
        let addr = self.indexer.try_address(site, pop).expect("read out of range");
        self.storage[addr]
    }

    /// Logical write. Panics on out-of-range coordinates. Invalidates the
    /// halo ring.
    #[inline]
    pub fn write(&mut self, site: SiteCoord, pop: usize, v: f64) {
        let addr = self.indexer.try_address(site, pop).expect("write out of range");
        self.storage[addr] = v;
        self.halo_fresh = false;
    }

    /// Read at extended coordinates: interior values directly, halo-range
    /// values from the ring (valid only after a halo exchange).
    #[inline]
    pub fn read_extended(&self, x: i64, y: i64, pop: usize) -> f64 {
        let geo = self.indexer.geometry();
        if x >= 0 && (x as usize) < geo.nx && y >= 0 && (y as usize) < geo.ny {
            self.storage[self.indexer.address_xy(x as usize, y as usize, pop)]
        } else {
            self.ring.get(x, y, pop)
        }
    }

    /// True when the halo ring reflects the current interior.
    pub fn halo_fresh(&self) -> bool {
        self.halo_fresh
    }

    pub(crate) fn mark_halo_stale(&mut self) {
        self.halo_fresh = false;
    }

    /// Copy periodic images of the interior into the halo ring.
    pub(crate) fn refresh_halo(&mut self) {
        let geo = *self.indexer.geometry();
        let h = geo.halo as i64;
        let (nx, ny) = (geo.nx as i64, geo.ny as i64);
        let q = self.indexer.q();
        let visit = |x: i64, y: i64, ring: &mut HaloRing, storage: &[f64], ix: &LayoutIndexer| {
            let sx = x.rem_euclid(nx) as usize;
            let sy = y.rem_euclid(ny) as usize;
            for pop in 0..q {
                let v = storage[ix.address_xy(sx, sy, pop)];
                ring.set(x, y, pop, v);
            }
        };
        for y in -h..0 {
            for x in -h..nx + h {
                visit(x, y, &mut self.ring, &self.storage, &self.indexer);
            }
        }
        for y in ny..ny + h {
            for x in -h..nx + h {
                visit(x, y, &mut self.ring, &self.storage, &self.indexer);
            }
        }
        for x in -h..0 {
            for y in 0..ny {
                visit(x, y, &mut self.ring, &self.storage, &self.indexer);
            }
        }
        for x in nx..nx + h {
            for y in 0..ny {
                visit(x, y, &mut self.ring, &self.storage, &self.indexer);
            }
        }
        self.halo_fresh = true;
    }

    /// Density and momentum at one site: `rho = sum_p f_p`,
    /// `rho u = sum_p c_p f_p`.
    pub fn moments(&self, set: &VelocitySet, site: SiteCoord) -> Result<(f64, [f64; 2]), CoreError> {
        if set.q != self.q() {
            return Err(CoreError::QMismatch { set_q: set.q, field_q: self.q() });
        }
        let mut density = 0.0;
        let mut momentum = [0.0, 0.0];
        for (pop, c) in set.vectors.iter().enumerate() {
            let f = self.read(site, pop);
            density += f;
            momentum[0] += c[0] as f64 * f;
            momentum[1] += c[1] as f64 * f;
        }
        Ok((density, momentum))
    }

    /// Layout-independent checksum: Neumaier-compensated sum over logical
    /// values in canonical (site-major, pop-minor) order. Because the
    /// visiting order is fixed, two fields with bitwise-equal logical
    /// content produce bitwise-equal checksums regardless of layout.
    pub fn checksum(&self) -> f64 {
        let geo = self.indexer.geometry();
        let q = self.indexer.q();
        let mut sum = 0.0f64;
        let mut comp = 0.0f64;
        for x in 0..geo.nx {
            for y in 0..geo.ny {
                for pop in 0..q {
                    let v = self.storage[self.indexer.address_xy(x, y, pop)];
                    let t = sum + v;
                    if sum.abs() >= v.abs() {
                        comp += (sum - t) + v;
                    } else {
                        comp += (v - t) + sum;
                    }
                    sum = t;
                }
            }
        }
        sum + comp
    }

    /// Rebuild the same logical content under another layout. The checksum
    /// is preserved bitwise; the halo ring is carried over unchanged.
    pub fn convert(&self, to: LayoutKind) -> Result<Self, CoreError> {
        let indexer = LayoutIndexer::new(to, *self.indexer.geometry(), self.indexer.q())?;
        let mut storage = vec![0.0; indexer.capacity()];
        let geo = self.indexer.geometry();
        for x in 0..geo.nx {
            for y in 0..geo.ny {
                for pop in 0..self.indexer.q() {
                    storage[indexer.address_xy(x, y, pop)] =
                        self.storage[self.indexer.address_xy(x, y, pop)];
                }
            }
        }
        Ok(Self { indexer, storage, ring: self.ring.clone(), halo_fresh: self.halo_fresh })
    }

    /// Bitwise equality of logical content (ignores layout and padding).
    pub fn logical_eq(&self, other: &Self) -> bool {
        if self.geometry() != other.geometry() || self.q() != other.q() {
            return false;
        }
        let geo = self.indexer.geometry();
        for x in 0..geo.nx {
            for y in 0..geo.ny {
                for pop in 0..self.q() {
                    let a = self.storage[self.indexer.address_xy(x, y, pop)];
                    let b = other.storage[other.indexer.address_xy(x, y, pop)];
                    if a.to_bits() != b.to_bits() {
                        return false;
                    }
                }
            }
        }
        true
    }
}
