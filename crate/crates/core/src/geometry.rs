//! Lattice extents and site coordinates.

use serde::{Deserialize, Serialize};

use crate::error::CoreError;
use crate::velocity::VelocitySet;

/// Interior extents plus halo width of a 2D lattice.
///
/// The halo is a frame of periodic-image cells around the interior; it is
/// storage managed by [`crate::field::PopulationField`], not part of the
/// layout-indexed interior.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeGeometry {
    pub nx: usize,
    pub ny: usize,
    pub halo: usize,
}

impl LatticeGeometry {
    pub fn new(nx: usize, ny: usize, halo: usize) -> Result<Self, CoreError> {
        if nx == 0 || ny == 0 {
            return Err(CoreError::EmptyGeometry { nx, ny });
        }
        Ok(Self { nx, ny, halo })
    }

    /// Geometry sized so that `set` can propagate over it (halo equals the
    /// stencil reach).
    pub fn for_set(nx: usize, ny: usize, set: &VelocitySet) -> Result<Self, CoreError> {
        Self::new(nx, ny, set.max_component())
    }

    /// Interior site count.
    pub fn sites(&self) -> usize {
        self.nx * self.ny
    }

    /// True when `halo` covers a stencil with the given reach.
    pub fn halo_covers(&self, reach: usize) -> bool {
        self.halo >= reach
    }
}

/// Interior site coordinate, 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SiteCoord {
    pub x: usize,
    pub y: usize,
}

impl SiteCoord {
    pub fn new(x: usize, y: usize) -> Self {
        Self { x, y }
    }

    /// Checked constructor against a geometry.
    pub fn in_geometry(x: usize, y: usize, geo: &LatticeGeometry) -> Result<Self, CoreError> {
        if x >= geo.nx || y >= geo.ny {
            return Err(CoreError::SiteOutOfRange { x, y, nx: geo.nx, ny: geo.ny });
        }
        Ok(Self { x, y })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::velocity::LatticeModel;

    #[test]
    fn rejects_empty_extents() {
        assert!(LatticeGeometry::new(0, 4, 1).is_err());
        assert!(LatticeGeometry::new(4, 0, 1).is_err());
        assert!(LatticeGeometry::new(1, 1, 0).is_ok());
    }

    #[test]
    fn halo_from_set() {
        let d2q37 = VelocitySet::build(&LatticeModel::D2Q37).unwrap();
        let geo = LatticeGeometry::for_set(16, 16, &d2q37).unwrap();
        assert_eq!(geo.halo, 3);
        assert_eq!(geo.sites(), 256);
        assert!(geo.halo_covers(3));
        assert!(!geo.halo_covers(4));
    }

    #[test]
    fn site_bounds() {
        let geo = LatticeGeometry::new(4, 4, 1).unwrap();
        assert!(SiteCoord::in_geometry(3, 3, &geo).is_ok());
        assert!(SiteCoord::in_geometry(4, 0, &geo).is_err());
        assert!(SiteCoord::in_geometry(0, 4, &geo).is_err());
    }
}
