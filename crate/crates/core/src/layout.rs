//! Storage layouts for population fields.
//!
//! Four layouts are supported, all bijections from logical `(site, pop)`
//! pairs onto a flat array of 64-bit reals:
//!
//! * `AoS`  — all Q values of a site contiguous: `addr = s*q + p`
//! * `SoA`  — each population a contiguous plane: `addr = p*S + s`
//! * `CSoA(vl)`  — SoA planes reordered into vl-wide lane clusters:
//!   `addr = p*S + k*vl + l`
//! * `CAoSoA(vl)` — all populations of one cluster adjacent:
//!   `addr = (k*q + p)*vl + l`
//!
//! with `s = x*ny + y` the linearized site, `S` the (possibly padded) site
//! count, `H = ny/vl` the lane stride, lane `l = y / H`, in-lane row
//! `r = y mod H`, and cluster coordinate `k = x*H + r`. Sites `y`,
//! `y+H`, ..., `y+(vl-1)*H` therefore share one vl-wide vector whose base
//! address is a multiple of `vl` — the contract the vector kernels rely on.
//!
//! Lane splitting runs along Y with stride `H` so that the small `|dy|`
//! shifts of a propagate stencil stay inside one lane except at lane edges.
//! When `ny` is not a multiple of `vl`, clustered layouts pad Y up to the
//! next multiple (default) or refuse the geometry (strict mode); padded
//! rows hold no logical content.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::CoreError;
use crate::geometry::{LatticeGeometry, SiteCoord};

/// Default lane count: eight 64-bit lanes fill a 512-bit vector.
pub const DEFAULT_VECTOR_LEN: usize = 8;

/// The four storage layouts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LayoutKind {
    Aos,
    Soa,
    CSoa { vl: usize },
    CAosoa { vl: usize },
}

impl LayoutKind {
    /// Lane count for clustered layouts, `None` for flat ones.
    pub fn vector_len(&self) -> Option<usize> {
        match self {
            LayoutKind::Aos | LayoutKind::Soa => None,
            LayoutKind::CSoa { vl } | LayoutKind::CAosoa { vl } => Some(*vl),
        }
    }

    /// Validate the vector length invariant (power of two, at least 2).
    pub fn validate(&self) -> Result<(), CoreError> {
        if let Some(vl) = self.vector_len() {
            if vl < 2 || !vl.is_power_of_two() {
                return Err(CoreError::InvalidVectorLength(vl));
            }
        }
        Ok(())
    }

    /// All four layouts with the default vector length.
    pub fn all_default() -> [LayoutKind; 4] {
        [
            LayoutKind::Aos,
            LayoutKind::Soa,
            LayoutKind::CSoa { vl: DEFAULT_VECTOR_LEN },
            LayoutKind::CAosoa { vl: DEFAULT_VECTOR_LEN },
        ]
    }
}

impl fmt::Display for LayoutKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LayoutKind::Aos => write!(f, "AoS"),
            LayoutKind::Soa => write!(f, "SoA"),
            LayoutKind::CSoa { vl } => write!(f, "CSoA({vl})"),
            LayoutKind::CAosoa { vl } => write!(f, "CAoSoA({vl})"),
        }
    }
}

impl FromStr for LayoutKind {
    type Err = CoreError;

    /// Case-insensitive; clustered layouts accept `csoa(4)`, `csoa:4` or a
    /// bare `csoa` meaning the default vector length.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        let (name, vl) = match lower.find(['(', ':']) {
            Some(pos) => {
                let digits = lower[pos + 1..].trim_end_matches(')');
                let vl: usize = digits
                    .parse()
                    .map_err(|_| CoreError::InvalidParam(format!("bad vector length in `{s}`")))?;
                (&lower[..pos], vl)
            }
            None => (lower.as_str(), DEFAULT_VECTOR_LEN),
        };
        let kind = match name {
            "aos" => LayoutKind::Aos,
            "soa" => LayoutKind::Soa,
            "csoa" => LayoutKind::CSoa { vl },
            "caosoa" => LayoutKind::CAosoa { vl },
            _ => return Err(CoreError::InvalidParam(format!("unknown layout `{s}`"))),
        };
        kind.validate()?;
        Ok(kind)
    }
}

impl Serialize for LayoutKind {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for LayoutKind {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A concrete `(site, pop) -> storage index` map for one geometry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayoutIndexer {
    kind: LayoutKind,
    geometry: LatticeGeometry,
    q: usize,
    /// ny rounded up to a vl multiple for clustered layouts, ny otherwise.
    ny_padded: usize,
    /// Lane stride `H = ny_padded / vl`; 1 for flat layouts.
    lane_stride: usize,
    capacity: usize,
    alignment_elems: usize,
}

impl LayoutIndexer {
    /// Build an indexer, padding Y for clustered layouts when needed.
    pub fn new(kind: LayoutKind, geometry: LatticeGeometry, q: usize) -> Result<Self, CoreError> {
        Self::with_padding(kind, geometry, q, true)
    }

    /// Build an indexer; with `allow_padding == false`, clustered layouts
    /// require `ny` divisible by `vl`.
    pub fn with_padding(
        kind: LayoutKind,
        geometry: LatticeGeometry,
        q: usize,
        allow_padding: bool,
    ) -> Result<Self, CoreError> {
        kind.validate()?;
        if q == 0 {
            return Err(CoreError::InvalidParam("q must be at least 1".into()));
        }
        let (ny_padded, lane_stride, alignment_elems) = match kind.vector_len() {
            None => (geometry.ny, 1, 1),
            Some(vl) => {
                let rem = geometry.ny % vl;
                if rem != 0 && !allow_padding {
                    return Err(CoreError::IndivisibleGeometry { ny: geometry.ny, vl });
                }
                let ny_padded = if rem == 0 { geometry.ny } else { geometry.ny + (vl - rem) };
                (ny_padded, ny_padded / vl, vl)
            }
        };
        let capacity = q * geometry.nx * ny_padded;
        Ok(Self { kind, geometry, q, ny_padded, lane_stride, capacity, alignment_elems })
    }

    pub fn kind(&self) -> LayoutKind {
        self.kind
    }

    pub fn geometry(&self) -> &LatticeGeometry {
        &self.geometry
    }

    pub fn q(&self) -> usize {
        self.q
    }

    /// Total storage length including padding.
    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Guaranteed alignment of every cluster base, in elements.
    pub fn alignment_elems(&self) -> usize {
        self.alignment_elems
    }

    /// Lane stride `H`; sites `(x, r)` and `(x, r + H)` sit in adjacent
    /// lanes of one cluster.
    pub fn lane_stride(&self) -> usize {
        self.lane_stride
    }

    pub fn ny_padded(&self) -> usize {
        self.ny_padded
    }

    /// Storage index of `(site, pop)`. Interior sites only; halo access is
    /// the kernels' business via coordinate wrapping.
    #[inline]
    pub fn address(&self, site: SiteCoord, pop: usize) -> usize {
        debug_assert!(site.x < self.geometry.nx && site.y < self.geometry.ny);
        debug_assert!(pop < self.q);
        self.address_xy(site.x, site.y, pop)
    }

    #[inline]
    pub(crate) fn address_xy(&self, x: usize, y: usize, pop: usize) -> usize {
        let padded_sites = self.geometry.nx * self.ny_padded;
        match self.kind {
            LayoutKind::Aos => (x * self.ny_padded + y) * self.q + pop,
            LayoutKind::Soa => pop * padded_sites + x * self.ny_padded + y,
            LayoutKind::CSoa { vl } => {
                let h = self.lane_stride;
                let lane = y / h;
                let row = y % h;
                let cluster = x * h + row;
                pop * padded_sites + cluster * vl + lane
            }
            LayoutKind::CAosoa { vl } => {
                let h = self.lane_stride;
                let lane = y / h;
                let row = y % h;
                let cluster = x * h + row;
                (cluster * self.q + pop) * vl + lane
            }
        }
    }

    /// Bounds-checked address.
    pub fn try_address(&self, site: SiteCoord, pop: usize) -> Result<usize, CoreError> {
        if site.x >= self.geometry.nx || site.y >= self.geometry.ny {
            return Err(CoreError::SiteOutOfRange {
                x: site.x,
                y: site.y,
                nx: self.geometry.nx,
                ny: self.geometry.ny,
            });
        }
        if pop >= self.q {
            return Err(CoreError::PopOutOfRange { pop, q: self.q });
        }
        Ok(self.address(site, pop))
    }
}
