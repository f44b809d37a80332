use thiserror::Error;

use crate::layout::LayoutKind;

/// Errors produced while building lattices, layouts and running kernels.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("unknown lattice model `{0}`")]
    UnknownModel(String),

    #[error("shell list {0:?} produces an empty velocity set")]
    EmptyVelocitySet(Vec<u32>),

    #[error("lattice extents must be at least 1x1, got {nx}x{ny}")]
    EmptyGeometry { nx: usize, ny: usize },

    #[error("vector length {0} is invalid: clustered layouts need a power of two >= 2")]
    InvalidVectorLength(usize),

    #[error("ny={ny} is not divisible by vl={vl} and padding is disabled")]
    IndivisibleGeometry { ny: usize, vl: usize },

    #[error("site ({x},{y}) outside interior {nx}x{ny}")]
    SiteOutOfRange { x: usize, y: usize, nx: usize, ny: usize },

    #[error("population index {pop} out of range for q={q}")]
    PopOutOfRange { pop: usize, q: usize },

    #[error("fields disagree: {0}")]
    FieldMismatch(String),

    #[error("velocity set has q={set_q} but field has q={field_q}")]
    QMismatch { set_q: usize, field_q: usize },

    #[error("halo width {halo} is smaller than the stencil reach {required}")]
    HaloTooSmall { halo: usize, required: usize },

    #[error("velocity set carries no weights; BGK collision needs a physics-mode set")]
    MissingWeights,

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("layout {0} is not valid for this geometry")]
    InvalidLayout(LayoutKind),
}
