//! Fourier machinery on the periodic 3-torus.

mod field;
mod grid;
mod ops;
mod random;
mod snapshot;
mod sum;
pub(crate) mod transform;

pub use field::{FieldKind, SpectralField};
pub use grid::{make_grid, TorusGrid};
pub use ops::{
    dealiased_product, derivative, divergence, gradient, leray_project, sobolev_norm,
    sobolev_norm_sq, SobolevIndex,
};
pub use random::{random_field, random_solenoidal};
pub use snapshot::{read_snapshot, write_snapshot, SnapshotFlags, SnapshotMeta, SNAPSHOT_FORMAT};
pub use sum::{compensated_sum, CompensatedSum};
