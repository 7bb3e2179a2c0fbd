//! Seeded random fields. ChaCha is a counter-based stream, so a seed gives the same
//! coefficients on every platform.

use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::spectral::field::{FieldKind, SpectralField};
use crate::spectral::grid::TorusGrid;
use crate::spectral::ops::{leray_project, sobolev_norm, SobolevIndex};

/// Real field with uniform random coefficients on every lattice mode (mean included).
pub fn random_field(grid: &Arc<TorusGrid>, kind: FieldKind, seed: u64) -> SpectralField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let comps = (0..kind.components())
        .map(|_| {
            (0..grid.len())
                .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect()
        })
        .collect();
    SpectralField::from_components(grid, kind, comps)
        .expect("shape is consistent")
        .symmetrized()
}

/// Random divergence-free, zero-mean vector field supported on the dealias band, with
/// shell spectrum roughly `|k|^slope`, scaled to unit L2 norm.
pub fn random_solenoidal(grid: &Arc<TorusGrid>, seed: u64, slope: f64) -> SpectralField {
    let raw = random_field(grid, FieldKind::Vector, seed);
    let k_sq = grid.k_sq().to_vec();
    // per-mode amplitude |k|^{(slope - 2) / 2}: shells hold ~|k|^2 modes
    let shaped = raw.multiply_symbol(|i| {
        if k_sq[i] == 0.0 {
            0.0
        } else {
            k_sq[i].powf((slope - 2.0) / 4.0)
        }
    });
    let f = leray_project(&shaped.masked())
        .expect("vector field")
        .without_mean();
    let norm = sobolev_norm(&f, SobolevIndex::L2);
    if norm > 0.0 {
        f.scaled(1.0 / norm)
    } else {
        f
    }
}
