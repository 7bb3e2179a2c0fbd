//! Shared fixtures for the criterion benchmarks.

use std::f64::consts::PI;
use std::sync::Arc;

use critles::initial::taylor_green;
use critles::spectral::random_solenoidal;
use critles::{make_grid, SpectralField, TorusGrid};

pub fn grid(n: usize) -> Arc<TorusGrid> {
    make_grid(n, 2.0 * PI, 2.0 / 3.0).expect("benchmark grid")
}

/// Taylor-Green plus a random solenoidal perturbation, so every band is populated.
pub fn turbulent_field(grid: &Arc<TorusGrid>) -> SpectralField {
    taylor_green(grid, 1.0)
        .plus(&random_solenoidal(grid, 1, -5.0 / 3.0).scaled(0.3))
        .expect("same grid")
}
