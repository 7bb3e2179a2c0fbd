//! Canonical initial data and forcing on a grid. Coordinates are rescaled to
//! `[0, 2 pi)` so the patterns sit on the unit wavevectors for any period.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::spectral::{FieldKind, SpectralField, TorusGrid};

fn sample(grid: &Arc<TorusGrid>, f: impl Fn(f64, f64, f64) -> [f64; 3]) -> SpectralField {
    let n = grid.resolution();
    let scale = 2.0 * PI / grid.period();
    let mut comps: Vec<Vec<f64>> = (0..3).map(|_| Vec::with_capacity(grid.len())).collect();
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                let v = f(
                    scale * grid.coordinate(a),
                    scale * grid.coordinate(b),
                    scale * grid.coordinate(c),
                );
                for d in 0..3 {
                    comps[d].push(v[d]);
                }
            }
        }
    }
    SpectralField::from_physical(grid, FieldKind::Vector, &comps)
        .expect("shape is consistent")
        .masked()
}

/// `A (cos x sin y sin z, -sin x cos y sin z, 0)`.
pub fn taylor_green(grid: &Arc<TorusGrid>, amplitude: f64) -> SpectralField {
    sample(grid, |x, y, z| {
        [
            amplitude * x.cos() * y.sin() * z.sin(),
            -amplitude * x.sin() * y.cos() * z.sin(),
            0.0,
        ]
    })
}

/// `(0, A cos x, 0)`: a unidirectional shear with no self-advection.
pub fn shear_mode(grid: &Arc<TorusGrid>, amplitude: f64) -> SpectralField {
    sample(grid, |x, _, _| [0.0, amplitude * x.cos(), 0.0])
}

/// Orszag-Tang vortex extended uniformly in `z`:
/// `w = (-sin y, sin x, 0)`, `W = (-sin y, sin 2x, 0)`.
pub fn orszag_tang(grid: &Arc<TorusGrid>) -> (SpectralField, SpectralField) {
    (
        sample(grid, |x, y, _| [-y.sin(), x.sin(), 0.0]),
        sample(grid, |x, y, _| [-y.sin(), (2.0 * x).sin(), 0.0]),
    )
}

/// Steady solenoidal low-mode forcing `A (sin y, sin z, sin x)`.
pub fn low_mode_forcing(grid: &Arc<TorusGrid>, amplitude: f64) -> SpectralField {
    sample(grid, |x, y, z| {
        [
            amplitude * y.sin(),
            amplitude * z.sin(),
            amplitude * x.sin(),
        ]
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nse::InvariantReport;
    use crate::spectral::make_grid;
    use num_complex::Complex64;

    #[test]
    fn canonical_data_is_admissible() {
        let g = make_grid(16, 2.0 * PI, 2.0 / 3.0).unwrap();
        let (w, b) = orszag_tang(&g);
        for f in [
            taylor_green(&g, 1.0),
            shear_mode(&g, 2.0),
            w,
            b,
            low_mode_forcing(&g, 0.5),
        ] {
            let r = InvariantReport::of(&f);
            assert!(
                r.divergence < 1e-14 && r.mean < 1e-14 && r.asymmetry < 1e-14,
                "{r:?}"
            );
        }
    }

    #[test]
    fn shear_coefficients() {
        let g = make_grid(8, 2.0 * PI, 2.0 / 3.0).unwrap();
        let f = shear_mode(&g, 3.0);
        assert!((f.coefficient([1, 0, 0], 1) - Complex64::new(1.5, 0.0)).norm() < 1e-15);
        assert!((f.coefficient([-1, 0, 0], 1) - Complex64::new(1.5, 0.0)).norm() < 1e-15);
    }
}
