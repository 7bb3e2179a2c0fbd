//! Integrating-factor (Lawson) RK4 for `du/dt = -D |k|^2 u + N(u)` on a tuple of fields.
//!
//! The diffusive part is applied exactly through `exp(-D |k|^2 h)`; `N` is advanced by
//! classical RK4 in the rotated variable. The state itself is advanced as
//! `u + expm1(-D |k|^2 h) u`: a plain product with the rounded exponential would bias
//! every step the same way, which acts as a viscosity error of relative size
//! `eps / (D |k|^2 h)` that grows as the step shrinks. Every field of the tuple receives the same
//! sequence of operations, so adding a field never perturbs the others.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::Result;
use crate::spectral::{SpectralField, TorusGrid};

pub(crate) struct LawsonRk4 {
    dt: f64,
    half: Vec<Vec<f64>>,
    full: Vec<Vec<f64>>,
    /// `half - 1` and `full - 1`, computed without cancellation.
    half_m1: Vec<Vec<f64>>,
    full_m1: Vec<Vec<f64>>,
}

fn decay_m1(grid: &TorusGrid, diffusivity: f64, h: f64) -> Vec<f64> {
    grid.k_sq()
        .iter()
        .map(|&q| (-diffusivity * q * h).exp_m1())
        .collect()
}

fn plus_one(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| 1.0 + x).collect()
}

/// Builds a field with each coefficient `op(idx, [coefficients of inputs])`.
fn combine<const N: usize>(
    inputs: [&SpectralField; N],
    op: impl Fn(usize, usize, [Complex64; N]) -> Complex64 + Sync,
) -> SpectralField {
    let first = inputs[0];
    let comps = (0..first.components().len())
        .map(|c| {
            (0..first.grid().len())
                .into_par_iter()
                .map(|i| op(c, i, std::array::from_fn(|n| inputs[n].component(c)[i])))
                .collect()
        })
        .collect();
    SpectralField::from_components(first.grid(), first.kind(), comps).expect("same shape")
}

impl LawsonRk4 {
    pub(crate) fn new(grid: &TorusGrid, diffusivities: &[f64], dt: f64) -> Self {
        let half_m1: Vec<_> = diffusivities
            .iter()
            .map(|&d| decay_m1(grid, d, dt / 2.0))
            .collect();
        let full_m1: Vec<_> = diffusivities
            .iter()
            .map(|&d| decay_m1(grid, d, dt))
            .collect();
        LawsonRk4 {
            dt,
            half: half_m1.iter().map(|v| plus_one(v)).collect(),
            full: full_m1.iter().map(|v| plus_one(v)).collect(),
            half_m1,
            full_m1,
        }
    }

    /// One step from `u`. `carry` holds the rounding error of the previous step's
    /// final update (the true state is `u + carry`); the returned pair is the new
    /// state and its own rounding error.
    pub(crate) fn step<F>(
        &self,
        u: &[SpectralField],
        carry: Option<&[SpectralField]>,
        rhs: F,
    ) -> Result<(Vec<SpectralField>, Vec<SpectralField>)>
    where
        F: Fn(&[SpectralField]) -> Result<Vec<SpectralField>>,
    {
        let h = self.dt;
        let fields = 0..u.len();

        let a = rhs(u)?;
        let u1: Vec<_> = fields
            .clone()
            .map(|f| {
                let m = &self.half_m1[f];
                combine([&u[f], &a[f]], |_, i, [x, y]| {
                    let z = x + y * (h / 2.0);
                    z + z * m[i]
                })
            })
            .collect();
        let b = rhs(&u1)?;
        let u2: Vec<_> = fields
            .clone()
            .map(|f| {
                let m = &self.half_m1[f];
                combine([&u[f], &b[f]], |_, i, [x, y]| {
                    x + (x * m[i] + y * (h / 2.0))
                })
            })
            .collect();
        let c = rhs(&u2)?;
        let u3: Vec<_> = fields
            .clone()
            .map(|f| {
                let (eh, mf) = (&self.half[f], &self.full_m1[f]);
                combine([&u[f], &c[f]], |_, i, [x, y]| {
                    x + (x * mf[i] + y * (h * eh[i]))
                })
            })
            .collect();
        let d = rhs(&u3)?;

        let mut next = Vec::with_capacity(u.len());
        let mut errors = Vec::with_capacity(u.len());
        for f in fields {
            let (eh, ef, mf) = (&self.half[f], &self.full[f], &self.full_m1[f]);
            let zero = SpectralField::zeros(u[f].grid(), u[f].kind());
            let prev = carry.map_or(&zero, |c| &c[f]);
            let increment = combine(
                [&u[f], &a[f], &b[f], &c[f], &d[f], prev],
                |_, i, [x, ka, kb, kc, kd, e]| {
                    let update = (ka * ef[i] + (kb + kc) * (2.0 * eh[i]) + kd) * (h / 6.0);
                    x * mf[i] + update + e * ef[i]
                },
            );
            next.push(combine([&u[f], &increment], |_, _, [x, y]| x + y));
            errors.push(combine([&u[f], &increment], |_, _, [x, y]| {
                Complex64::new(two_sum_error(x.re, y.re), two_sum_error(x.im, y.im))
            }));
        }
        Ok((next, errors))
    }
}

/// Exact rounding error of `a + b`.
fn two_sum_error(a: f64, b: f64) -> f64 {
    let s = a + b;
    let bb = s - a;
    (a - (s - bb)) + (b - bb)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_sum_recovers_lost_bits() {
        let (a, b) = (1.0, 1e-17);
        assert_eq!(a + b, 1.0);
        assert_eq!(two_sum_error(a, b), 1e-17);
        assert_eq!(two_sum_error(0.5, 0.25), 0.0);
    }
}
