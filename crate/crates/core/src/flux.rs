//! Fused pseudo-spectral kernels for the filtered quadratic terms.
//!
//! Products are formed in physical space from masked inputs; the outputs are exact
//! truncated convolutions on the retained band. Packing of real fields into complex
//! transforms is fixed, so the velocity path performs the same floating-point
//! operations whether or not a magnetic field is present.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::spectral::transform::from_physical_pair;
use crate::spectral::{SpectralField, TorusGrid};

/// Storage order of the six independent entries of a symmetric tensor.
pub(crate) const SYM: [(usize, usize); 6] = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];

#[inline]
pub(crate) fn sym_index(i: usize, j: usize) -> usize {
    match (i.min(j), i.max(j)) {
        (0, 0) => 0,
        (0, 1) => 1,
        (0, 2) => 2,
        (1, 1) => 3,
        (1, 2) => 4,
        _ => 5,
    }
}

/// Storage order of the three independent entries of an antisymmetric tensor.
pub(crate) const ANTI: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];

/// `A_ij` with sign, from the stored upper-triangular entries.
#[inline]
fn anti_entry(a: &[Vec<Complex64>], i: usize, j: usize, idx: usize) -> Complex64 {
    match (i, j) {
        (0, 1) => a[0][idx],
        (1, 0) => -a[0][idx],
        (0, 2) => a[1][idx],
        (2, 0) => -a[1][idx],
        (1, 2) => a[2][idx],
        (2, 1) => -a[2][idx],
        _ => Complex64::default(),
    }
}

/// Masked point values of a vector field.
pub(crate) fn physical(f: &SpectralField) -> Vec<Vec<f64>> {
    f.masked().to_physical()
}

fn analyze(grid: &TorusGrid, fields: Vec<Vec<f64>>) -> Vec<Vec<Complex64>> {
    let mut out = Vec::with_capacity(fields.len());
    for pair in fields.chunks(2) {
        let (p, q) = from_physical_pair(grid, &pair[0], pair.get(1).map(|v| v.as_slice()));
        out.push(p);
        if let Some(q) = q {
            out.push(q);
        }
    }
    let mask = grid.mask();
    for c in out.iter_mut() {
        c.par_iter_mut().zip(mask.par_iter()).for_each(|(z, &m)| {
            if !m {
                *z = Complex64::default();
            }
        });
    }
    out
}

/// Coefficients of `u_i u_j - b_i b_j` in [`SYM`] order.
pub(crate) fn symmetric_stress(
    grid: &TorusGrid,
    u: &[Vec<f64>],
    b: Option<&[Vec<f64>]>,
) -> Vec<Vec<Complex64>> {
    let products: Vec<Vec<f64>> = SYM
        .iter()
        .map(|&(i, j)| match b {
            None => u[i].iter().zip(&u[j]).map(|(x, y)| x * y).collect(),
            Some(b) => (0..grid.len())
                .map(|p| u[i][p] * u[j][p] - b[i][p] * b[j][p])
                .collect(),
        })
        .collect();
    analyze(grid, products)
}

/// Coefficients of `u_i b_j - u_j b_i` in [`ANTI`] order.
pub(crate) fn antisymmetric_flux(
    grid: &TorusGrid,
    u: &[Vec<f64>],
    b: &[Vec<f64>],
) -> Vec<Vec<Complex64>> {
    let products: Vec<Vec<f64>> = ANTI
        .iter()
        .map(|&(i, j)| {
            (0..grid.len())
                .map(|p| u[i][p] * b[j][p] - u[j][p] * b[i][p])
                .collect()
        })
        .collect();
    analyze(grid, products)
}

/// `P(-div(m * S))` for a symmetric stress `S`, `m` the filter symbol.
pub(crate) fn projected_divergence(
    grid: &TorusGrid,
    symbol: &[f64],
    stress: &[Vec<Complex64>],
) -> Vec<Vec<Complex64>> {
    let k_sq = grid.k_sq();
    let mask = grid.mask();
    let values: Vec<[Complex64; 3]> = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            if !mask[idx] || k_sq[idx] == 0.0 {
                return [Complex64::default(); 3];
            }
            let kd = grid.derivative_wavevector(idx);
            let m = symbol[idx];
            let mut v = [Complex64::default(); 3];
            for (j, vj) in v.iter_mut().enumerate() {
                let s = stress[sym_index(0, j)][idx] * kd[0]
                    + stress[sym_index(1, j)][idx] * kd[1]
                    + stress[sym_index(2, j)][idx] * kd[2];
                // -i s m
                *vj = Complex64::new(s.im, -s.re) * m;
            }
            project(v, kd)
        })
        .collect();
    unzip3(values)
}

/// `-div(m * A)` for an antisymmetric flux `A`, projected onto solenoidal fields.
pub(crate) fn induction(
    grid: &TorusGrid,
    symbol: &[f64],
    flux: &[Vec<Complex64>],
) -> Vec<Vec<Complex64>> {
    let k_sq = grid.k_sq();
    let mask = grid.mask();
    let values: Vec<[Complex64; 3]> = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            if !mask[idx] || k_sq[idx] == 0.0 {
                return [Complex64::default(); 3];
            }
            let kd = grid.derivative_wavevector(idx);
            let m = symbol[idx];
            let mut v = [Complex64::default(); 3];
            for (j, vj) in v.iter_mut().enumerate() {
                let s = anti_entry(flux, 0, j, idx) * kd[0]
                    + anti_entry(flux, 1, j, idx) * kd[1]
                    + anti_entry(flux, 2, j, idx) * kd[2];
                *vj = Complex64::new(s.im, -s.re) * m;
            }
            project(v, kd)
        })
        .collect();
    unzip3(values)
}

/// `q = -k_i k_j m S_ij / |k|^2`, zero mean.
pub(crate) fn pressure_from_stress(
    grid: &TorusGrid,
    symbol: &[f64],
    stress: &[Vec<Complex64>],
) -> Vec<Complex64> {
    (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let k = grid.derivative_wavevector(idx);
            let kd_sq = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
            if kd_sq == 0.0 {
                return Complex64::default();
            }
            let mut acc = Complex64::default();
            for (c, &(i, j)) in SYM.iter().enumerate() {
                let w = if i == j { 1.0 } else { 2.0 };
                acc += stress[c][idx] * (w * k[i] * k[j]);
            }
            -acc * symbol[idx] / kd_sq
        })
        .collect()
}

/// Removes the component along the derivative wavevector `k`.
fn project(v: [Complex64; 3], k: [f64; 3]) -> [Complex64; 3] {
    let k_sq = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
    if k_sq == 0.0 {
        return [Complex64::default(); 3];
    }
    let kv = (v[0] * k[0] + v[1] * k[1] + v[2] * k[2]) / k_sq;
    [v[0] - kv * k[0], v[1] - kv * k[1], v[2] - kv * k[2]]
}

fn unzip3(values: Vec<[Complex64; 3]>) -> Vec<Vec<Complex64>> {
    let mut out: Vec<Vec<Complex64>> = (0..3).map(|_| Vec::with_capacity(values.len())).collect();
    for v in values {
        for d in 0..3 {
            out[d].push(v[d]);
        }
    }
    out
}
