//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use std::sync::Arc;

use critles::spectral::{FieldKind, SpectralField, TorusGrid};
use critles::FilterParams;
use num_complex::Complex64;

/// Indices of retained modes.
pub fn retained(grid: &TorusGrid) -> Vec<usize> {
    (0..grid.len()).filter(|&i| grid.mask()[i]).collect()
}

/// Truncated convolution `sum_{p + q = k} a(p) b(q)` over retained `p, q, k`, by
/// direct double loop.
pub fn convolve(grid: &TorusGrid, a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let modes = retained(grid);
    let mut out = vec![Complex64::default(); grid.len()];
    for &p in &modes {
        let mp = grid.mode(p);
        for &q in &modes {
            let mq = grid.mode(q);
            let k = [mp[0] + mq[0], mp[1] + mq[1], mp[2] + mq[2]];
            if let Some(idx) = grid.index_of(k) {
                if grid.mask()[idx] {
                    out[idx] += a[p] * b[q];
                }
            }
        }
    }
    out
}

/// `1 / (1 + alpha^{2 theta} |k|^{2 theta})` evaluated from scratch.
pub fn symbol(k: [f64; 3], p: &FilterParams) -> f64 {
    let k_sq = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
    if p.alpha == 0.0 {
        return 1.0;
    }
    1.0 / (1.0 + p.alpha.powf(2.0 * p.theta) * k_sq.powf(p.theta))
}

fn project(v: [Complex64; 3], k: [f64; 3]) -> [Complex64; 3] {
    let k_sq = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
    if k_sq == 0.0 {
        return [Complex64::default(); 3];
    }
    let kv = (v[0] * k[0] + v[1] * k[1] + v[2] * k[2]) / k_sq;
    [v[0] - kv * k[0], v[1] - kv * k[1], v[2] - kv * k[2]]
}

/// `P(-div(m * T))` with `T_ij = sum_terms sign * conv(a_i, b_j)`, divergence over the
/// first index.
fn divergence_oracle(
    grid: &Arc<TorusGrid>,
    terms: &[(f64, &SpectralField, &SpectralField)],
    p: &FilterParams,
) -> SpectralField {
    let mut tensor = vec![vec![Complex64::default(); grid.len()]; 9];
    for &(sign, a, b) in terms {
        for i in 0..3 {
            for j in 0..3 {
                let c = convolve(grid, a.component(i), b.component(j));
                for (t, v) in tensor[3 * i + j].iter_mut().zip(c) {
                    *t += v * sign;
                }
            }
        }
    }
    let mut out = vec![vec![Complex64::default(); grid.len()]; 3];
    for idx in retained(grid) {
        let k = grid.wavevector(idx);
        let m = symbol(k, p);
        let mut v = [Complex64::default(); 3];
        for (j, vj) in v.iter_mut().enumerate() {
            let s: Complex64 = (0..3).map(|i| tensor[3 * i + j][idx] * k[i]).sum();
            *vj = -Complex64::i() * s * m;
        }
        let v = project(v, k);
        for d in 0..3 {
            out[d][idx] = v[d];
        }
    }
    SpectralField::from_components(grid, FieldKind::Vector, out).unwrap()
}

/// Brute-force filtered advection `P(-div(m (w (x) w)))`.
pub fn nonlinear_oracle(w: &SpectralField, p: &FilterParams) -> SpectralField {
    divergence_oracle(w.grid(), &[(1.0, w, w)], p)
}

/// Brute-force MHD tendencies.
pub fn mhd_oracle(
    w: &SpectralField,
    b: &SpectralField,
    p: &FilterParams,
) -> (SpectralField, SpectralField) {
    let g = w.grid();
    (
        divergence_oracle(g, &[(1.0, w, w), (-1.0, b, b)], p),
        divergence_oracle(g, &[(1.0, w, b), (-1.0, b, w)], p),
    )
}

/// `max |a - b| / max |b|` over all coefficients.
pub fn relative_max_diff(a: &SpectralField, b: &SpectralField) -> f64 {
    let mut num: f64 = 0.0;
    for (x, y) in a.components().iter().zip(b.components()) {
        for (u, v) in x.iter().zip(y) {
            num = num.max((u - v).norm());
        }
    }
    let den = b.max_amplitude();
    if den == 0.0 {
        num
    } else {
        num / den
    }
}

/// Grid values of `f` by direct summation of its Fourier series.
pub fn direct_synthesis(f: &SpectralField) -> Vec<Vec<f64>> {
    let g = f.grid();
    let n = g.resolution();
    let points: Vec<[f64; 3]> = (0..g.len())
        .map(|i| {
            let (a, b, c) = (i / (n * n), (i / n) % n, i % n);
            [g.coordinate(a), g.coordinate(b), g.coordinate(c)]
        })
        .collect();
    f.components()
        .iter()
        .map(|coeffs| {
            points
                .iter()
                .map(|x| {
                    let mut acc = Complex64::default();
                    for (idx, c) in coeffs.iter().enumerate() {
                        let k = g.wavevector(idx);
                        let phase = k[0] * x[0] + k[1] * x[1] + k[2] * x[2];
                        acc += c * Complex64::from_polar(1.0, phase);
                    }
                    acc.re
                })
                .collect()
        })
        .collect()
}
