//! 3-D complex FFT on the flat `(a, b, c)` layout plus real/complex packing helpers.
//!
//! Convention: `f(x) = sum_k f_hat(k) e^{i k.x}`; the forward transform carries the
//! `1 / n^3` factor.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::spectral::grid::TorusGrid;

pub(crate) struct Fft3 {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

#[derive(Clone, Copy)]
enum Direction {
    Forward,
    Inverse,
}

impl Fft3 {
    pub(crate) fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft3 {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    fn plan(&self, dir: Direction) -> &Arc<dyn Fft<f64>> {
        match dir {
            Direction::Forward => &self.forward,
            Direction::Inverse => &self.inverse,
        }
    }

    /// Unnormalized in-place transform over all three axes.
    fn process(&self, data: &mut [Complex64], dir: Direction) {
        let n = self.n;
        let plane = n * n;
        debug_assert_eq!(data.len(), plane * n);
        let fft = self.plan(dir);

        // axis 2: rows are contiguous
        data.par_chunks_mut(plane).for_each(|slab| {
            let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
            fft.process_with_scratch(slab, &mut scratch);
        });

        // axis 1: transpose each (b, c) slab
        data.par_chunks_mut(plane).for_each(|slab| {
            let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
            let mut t = vec![Complex64::default(); plane];
            for b in 0..n {
                for c in 0..n {
                    t[c * n + b] = slab[b * n + c];
                }
            }
            fft.process_with_scratch(&mut t, &mut scratch);
            for b in 0..n {
                for c in 0..n {
                    slab[b * n + c] = t[c * n + b];
                }
            }
        });

        // axis 0: gather (c, a) planes for each b, transform, scatter
        let planes: Vec<Vec<Complex64>> = (0..n)
            .into_par_iter()
            .map(|b| {
                let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
                let mut t = vec![Complex64::default(); plane];
                for a in 0..n {
                    let row = &data[(a * n + b) * n..(a * n + b + 1) * n];
                    for (c, v) in row.iter().enumerate() {
                        t[c * n + a] = *v;
                    }
                }
                fft.process_with_scratch(&mut t, &mut scratch);
                t
            })
            .collect();
        for (b, t) in planes.iter().enumerate() {
            for a in 0..n {
                let row = &mut data[(a * n + b) * n..(a * n + b + 1) * n];
                for (c, v) in row.iter_mut().enumerate() {
                    *v = t[c * n + a];
                }
            }
        }
    }
}

/// Synthesizes up to two real fields from their coefficients with one complex transform.
///
/// Both inputs must be conjugate-symmetric; the first comes back as the real part,
/// the second as the imaginary part.
pub(crate) fn to_physical_pair(
    grid: &TorusGrid,
    first: &[Complex64],
    second: Option<&[Complex64]>,
) -> (Vec<f64>, Option<Vec<f64>>) {
    let i = Complex64::i();
    let mut buf: Vec<Complex64> = match second {
        Some(s) => first.iter().zip(s).map(|(a, b)| a + i * b).collect(),
        None => first.to_vec(),
    };
    grid.fft().process(&mut buf, Direction::Inverse);
    let re = buf.iter().map(|z| z.re).collect();
    let im = second.map(|_| buf.iter().map(|z| z.im).collect());
    (re, im)
}

/// Analyzes up to two real fields with one complex transform.
///
/// Outputs are exactly conjugate-symmetric by construction.
pub(crate) fn from_physical_pair(
    grid: &TorusGrid,
    first: &[f64],
    second: Option<&[f64]>,
) -> (Vec<Complex64>, Option<Vec<Complex64>>) {
    let mut buf: Vec<Complex64> = match second {
        Some(s) => first
            .iter()
            .zip(s)
            .map(|(&a, &b)| Complex64::new(a, b))
            .collect(),
        None => first.iter().map(|&a| Complex64::new(a, 0.0)).collect(),
    };
    grid.fft().process(&mut buf, Direction::Forward);
    let scale = 1.0 / grid.len() as f64;

    let mut p = vec![Complex64::default(); buf.len()];
    let mut q = second.map(|_| vec![Complex64::default(); buf.len()]);
    for idx in 0..buf.len() {
        let x = buf[idx];
        let xc = buf[grid.partner(idx)].conj();
        p[idx] = (x + xc) * (0.5 * scale);
        if let Some(q) = q.as_mut() {
            // (x - conj x(-k)) / (2 i)
            let d = x - xc;
            q[idx] = Complex64::new(d.im, -d.re) * (0.5 * scale);
        }
    }
    (p, q)
}

#[cfg(test)]
pub(crate) fn to_physical(grid: &TorusGrid, coeffs: &[Complex64]) -> Vec<f64> {
    to_physical_pair(grid, coeffs, None).0
}

#[cfg(test)]
pub(crate) fn from_physical(grid: &TorusGrid, values: &[f64]) -> Vec<Complex64> {
    from_physical_pair(grid, values, None).0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::grid::make_grid;
    use std::f64::consts::PI;

    #[test]
    fn single_mode_synthesis() {
        let g = make_grid(8, 2.0 * PI, 2.0 / 3.0).unwrap();
        let mut c = vec![Complex64::default(); g.len()];
        // cos(x0) + sin(2 x2)
        c[g.index_of([1, 0, 0]).unwrap()] = Complex64::new(0.5, 0.0);
        c[g.index_of([-1, 0, 0]).unwrap()] = Complex64::new(0.5, 0.0);
        c[g.index_of([0, 0, 2]).unwrap()] = Complex64::new(0.0, -0.5);
        c[g.index_of([0, 0, -2]).unwrap()] = Complex64::new(0.0, 0.5);
        let f = to_physical(&g, &c);
        let n = g.resolution();
        for a in 0..n {
            for b in 0..n {
                for cc in 0..n {
                    let x = g.coordinate(a);
                    let z = g.coordinate(cc);
                    let want = x.cos() + (2.0 * z).sin();
                    assert!((f[(a * n + b) * n + cc] - want).abs() < 1e-14);
                }
            }
        }
        let back = from_physical(&g, &f);
        for (u, v) in back.iter().zip(&c) {
            assert!((u - v).norm() < 1e-15);
        }
    }

    #[test]
    fn pair_packing_separates_fields() {
        let g = make_grid(6, 2.0 * PI, 1.0).unwrap();
        let n = g.resolution();
        let p: Vec<f64> = (0..g.len()).map(|i| ((i * 7 % 11) as f64).sin()).collect();
        let q: Vec<f64> = (0..g.len()).map(|i| ((i * 5 % 13) as f64).cos()).collect();
        let (ph, qh) = from_physical_pair(&g, &p, Some(&q));
        let (p2, q2) = to_physical_pair(&g, &ph, qh.as_deref());
        let q2 = q2.unwrap();
        for i in 0..n * n * n {
            assert!((p[i] - p2[i]).abs() < 1e-13);
            assert!((q[i] - q2[i]).abs() < 1e-13);
        }
    }
}
