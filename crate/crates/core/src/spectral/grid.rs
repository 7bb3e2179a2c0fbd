use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::spectral::transform::Fft3;

/// Periodic box [0, L)^3 sampled with `n` points (and `n` Fourier modes) per axis.
///
/// Coefficients are stored in FFT order: flat index `(a * n + b) * n + c` holds the
/// mode with integer wavevector `(n(a), n(b), n(c))` where `n(i) = i` for `i <= n/2`
/// and `i - n` otherwise, so each axis covers `[-n/2 + 1, n/2]`.
pub struct TorusGrid {
    n: usize,
    period: f64,
    dealias_fraction: f64,
    cutoff: usize,
    // per-axis data, indexed by storage position
    index_to_mode: Vec<i64>,
    wavenumber: Vec<f64>,
    derivative_wavenumber: Vec<f64>,
    // per-mode data, flat
    k_sq: Vec<f64>,
    mask: Vec<bool>,
    partner: Vec<usize>,
    fft: Fft3,
}

/// Builds a grid; see [`TorusGrid`] for the lattice layout.
///
/// The dealias mask keeps modes with every `|n_i| <= floor(dealias_fraction * n / 2)`.
/// Quadratic products are alias-free on the retained band only when three times the
/// cutoff is below `n` (true for the 2/3 rule whenever `n` is not a multiple of 3).
pub fn make_grid(n: usize, period: f64, dealias_fraction: f64) -> Result<Arc<TorusGrid>> {
    if n < 4 || !n.is_multiple_of(2) {
        return Err(Error::InvalidGrid(format!(
            "resolution must be even and >= 4, got {n}"
        )));
    }
    if !(period.is_finite() && period > 0.0) {
        return Err(Error::InvalidGrid(format!(
            "period must be positive, got {period}"
        )));
    }
    if !(dealias_fraction > 0.0 && dealias_fraction <= 1.0) {
        return Err(Error::InvalidGrid(format!(
            "dealias fraction must lie in (0, 1], got {dealias_fraction}"
        )));
    }

    let half = n / 2;
    // guard against 2/3 * 3 landing a hair below 2
    let cutoff = (dealias_fraction * half as f64 + 1e-9).floor() as usize;
    let unit = 2.0 * PI / period;

    let index_to_mode: Vec<i64> = (0..n)
        .map(|i| {
            if i <= half {
                i as i64
            } else {
                i as i64 - n as i64
            }
        })
        .collect();
    let wavenumber: Vec<f64> = index_to_mode.iter().map(|&m| unit * m as f64).collect();
    // the Nyquist mode has no conjugate partner of opposite sign; odd operators drop it
    let derivative_wavenumber: Vec<f64> = index_to_mode
        .iter()
        .map(|&m| {
            if m as usize == half {
                0.0
            } else {
                unit * m as f64
            }
        })
        .collect();

    let total = n * n * n;
    let mut k_sq = Vec::with_capacity(total);
    let mut mask = Vec::with_capacity(total);
    let mut partner = Vec::with_capacity(total);
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                k_sq.push(wavenumber[a].powi(2) + wavenumber[b].powi(2) + wavenumber[c].powi(2));
                let keep = [a, b, c]
                    .iter()
                    .all(|&i| index_to_mode[i].unsigned_abs() as usize <= cutoff);
                mask.push(keep);
                let (pa, pb, pc) = ((n - a) % n, (n - b) % n, (n - c) % n);
                partner.push((pa * n + pb) * n + pc);
            }
        }
    }

    Ok(Arc::new(TorusGrid {
        n,
        period,
        dealias_fraction,
        cutoff,
        index_to_mode,
        wavenumber,
        derivative_wavenumber,
        k_sq,
        mask,
        partner,
        fft: Fft3::new(n),
    }))
}

impl TorusGrid {
    pub fn resolution(&self) -> usize {
        self.n
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn dealias_fraction(&self) -> f64 {
        self.dealias_fraction
    }

    /// Largest retained `|n_i|` under the dealias mask.
    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    /// Number of lattice modes (= number of physical grid points).
    pub fn len(&self) -> usize {
        self.k_sq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k_sq.is_empty()
    }

    /// Domain volume L^3.
    pub fn volume(&self) -> f64 {
        self.period.powi(3)
    }

    /// Integer wavevector of a flat index.
    pub fn mode(&self, idx: usize) -> [i64; 3] {
        let (a, b, c) = self.split(idx);
        [
            self.index_to_mode[a],
            self.index_to_mode[b],
            self.index_to_mode[c],
        ]
    }

    /// Physical wavevector `k = (2 pi / L) n` of a flat index.
    pub fn wavevector(&self, idx: usize) -> [f64; 3] {
        let (a, b, c) = self.split(idx);
        [self.wavenumber[a], self.wavenumber[b], self.wavenumber[c]]
    }

    /// Wavevector used by first-derivative operators (Nyquist components zeroed).
    pub fn derivative_wavevector(&self, idx: usize) -> [f64; 3] {
        let (a, b, c) = self.split(idx);
        [
            self.derivative_wavenumber[a],
            self.derivative_wavenumber[b],
            self.derivative_wavenumber[c],
        ]
    }

    pub fn k_sq(&self) -> &[f64] {
        &self.k_sq
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    /// Flat index of the mode `-k`.
    pub fn partner(&self, idx: usize) -> usize {
        self.partner[idx]
    }

    /// Flat index of an integer wavevector, if it lies on the lattice.
    pub fn index_of(&self, mode: [i64; 3]) -> Option<usize> {
        let n = self.n as i64;
        let mut out = 0usize;
        for m in mode {
            if m <= -n / 2 || m > n / 2 {
                return None;
            }
            let i = if m < 0 { m + n } else { m } as usize;
            out = out * self.n + i;
        }
        Some(out)
    }

    /// Physical coordinate of grid point `i` along an axis.
    pub fn coordinate(&self, i: usize) -> f64 {
        self.period * i as f64 / self.n as f64
    }

    pub(crate) fn fft(&self) -> &Fft3 {
        &self.fft
    }

    /// Same lattice, period and mask.
    pub fn same_as(&self, other: &TorusGrid) -> bool {
        std::ptr::eq(self, other)
            || (self.n == other.n
                && self.period == other.period
                && self.dealias_fraction == other.dealias_fraction)
    }

    #[inline]
    fn split(&self, idx: usize) -> (usize, usize, usize) {
        let n = self.n;
        (idx / (n * n), (idx / n) % n, idx % n)
    }
}

impl fmt::Debug for TorusGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TorusGrid")
            .field("n", &self.n)
            .field("period", &self.period)
            .field("dealias_fraction", &self.dealias_fraction)
            .field("cutoff", &self.cutoff)
            .finish()
    }
}
