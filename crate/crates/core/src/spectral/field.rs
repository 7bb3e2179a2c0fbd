use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::grid::TorusGrid;
use crate::spectral::sum::CompensatedSum;
use crate::spectral::transform::{from_physical_pair, to_physical_pair};

/// Tensor rank of a field. Rank-2 components are stored row-major, `T_ij` at `3 i + j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldKind {
    Scalar,
    Vector,
    Tensor,
}

impl FieldKind {
    pub fn components(self) -> usize {
        match self {
            FieldKind::Scalar => 1,
            FieldKind::Vector => 3,
            FieldKind::Tensor => 9,
        }
    }
}

/// Fourier coefficients of a real scalar, vector or rank-2 field on a [`TorusGrid`].
#[derive(Clone)]
pub struct SpectralField {
    grid: Arc<TorusGrid>,
    kind: FieldKind,
    comps: Vec<Vec<Complex64>>,
}

impl std::fmt::Debug for SpectralField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralField")
            .field("grid", &self.grid)
            .field("kind", &self.kind)
            .field("max_amplitude", &self.max_amplitude())
            .finish()
    }
}

impl PartialEq for SpectralField {
    fn eq(&self, other: &Self) -> bool {
        self.grid.same_as(&other.grid) && self.kind == other.kind && self.comps == other.comps
    }
}

impl SpectralField {
    pub fn zeros(grid: &Arc<TorusGrid>, kind: FieldKind) -> Self {
        SpectralField {
            grid: Arc::clone(grid),
            kind,
            comps: vec![vec![Complex64::default(); grid.len()]; kind.components()],
        }
    }

    pub fn from_components(
        grid: &Arc<TorusGrid>,
        kind: FieldKind,
        comps: Vec<Vec<Complex64>>,
    ) -> Result<Self> {
        if comps.len() != kind.components() || comps.iter().any(|c| c.len() != grid.len()) {
            return Err(Error::InvalidParameter(format!(
                "{kind:?} field needs {} components of length {}",
                kind.components(),
                grid.len()
            )));
        }
        Ok(SpectralField {
            grid: Arc::clone(grid),
            kind,
            comps,
        })
    }

    /// Analyzes real point values (one `Vec` per component, grid point order).
    pub fn from_physical(
        grid: &Arc<TorusGrid>,
        kind: FieldKind,
        values: &[Vec<f64>],
    ) -> Result<Self> {
        if values.len() != kind.components() || values.iter().any(|v| v.len() != grid.len()) {
            return Err(Error::InvalidParameter(
                "physical values do not match field shape".into(),
            ));
        }
        let mut comps = Vec::with_capacity(values.len());
        for pair in values.chunks(2) {
            let (p, q) = from_physical_pair(grid, &pair[0], pair.get(1).map(|v| v.as_slice()));
            comps.push(p);
            if let Some(q) = q {
                comps.push(q);
            }
        }
        Self::from_components(grid, kind, comps)
    }

    /// Point values on the grid, one `Vec` per component.
    pub fn to_physical(&self) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(self.comps.len());
        for pair in self.comps.chunks(2) {
            let (p, q) = to_physical_pair(&self.grid, &pair[0], pair.get(1).map(|v| v.as_slice()));
            out.push(p);
            if let Some(q) = q {
                out.push(q);
            }
        }
        out
    }

    pub fn grid(&self) -> &Arc<TorusGrid> {
        &self.grid
    }

    pub fn kind(&self) -> FieldKind {
        self.kind
    }

    pub fn components(&self) -> &[Vec<Complex64>] {
        &self.comps
    }

    pub fn component(&self, i: usize) -> &[Complex64] {
        &self.comps[i]
    }

    pub fn component_mut(&mut self, i: usize) -> &mut [Complex64] {
        &mut self.comps[i]
    }

    pub fn into_components(self) -> Vec<Vec<Complex64>> {
        self.comps
    }

    /// Coefficient of component `comp` at integer wavevector `mode` (zero off-lattice).
    pub fn coefficient(&self, mode: [i64; 3], comp: usize) -> Complex64 {
        self.grid
            .index_of(mode)
            .map(|i| self.comps[comp][i])
            .unwrap_or_default()
    }

    /// Sets the coefficient at `mode` and its conjugate partner at `-mode`.
    pub fn set_mode(&mut self, mode: [i64; 3], comp: usize, value: Complex64) -> Result<()> {
        let idx = self
            .grid
            .index_of(mode)
            .ok_or_else(|| Error::InvalidParameter(format!("mode {mode:?} is off the lattice")))?;
        let partner = self.grid.partner(idx);
        if partner == idx {
            self.comps[comp][idx] = Complex64::new(value.re, 0.0);
        } else {
            self.comps[comp][idx] = value;
            self.comps[comp][partner] = value.conj();
        }
        Ok(())
    }

    pub(crate) fn check_compatible(&self, other: &SpectralField) -> Result<()> {
        if !self.grid.same_as(&other.grid) {
            return Err(Error::GridMismatch);
        }
        if self.kind != other.kind {
            return Err(Error::KindMismatch {
                expected: self.kind,
                found: other.kind,
            });
        }
        Ok(())
    }

    pub(crate) fn expect_kind(&self, kind: FieldKind) -> Result<()> {
        if self.kind != kind {
            return Err(Error::KindMismatch {
                expected: kind,
                found: self.kind,
            });
        }
        Ok(())
    }

    /// Applies `op(flat_index, coefficient)` to every coefficient of every component.
    pub fn map_modes(&self, op: impl Fn(usize, Complex64) -> Complex64 + Sync) -> Self {
        let comps = self
            .comps
            .iter()
            .map(|c| c.par_iter().enumerate().map(|(i, &z)| op(i, z)).collect())
            .collect();
        SpectralField {
            grid: Arc::clone(&self.grid),
            kind: self.kind,
            comps,
        }
    }

    /// Multiplies every component by the real diagonal symbol `symbol(flat_index)`.
    pub fn multiply_symbol(&self, symbol: impl Fn(usize) -> f64 + Sync) -> Self {
        self.map_modes(|i, z| z * symbol(i))
    }

    pub fn scaled(&self, factor: f64) -> Self {
        self.map_modes(|_, z| z * factor)
    }

    /// `self + factor * other`.
    pub fn add_scaled(&self, factor: f64, other: &SpectralField) -> Result<Self> {
        self.check_compatible(other)?;
        let comps = self
            .comps
            .iter()
            .zip(&other.comps)
            .map(|(a, b)| {
                a.par_iter()
                    .zip(b.par_iter())
                    .map(|(x, y)| x + y * factor)
                    .collect()
            })
            .collect();
        Ok(SpectralField {
            grid: Arc::clone(&self.grid),
            kind: self.kind,
            comps,
        })
    }

    pub fn plus(&self, other: &SpectralField) -> Result<Self> {
        self.check_compatible(other)?;
        let comps = self
            .comps
            .iter()
            .zip(&other.comps)
            .map(|(a, b)| a.par_iter().zip(b.par_iter()).map(|(x, y)| x + y).collect())
            .collect();
        Ok(SpectralField {
            grid: Arc::clone(&self.grid),
            kind: self.kind,
            comps,
        })
    }

    pub fn minus(&self, other: &SpectralField) -> Result<Self> {
        self.add_scaled(-1.0, other)
    }

    /// L2 inner product `(f, g) = L^3 sum_k Re(f_k conj(g_k))`, summed over components.
    pub fn inner(&self, other: &SpectralField) -> Result<f64> {
        self.check_compatible(other)?;
        let mut acc = CompensatedSum::new();
        for (a, b) in self.comps.iter().zip(&other.comps) {
            for (x, y) in a.iter().zip(b) {
                acc.add(x.re * y.re + x.im * y.im);
            }
        }
        Ok(acc.value() * self.grid.volume())
    }

    pub fn max_amplitude(&self) -> f64 {
        self.comps
            .iter()
            .flat_map(|c| c.iter())
            .fold(0.0_f64, |m, z| m.max(z.norm()))
    }

    pub fn is_finite(&self) -> bool {
        self.comps
            .iter()
            .flat_map(|c| c.iter())
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Largest `|f(k) - conj f(-k)|` over modes and components.
    pub fn conjugate_asymmetry(&self) -> f64 {
        let g = &self.grid;
        self.comps
            .iter()
            .flat_map(|c| (0..c.len()).map(move |i| (c[i] - c[g.partner(i)].conj()).norm()))
            .fold(0.0, f64::max)
    }

    /// Largest `|k . f(k)|` for a vector field, with the derivative wavevector.
    pub fn max_divergence(&self) -> f64 {
        if self.kind != FieldKind::Vector {
            return 0.0;
        }
        (0..self.grid.len())
            .map(|i| {
                let k = self.grid.derivative_wavevector(i);
                (self.comps[0][i] * k[0] + self.comps[1][i] * k[1] + self.comps[2][i] * k[2]).norm()
            })
            .fold(0.0, f64::max)
    }

    /// Largest magnitude of the k = 0 coefficient over components.
    pub fn mean_magnitude(&self) -> f64 {
        self.comps.iter().map(|c| c[0].norm()).fold(0.0, f64::max)
    }

    pub fn is_zero_mean(&self) -> bool {
        self.comps.iter().all(|c| c[0] == Complex64::default())
    }

    /// Replaces each coefficient by `(f(k) + conj f(-k)) / 2`.
    pub fn symmetrized(&self) -> Self {
        let g = Arc::clone(&self.grid);
        let comps = self
            .comps
            .iter()
            .map(|c| {
                (0..c.len())
                    .into_par_iter()
                    .map(|i| (c[i] + c[g.partner(i)].conj()) * 0.5)
                    .collect()
            })
            .collect();
        SpectralField {
            grid: g,
            kind: self.kind,
            comps,
        }
    }

    /// Zeroes every mode outside the dealias mask.
    pub fn masked(&self) -> Self {
        let mask = self.grid.mask();
        self.map_modes(|i, z| if mask[i] { z } else { Complex64::default() })
    }

    /// Zeroes the k = 0 coefficient.
    pub fn without_mean(&self) -> Self {
        let mut out = self.clone();
        for c in out.comps.iter_mut() {
            c[0] = Complex64::default();
        }
        out
    }
}
