use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::field::{FieldKind, SpectralField};
use crate::spectral::sum::CompensatedSum;

/// Sobolev exponent with the choice of weight: `(1 + |k|^2)^s` (full) or `|k|^{2s}`
/// (homogeneous seminorm).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SobolevIndex {
    pub s: f64,
    pub homogeneous: bool,
}

impl SobolevIndex {
    pub fn full(s: f64) -> Self {
        SobolevIndex {
            s,
            homogeneous: false,
        }
    }

    pub fn homogeneous(s: f64) -> Self {
        SobolevIndex {
            s,
            homogeneous: true,
        }
    }

    pub const L2: SobolevIndex = SobolevIndex {
        s: 0.0,
        homogeneous: false,
    };

    /// Short name: `h{s}` for the full norm, `hdot{s}` for the seminorm.
    pub fn label(&self) -> String {
        format!("{}{}", if self.homogeneous { "hdot" } else { "h" }, self.s)
    }

    /// Squared-norm weight at `|k|^2 = k_sq`.
    #[inline]
    pub fn weight(&self, k_sq: f64) -> f64 {
        if self.homogeneous {
            if k_sq == 0.0 {
                // the seminorm ignores the mean, except for s = 0
                if self.s == 0.0 {
                    1.0
                } else {
                    0.0
                }
            } else {
                k_sq.powf(self.s)
            }
        } else {
            (1.0 + k_sq).powf(self.s)
        }
    }
}

/// Squared Sobolev norm, `L^3 sum_k w(k) |f(k)|^2` over all components.
pub fn sobolev_norm_sq(f: &SpectralField, idx: SobolevIndex) -> f64 {
    let k_sq = f.grid().k_sq();
    let weights: Vec<f64> = k_sq.iter().map(|&q| idx.weight(q)).collect();
    let mut acc = CompensatedSum::new();
    for c in f.components() {
        for (z, w) in c.iter().zip(&weights) {
            if *w != 0.0 {
                acc.add(w * z.norm_sqr());
            }
        }
    }
    acc.value() * f.grid().volume()
}

/// Sobolev norm normalized so that the full `s = 0` norm is the continuum L2 norm.
pub fn sobolev_norm(f: &SpectralField, idx: SobolevIndex) -> f64 {
    sobolev_norm_sq(f, idx).sqrt()
}

/// Removes the wavevector-parallel part of every nonzero mode.
pub fn leray_project(v: &SpectralField) -> Result<SpectralField> {
    v.expect_kind(FieldKind::Vector)?;
    let grid = v.grid().clone();
    let mut comps = v.components().to_vec();
    for i in 0..grid.len() {
        // same wavevector as the derivative operators so that div P v = 0 exactly
        let k = grid.derivative_wavevector(i);
        let k_sq = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        if k_sq == 0.0 {
            continue;
        }
        let kv = comps[0][i] * k[0] + comps[1][i] * k[1] + comps[2][i] * k[2];
        let s = kv / k_sq;
        for (comp, kd) in comps.iter_mut().zip(k) {
            comp[i] -= s * kd;
        }
    }
    SpectralField::from_components(&grid, FieldKind::Vector, comps)
}

/// Spectral partial derivative along `axis` (multiplication by `i k_axis`).
pub fn derivative(f: &SpectralField, axis: usize) -> Result<SpectralField> {
    if axis > 2 {
        return Err(Error::InvalidParameter(format!("axis {axis} out of range")));
    }
    let grid = f.grid().clone();
    Ok(f.map_modes(|i, z| {
        let k = grid.derivative_wavevector(i)[axis];
        Complex64::new(-z.im * k, z.re * k)
    }))
}

/// Divergence of a vector field (scalar) or of a rank-2 field over its first index
/// (vector): `(div T)_j = sum_i d_i T_ij`.
pub fn divergence(f: &SpectralField) -> Result<SpectralField> {
    let grid = f.grid().clone();
    match f.kind() {
        FieldKind::Vector => {
            let mut out = vec![Complex64::default(); grid.len()];
            for (i, o) in out.iter_mut().enumerate() {
                let k = grid.derivative_wavevector(i);
                let s =
                    f.component(0)[i] * k[0] + f.component(1)[i] * k[1] + f.component(2)[i] * k[2];
                *o = Complex64::new(-s.im, s.re);
            }
            SpectralField::from_components(&grid, FieldKind::Scalar, vec![out])
        }
        FieldKind::Tensor => {
            let mut comps = vec![vec![Complex64::default(); grid.len()]; 3];
            for i in 0..grid.len() {
                let k = grid.derivative_wavevector(i);
                for (j, comp) in comps.iter_mut().enumerate() {
                    let s = f.component(j)[i] * k[0]
                        + f.component(3 + j)[i] * k[1]
                        + f.component(6 + j)[i] * k[2];
                    comp[i] = Complex64::new(-s.im, s.re);
                }
            }
            SpectralField::from_components(&grid, FieldKind::Vector, comps)
        }
        FieldKind::Scalar => Err(Error::KindMismatch {
            expected: FieldKind::Vector,
            found: FieldKind::Scalar,
        }),
    }
}

/// Gradient of a scalar field.
pub fn gradient(f: &SpectralField) -> Result<SpectralField> {
    f.expect_kind(FieldKind::Scalar)?;
    let comps = (0..3)
        .map(|axis| derivative(f, axis).map(|d| d.into_components().remove(0)))
        .collect::<Result<Vec<_>>>()?;
    SpectralField::from_components(f.grid(), FieldKind::Vector, comps)
}

/// Pseudo-spectral product of two real fields: inputs masked, multiplied pointwise,
/// transformed back and masked again.
///
/// Scalar*scalar gives a scalar, scalar*vector a vector and vector*vector the
/// outer product `T_ij = a_i b_j`.
pub fn dealiased_product(a: &SpectralField, b: &SpectralField) -> Result<SpectralField> {
    if !a.grid().same_as(b.grid()) {
        return Err(Error::GridMismatch);
    }
    let out_kind = match (a.kind(), b.kind()) {
        (FieldKind::Scalar, FieldKind::Scalar) => FieldKind::Scalar,
        (FieldKind::Scalar, FieldKind::Vector) | (FieldKind::Vector, FieldKind::Scalar) => {
            FieldKind::Vector
        }
        (FieldKind::Vector, FieldKind::Vector) => FieldKind::Tensor,
        _ => {
            return Err(Error::KindMismatch {
                expected: FieldKind::Vector,
                found: FieldKind::Tensor,
            })
        }
    };
    let pa = a.masked().to_physical();
    let pb = b.masked().to_physical();
    let pointwise =
        |x: &Vec<f64>, y: &Vec<f64>| -> Vec<f64> { x.iter().zip(y).map(|(p, q)| p * q).collect() };
    let products: Vec<Vec<f64>> = match (a.kind(), b.kind()) {
        (FieldKind::Scalar, _) => pb.iter().map(|y| pointwise(&pa[0], y)).collect(),
        (_, FieldKind::Scalar) => pa.iter().map(|x| pointwise(x, &pb[0])).collect(),
        _ => pa
            .iter()
            .flat_map(|x| pb.iter().map(move |y| pointwise(x, y)))
            .collect(),
    };
    Ok(SpectralField::from_physical(a.grid(), out_kind, &products)?.masked())
}
