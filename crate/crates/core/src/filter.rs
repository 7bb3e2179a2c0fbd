//! Fractional Helmholtz filter `(I + alpha^{2 theta} (-Laplacian)^theta)^{-1}` and its
//! companion estimates.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{sobolev_norm, SobolevIndex, SpectralField, TorusGrid};

/// Averaging radius `alpha` and regularization exponent `theta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterParams {
    pub alpha: f64,
    pub theta: f64,
}

impl FilterParams {
    pub const CRITICAL_THETA: f64 = 1.0 / 6.0;
    pub const CLASSICAL_THETA: f64 = 1.0;

    pub fn new(alpha: f64, theta: f64) -> Result<Self> {
        let p = FilterParams { alpha, theta };
        p.validate()?;
        Ok(p)
    }

    /// The critical exponent `theta = 1/6`.
    pub fn critical(alpha: f64) -> Result<Self> {
        Self::new(alpha, Self::CRITICAL_THETA)
    }

    /// `theta = 1`, the classical differential filter.
    pub fn classical(alpha: f64) -> Result<Self> {
        Self::new(alpha, Self::CLASSICAL_THETA)
    }

    pub fn identity() -> Self {
        FilterParams {
            alpha: 0.0,
            theta: Self::CRITICAL_THETA,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha must be finite and >= 0, got {}",
                self.alpha
            )));
        }
        if !(self.theta.is_finite() && self.theta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "theta must be finite and > 0, got {}",
                self.theta
            )));
        }
        Ok(())
    }

    /// `alpha^{2 theta}`, the prefactor of the fractional Laplacian.
    pub fn strength(&self) -> f64 {
        self.alpha.powf(2.0 * self.theta)
    }

    pub fn with_alpha(&self, alpha: f64) -> Self {
        FilterParams { alpha, ..*self }
    }
}

/// Filter symbol `1 / (1 + alpha^{2 theta} |k|^{2 theta})` at `|k|^2 = k_sq`.
#[inline]
pub fn filter_multiplier(k_sq: f64, p: &FilterParams) -> f64 {
    1.0 / inverse_multiplier(k_sq, p)
}

/// Symbol of the inverse filter, `1 + alpha^{2 theta} |k|^{2 theta}`.
#[inline]
pub fn inverse_multiplier(k_sq: f64, p: &FilterParams) -> f64 {
    1.0 + p.strength() * k_sq.powf(p.theta)
}

/// Filter symbol tabulated over a grid's modes.
pub fn filter_symbol(grid: &TorusGrid, p: &FilterParams) -> Vec<f64> {
    grid.k_sq()
        .iter()
        .map(|&q| filter_multiplier(q, p))
        .collect()
}

pub fn apply_filter(f: &SpectralField, p: &FilterParams) -> SpectralField {
    let k_sq = f.grid().k_sq();
    f.multiply_symbol(|i| filter_multiplier(k_sq[i], p))
}

/// Multiplies by the inverse symbol: `f + alpha^{2 theta} (-Laplacian)^theta f`.
pub fn inverse_shift(f: &SpectralField, p: &FilterParams) -> SpectralField {
    let k_sq = f.grid().k_sq();
    f.multiply_symbol(|i| inverse_multiplier(k_sq[i], p))
}

/// Both sides of `||f_bar - f||_s <= alpha^{2 theta} ||f_bar||_{s + 2 theta}` (full norms).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeviationBound {
    pub lhs: f64,
    pub rhs: f64,
}

impl DeviationBound {
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs * (1.0 + 1e-12)
    }
}

pub fn filter_deviation_bound(
    f: &SpectralField,
    s: f64,
    p: &FilterParams,
) -> Result<DeviationBound> {
    p.validate()?;
    if p.alpha == 0.0 {
        return Err(Error::DegenerateFilter);
    }
    let filtered = apply_filter(f, p);
    let deviation = filtered.minus(f)?;
    Ok(DeviationBound {
        lhs: sobolev_norm(&deviation, SobolevIndex::full(s)),
        rhs: p.strength() * sobolev_norm(&filtered, SobolevIndex::full(s + 2.0 * p.theta)),
    })
}

/// Outcome of the per-mode scan of `|k|^beta m(k) <= alpha^{-beta}` and `m(k) <= 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub alpha: f64,
    pub theta: f64,
    pub beta: f64,
    /// `max_k alpha^beta |k|^beta m(k)`; the bound holds when this is at most 1.
    pub max_ratio: f64,
    pub argmax_mode: [i64; 3],
    /// `max_k m(k)`.
    pub max_symbol: f64,
    pub modes_checked: usize,
    pub tolerance: f64,
    pub pass: bool,
}

/// Relative slack allowed on the exact per-mode inequalities.
pub const LEMMA_TOLERANCE: f64 = 1e-14;

/// Scans every retained wavevector of `grid` (homogeneous weights).
pub fn verify_lemma_bounds(
    grid: &Arc<TorusGrid>,
    p: &FilterParams,
    beta: f64,
) -> Result<LemmaReport> {
    p.validate()?;
    if p.alpha <= 0.0 {
        return Err(Error::InvalidParameter("lemma scan needs alpha > 0".into()));
    }
    if !(0.0..=2.0 * p.theta).contains(&beta) {
        return Err(Error::InvalidParameter(format!(
            "beta = {beta} outside [0, 2 theta] = [0, {}]",
            2.0 * p.theta
        )));
    }
    let scale = p.alpha.powf(beta);
    let mut max_ratio = f64::NEG_INFINITY;
    let mut max_symbol = f64::NEG_INFINITY;
    let mut argmax = [0i64; 3];
    let mut checked = 0usize;
    for (idx, (&k_sq, &keep)) in grid.k_sq().iter().zip(grid.mask()).enumerate() {
        if !keep {
            continue;
        }
        checked += 1;
        let m = filter_multiplier(k_sq, p);
        // |k|^beta with 0^0 = 1
        let ratio = scale * k_sq.powf(beta / 2.0) * m;
        if ratio > max_ratio {
            max_ratio = ratio;
            argmax = grid.mode(idx);
        }
        max_symbol = max_symbol.max(m);
    }
    let pass =
        max_ratio <= 1.0 + LEMMA_TOLERANCE && max_symbol <= 1.0 + LEMMA_TOLERANCE && checked > 0;
    Ok(LemmaReport {
        alpha: p.alpha,
        theta: p.theta,
        beta,
        max_ratio,
        argmax_mode: argmax,
        max_symbol,
        modes_checked: checked,
        tolerance: LEMMA_TOLERANCE,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{derivative, make_grid, random_field, FieldKind};
    use num_complex::Complex64;
    use std::f64::consts::PI;

    fn crit(alpha: f64) -> FilterParams {
        FilterParams::critical(alpha).unwrap()
    }

    #[test]
    fn multiplier_examples() {
        assert!((filter_multiplier(1.0, &crit(1.0)) - 0.5).abs() < 1e-15);
        for k_sq in [0.0, 1.0, 17.0, 1e6] {
            assert_eq!(filter_multiplier(k_sq, &crit(0.0)), 1.0);
        }
        let p = FilterParams::classical(0.5).unwrap();
        assert!((filter_multiplier(4.0, &p) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn multiplier_is_monotone_and_bounded() {
        let p = crit(0.3);
        let mut prev = filter_multiplier(0.0, &p);
        assert_eq!(prev, 1.0);
        for i in 1..200 {
            let m = filter_multiplier(i as f64 * 0.7, &p);
            assert!(m > 0.0 && m < prev);
            prev = m;
        }
    }

    #[test]
    fn rejects_bad_params() {
        assert!(FilterParams::new(-0.1, 1.0).is_err());
        assert!(FilterParams::new(0.1, 0.0).is_err());
        assert!(FilterParams::new(f64::NAN, 1.0).is_err());
    }

    fn unit_mode() -> SpectralField {
        let g = make_grid(8, 2.0 * PI, 2.0 / 3.0).unwrap();
        let mut f = SpectralField::zeros(&g, FieldKind::Scalar);
        f.set_mode([0, 1, 0], 0, Complex64::new(0.3, 0.4)).unwrap();
        f
    }

    #[test]
    fn unit_mode_halved_and_doubled() {
        let f = unit_mode();
        let bar = apply_filter(&f, &crit(1.0));
        assert!((bar.coefficient([0, 1, 0], 0) - Complex64::new(0.15, 0.2)).norm() < 1e-15);
        let up = inverse_shift(&f, &crit(1.0));
        assert!((up.coefficient([0, 1, 0], 0) - Complex64::new(0.6, 0.8)).norm() < 1e-15);
        assert_eq!(inverse_shift(&f, &crit(0.0)), f);
        assert_eq!(apply_filter(&f, &crit(0.0)), f);
    }

    #[test]
    fn filter_commutes_with_derivative() {
        let g = make_grid(8, 2.0 * PI, 2.0 / 3.0).unwrap();
        let f = random_field(&g, FieldKind::Vector, 4);
        let p = crit(0.2);
        for axis in 0..3 {
            let a = apply_filter(&derivative(&f, axis).unwrap(), &p);
            let b = derivative(&apply_filter(&f, &p), axis).unwrap();
            let diff = a.minus(&b).unwrap().max_amplitude();
            assert!(diff <= 1e-14 * a.max_amplitude());
        }
    }

    #[test]
    fn inverse_shift_undoes_filter() {
        let g = make_grid(8, 2.0 * PI, 2.0 / 3.0).unwrap();
        let f = random_field(&g, FieldKind::Vector, 9);
        for p in [crit(0.1), crit(1.0), FilterParams::classical(0.4).unwrap()] {
            let back = inverse_shift(&apply_filter(&f, &p), &p);
            let err = back.minus(&f).unwrap().max_amplitude();
            assert!(err <= 1e-13 * f.max_amplitude());
        }
    }

    #[test]
    fn filtering_shrinks_norms() {
        let g = make_grid(8, 2.0 * PI, 2.0 / 3.0).unwrap();
        let f = random_field(&g, FieldKind::Vector, 2);
        let bar = apply_filter(&f, &crit(0.5));
        for s in [0.0, 1.0 / 6.0, 1.0] {
            let idx = SobolevIndex::full(s);
            assert!(sobolev_norm(&bar, idx) <= sobolev_norm(&f, idx));
        }
    }

    #[test]
    fn deviation_bound_unit_mode() {
        let f = unit_mode();
        let amp = (0.3f64.powi(2) + 0.4f64.powi(2)).sqrt();
        let b = filter_deviation_bound(&f, 0.0, &crit(1.0)).unwrap();
        let l2_unit = sobolev_norm(&f, SobolevIndex::L2) / amp;
        assert!((b.lhs - 0.5 * amp * l2_unit).abs() < 1e-14);
        assert!((b.rhs - 2f64.powf(1.0 / 6.0) * 0.5 * amp * l2_unit).abs() < 1e-14);
        assert!(b.holds() && b.lhs < b.rhs);
    }

    #[test]
    fn deviation_of_constant_vanishes() {
        let g = make_grid(8, 2.0 * PI, 2.0 / 3.0).unwrap();
        let mut f = SpectralField::zeros(&g, FieldKind::Scalar);
        f.component_mut(0)[0] = Complex64::new(2.0, 0.0);
        let b = filter_deviation_bound(&f, 0.5, &crit(0.3)).unwrap();
        assert_eq!(b.lhs, 0.0);
        assert!(matches!(
            filter_deviation_bound(&f, 0.0, &crit(0.0)),
            Err(Error::DegenerateFilter)
        ));
    }

    #[test]
    fn lemma_beta_zero_peaks_at_origin() {
        let g = make_grid(8, 2.0 * PI, 2.0 / 3.0).unwrap();
        let r = verify_lemma_bounds(&g, &crit(0.5), 0.0).unwrap();
        assert!(r.pass);
        assert_eq!(r.max_ratio, 1.0);
        assert_eq!(r.argmax_mode, [0, 0, 0]);
    }

    #[test]
    fn lemma_full_beta_below_one() {
        let g = make_grid(16, 2.0 * PI, 2.0 / 3.0).unwrap();
        let p = crit(1.0);
        let r = verify_lemma_bounds(&g, &p, 2.0 * p.theta).unwrap();
        assert!(r.pass && r.max_ratio < 1.0);
    }

    #[test]
    fn lemma_rejects_beta_outside_range() {
        let g = make_grid(8, 2.0 * PI, 2.0 / 3.0).unwrap();
        let p = crit(0.1);
        assert!(verify_lemma_bounds(&g, &p, -0.01).is_err());
        assert!(verify_lemma_bounds(&g, &p, 0.34).is_err());
        assert!(verify_lemma_bounds(&g, &crit(0.0), 0.1).is_err());
    }
}
