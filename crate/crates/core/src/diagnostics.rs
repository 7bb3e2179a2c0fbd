//! Spectra, difference norms, norm time series and the vanishing-filter sweep.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{sobolev_norm, CompensatedSum, SobolevIndex, SpectralField};

/// Shell energies `E(j) = 1/2 L^3 sum_{j - 1/2 <= |n| < j + 1/2} |f(k)|^2`, shells in
/// units of the fundamental wavenumber `2 pi / L`.
pub fn shell_spectrum(f: &SpectralField) -> Vec<f64> {
    let grid = f.grid();
    let unit = 2.0 * std::f64::consts::PI / grid.period();
    let shell_of = |idx: usize| (grid.k_sq()[idx].sqrt() / unit + 0.5).floor() as usize;
    let max_shell = (0..grid.len()).map(shell_of).max().unwrap_or(0);
    let mut sums = vec![CompensatedSum::new(); max_shell + 1];
    for idx in 0..grid.len() {
        let e: f64 = f.components().iter().map(|c| c[idx].norm_sqr()).sum();
        sums[shell_of(idx)].add(e);
    }
    let half_volume = 0.5 * grid.volume();
    sums.iter().map(|s| s.value() * half_volume).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifferenceNorms {
    /// Spectral L2 norm of `a - b`.
    pub l2: f64,
    /// `(p, ||a - b||_p)` by grid quadrature of the pointwise magnitude.
    pub lp: Vec<(f64, f64)>,
}

impl DifferenceNorms {
    pub fn lp(&self, p: f64) -> Option<f64> {
        self.lp.iter().find(|(q, _)| *q == p).map(|(_, v)| *v)
    }
}

pub fn difference_norms(
    a: &SpectralField,
    b: &SpectralField,
    p_list: &[f64],
) -> Result<DifferenceNorms> {
    if let Some(p) = p_list.iter().find(|p| !(p.is_finite() && **p >= 1.0)) {
        return Err(Error::InvalidParameter(format!(
            "L^p exponent {p} must be >= 1"
        )));
    }
    let diff = a.minus(b)?;
    let l2 = sobolev_norm(&diff, SobolevIndex::L2);
    let lp = if p_list.is_empty() {
        Vec::new()
    } else {
        let grid = diff.grid();
        let values = diff.to_physical();
        let magnitude: Vec<f64> = (0..grid.len())
            .map(|i| values.iter().map(|c| c[i] * c[i]).sum::<f64>().sqrt())
            .collect();
        let cell = grid.volume() / grid.len() as f64;
        p_list
            .iter()
            .map(|&p| {
                let s = magnitude
                    .iter()
                    .map(|m| m.powf(p))
                    .collect::<CompensatedSum>()
                    .value();
                (p, (cell * s).powf(1.0 / p))
            })
            .collect()
    };
    Ok(DifferenceNorms { l2, lp })
}

/// Sobolev norms of named fields sampled over time.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct NormSeries {
    pub times: Vec<f64>,
    /// `(field name, index, values)`, one entry per requested pair.
    pub series: Vec<(String, SobolevIndex, Vec<f64>)>,
}

impl NormSeries {
    pub fn new(requests: &[(&str, SobolevIndex)]) -> Self {
        NormSeries {
            times: Vec::new(),
            series: requests
                .iter()
                .map(|(name, idx)| (name.to_string(), *idx, Vec::new()))
                .collect(),
        }
    }

    /// Records one time level; `lookup` maps field names to fields.
    pub fn record<'a>(&mut self, time: f64, lookup: impl Fn(&str) -> Option<&'a SpectralField>) {
        self.times.push(time);
        for (name, idx, values) in self.series.iter_mut() {
            values.push(lookup(name).map_or(f64::NAN, |f| sobolev_norm(f, *idx)));
        }
    }

    /// Long-format rows `(time, field, norm label, value)`.
    pub fn rows(&self) -> Vec<(f64, String, String, f64)> {
        let mut out = Vec::new();
        for (t_idx, &t) in self.times.iter().enumerate() {
            for (name, idx, values) in &self.series {
                out.push((t, name.clone(), idx.label(), values[t_idx]));
            }
        }
        out
    }
}

/// Final fields of one run, by name (e.g. "velocity", "pressure", "magnetic").
#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub fields: Vec<(String, SpectralField)>,
}

impl SweepOutcome {
    pub fn get(&self, name: &str) -> Option<&SpectralField> {
        self.fields.iter().find(|(n, _)| n == name).map(|(_, f)| f)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldError {
    pub field: String,
    pub norms: DifferenceNorms,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRecord {
    pub alpha: f64,
    /// Errors against the reference run, one per field, empty when the run failed.
    pub errors: Vec<FieldError>,
    /// Failure message when the run diverged or errored.
    pub failure: Option<String>,
    pub wall_seconds: f64,
}

impl ConvergenceRecord {
    pub fn error(&self, field: &str) -> Option<&DifferenceNorms> {
        self.errors
            .iter()
            .find(|e| e.field == field)
            .map(|e| &e.norms)
    }

    /// L2 error of the named field, the primary sweep measure.
    pub fn error_l2(&self, field: &str) -> Option<f64> {
        self.error(field).map(|n| n.l2)
    }
}

/// Runs `run(alpha)` for each alpha and measures the final fields against `reference`.
///
/// Alphas must be strictly decreasing and positive. A failed run is recorded and the
/// sweep continues. Runs are spread over `workers` threads; records come back in
/// alpha order.
pub fn alpha_sweep<F>(
    alphas: &[f64],
    reference: &SweepOutcome,
    lp: &[f64],
    workers: usize,
    run: F,
) -> Result<Vec<ConvergenceRecord>>
where
    F: Fn(f64) -> Result<SweepOutcome> + Sync,
{
    validate_alphas(alphas)?;
    let measure = |alpha: f64| -> ConvergenceRecord {
        let start = Instant::now();
        let outcome = run(alpha).and_then(|out| {
            reference
                .fields
                .iter()
                .map(|(name, refield)| {
                    let field = out.get(name).ok_or_else(|| {
                        Error::InvalidParameter(format!("run produced no field {name:?}"))
                    })?;
                    Ok(FieldError {
                        field: name.clone(),
                        norms: difference_norms(field, refield, lp)?,
                    })
                })
                .collect::<Result<Vec<_>>>()
        });
        let wall_seconds = start.elapsed().as_secs_f64();
        match outcome {
            Ok(errors) => ConvergenceRecord {
                alpha,
                errors,
                failure: None,
                wall_seconds,
            },
            Err(e) => ConvergenceRecord {
                alpha,
                errors: Vec::new(),
                failure: Some(e.to_string()),
                wall_seconds,
            },
        }
    };
    if workers <= 1 {
        return Ok(alphas.iter().map(|&a| measure(a)).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    Ok(pool.install(|| alphas.par_iter().map(|&a| measure(a)).collect()))
}

pub fn validate_alphas(alphas: &[f64]) -> Result<()> {
    if alphas.is_empty() {
        return Err(Error::InvalidParameter("alpha list is empty".into()));
    }
    if let Some(a) = alphas.iter().find(|a| !(a.is_finite() && **a > 0.0)) {
        return Err(Error::InvalidParameter(format!(
            "sweep alphas must be > 0 (the reference run is alpha = 0), got {a}"
        )));
    }
    if alphas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParameter(
            "sweep alphas must be strictly decreasing".into(),
        ));
    }
    Ok(())
}

/// Monotonicity and log-log slope of one field's L2 error along a sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSummary {
    pub field: String,
    pub strictly_decreasing: bool,
    /// Least-squares slope of `ln error` against `ln alpha`; `None` with fewer than two
    /// positive errors.
    pub slope: Option<f64>,
    pub complete: bool,
}

pub fn summarize_sweep(records: &[ConvergenceRecord], field: &str) -> SweepSummary {
    let errors: Vec<Option<f64>> = records.iter().map(|r| r.error_l2(field)).collect();
    let complete = errors.iter().all(Option::is_some);
    let values: Vec<f64> = errors.iter().flatten().copied().collect();
    let strictly_decreasing = complete && values.windows(2).all(|w| w[1] < w[0]);
    let points: Vec<(f64, f64)> = records
        .iter()
        .zip(&errors)
        .filter_map(|(r, e)| e.filter(|v| *v > 0.0).map(|v| (r.alpha.ln(), v.ln())))
        .collect();
    SweepSummary {
        field: field.to_string(),
        strictly_decreasing,
        slope: least_squares_slope(&points),
        complete,
    }
}

pub fn least_squares_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{make_grid, random_field, FieldKind};
    use num_complex::Complex64;
    use std::f64::consts::PI;

    #[test]
    fn unit_mode_energy_in_first_shell() {
        let g = make_grid(8, 2.0 * PI, 2.0 / 3.0).unwrap();
        let mut f = SpectralField::zeros(&g, FieldKind::Vector);
        f.set_mode([0, 0, 1], 0, Complex64::new(1.0, 0.0)).unwrap();
        let e = shell_spectrum(&f);
        let total: f64 = e.iter().sum();
        assert!((e[1] - total).abs() < 1e-15 * total);
        assert!(e[1] > 0.0);
    }

    #[test]
    fn zero_field_zero_spectrum() {
        let g = make_grid(8, 2.0 * PI, 2.0 / 3.0).unwrap();
        let f = SpectralField::zeros(&g, FieldKind::Vector);
        assert!(shell_spectrum(&f).iter().all(|&e| e == 0.0));
    }

    #[test]
    fn difference_norm_identities() {
        let g = make_grid(8, 2.0 * PI, 2.0 / 3.0).unwrap();
        let a = random_field(&g, FieldKind::Vector, 1);
        let zero = SpectralField::zeros(&g, FieldKind::Vector);
        let p = [2.0, 3.0];
        let same = difference_norms(&a, &a, &p).unwrap();
        assert_eq!(same.l2, 0.0);
        assert!(same.lp.iter().all(|(_, v)| *v == 0.0));

        let na = difference_norms(&a, &zero, &p).unwrap();
        assert!((na.l2 - sobolev_norm(&a, SobolevIndex::L2)).abs() < 1e-13 * na.l2);
        // grid quadrature of |f|^2 is exact for the discrete field
        assert!((na.lp(2.0).unwrap() - na.l2).abs() < 1e-12 * na.l2);

        let n2a = difference_norms(&a.scaled(2.0), &zero, &p).unwrap();
        assert!((n2a.l2 - 2.0 * na.l2).abs() < 1e-13 * na.l2);
        for (x, y) in n2a.lp.iter().zip(&na.lp) {
            assert!((x.1 - 2.0 * y.1).abs() < 1e-12 * y.1);
        }
        assert!(difference_norms(&a, &zero, &[0.5]).is_err());
    }

    #[test]
    fn alpha_list_validation() {
        assert!(validate_alphas(&[0.4, 0.2, 0.1]).is_ok());
        assert!(validate_alphas(&[0.0, 0.2]).is_err());
        assert!(validate_alphas(&[0.1, 0.2]).is_err());
        assert!(validate_alphas(&[0.2, 0.2]).is_err());
        assert!(validate_alphas(&[]).is_err());
    }

    #[test]
    fn slope_of_power_law() {
        let pts: Vec<(f64, f64)> = [0.4f64, 0.2, 0.1]
            .iter()
            .map(|a| (a.ln(), (3.0 * a.powf(0.5)).ln()))
            .collect();
        assert!((least_squares_slope(&pts).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn failed_runs_are_flagged() {
        let g = make_grid(4, 2.0 * PI, 1.0).unwrap();
        let reference = SweepOutcome {
            fields: vec![(
                "velocity".into(),
                SpectralField::zeros(&g, FieldKind::Vector),
            )],
        };
        let recs = alpha_sweep(&[0.2, 0.1], &reference, &[2.0], 1, |a| {
            if a < 0.15 {
                Err(Error::InvalidParameter("boom".into()))
            } else {
                Ok(reference.clone())
            }
        })
        .unwrap();
        assert!(recs[0].failure.is_none());
        assert_eq!(recs[0].error_l2("velocity"), Some(0.0));
        assert!(recs[1].failure.is_some());
        let s = summarize_sweep(&recs, "velocity");
        assert!(!s.complete && !s.strictly_decreasing);
    }
}
