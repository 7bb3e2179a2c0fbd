//! Energy bookkeeping for the filtered models.
//!
//! The model energy is `E = 1/2 (||w||^2 + alpha^{2 theta} ||w||^2_{H^theta})`, the
//! quantity whose rate of change is the inner product of `w_t` with the
//! inverse-filtered state. Time integrals of dissipation and forcing power use the
//! trapezoid rule with Euler-Maclaurin endpoint corrections, fourth-order accurate on
//! uniformly spaced samples.

use serde::{Deserialize, Serialize};

use crate::filter::{inverse_shift, FilterParams};
use crate::spectral::{sobolev_norm_sq, CompensatedSum, SobolevIndex, SpectralField};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBudget {
    pub time: f64,
    /// `alpha`-weighted model energy; the budget closes for this one.
    pub model_energy: f64,
    /// `1/2 (||w||^2 + ||w||^2_{H^theta})` without the `alpha^{2 theta}` prefactor.
    pub energy_unweighted: f64,
    pub dissipation_rate: f64,
    pub kinetic_dissipation: f64,
    pub magnetic_dissipation: f64,
    pub forcing_power: f64,
    /// `|E(t) - E(0) + int dissipation - int forcing|`.
    pub budget_residual: f64,
}

/// Model energy of one field.
pub fn model_energy(w: &SpectralField, p: &FilterParams) -> f64 {
    let l2 = sobolev_norm_sq(w, SobolevIndex::L2);
    let frac = sobolev_norm_sq(w, SobolevIndex::homogeneous(p.theta));
    0.5 * (l2 + p.strength() * frac)
}

pub fn unweighted_energy(w: &SpectralField, p: &FilterParams) -> f64 {
    let l2 = sobolev_norm_sq(w, SobolevIndex::L2);
    let frac = sobolev_norm_sq(w, SobolevIndex::homogeneous(p.theta));
    0.5 * (l2 + frac)
}

/// `nu (||w||^2_{H^1} + alpha^{2 theta} ||w||^2_{H^{1+theta}})`, homogeneous seminorms.
pub fn dissipation_rate(w: &SpectralField, diffusivity: f64, p: &FilterParams) -> f64 {
    let h1 = sobolev_norm_sq(w, SobolevIndex::homogeneous(1.0));
    let h1t = sobolev_norm_sq(w, SobolevIndex::homogeneous(1.0 + p.theta));
    diffusivity * (h1 + p.strength() * h1t)
}

/// `(f_bar, w + alpha^{2 theta} (-Laplacian)^theta w)`, i.e. the unfiltered force against `w`.
pub fn forcing_power(forcing: Option<&SpectralField>, w: &SpectralField, p: &FilterParams) -> f64 {
    match forcing {
        Some(f) => f.inner(&inverse_shift(w, p)).unwrap_or(f64::NAN),
        None => 0.0,
    }
}

/// Instantaneous budget terms at one time level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BudgetSample {
    pub time: f64,
    pub model_energy: f64,
    pub energy_unweighted: f64,
    pub kinetic_dissipation: f64,
    pub magnetic_dissipation: f64,
    pub forcing_power: f64,
}

impl BudgetSample {
    fn net_loss(&self) -> f64 {
        self.kinetic_dissipation + self.magnetic_dissipation - self.forcing_power
    }
}

/// Streaming accumulator turning samples spaced `dt` apart into budget rows.
///
/// The spacing is passed in rather than read off the sample times: times accumulated
/// step by step drift by many ulps, and that drift rescales the whole dissipation
/// integral.
#[derive(Debug, Clone)]
pub struct BudgetTracker {
    dt: f64,
    first: Vec<BudgetSample>,
    recent: Vec<f64>,
    trapezoid_inner: CompensatedSum,
    count: usize,
}

impl BudgetTracker {
    pub fn new(dt: f64) -> Self {
        BudgetTracker {
            dt,
            first: Vec::with_capacity(3),
            recent: Vec::with_capacity(4),
            trapezoid_inner: CompensatedSum::new(),
            count: 0,
        }
    }

    pub fn push(&mut self, s: BudgetSample) -> EnergyBudget {
        let g = s.net_loss();
        if self.first.len() < 3 {
            self.first.push(s);
        }
        if self.count > 0 {
            // previous endpoint becomes interior
            self.trapezoid_inner
                .add(*self.recent.last().expect("nonempty"));
        }
        self.recent.push(g);
        if self.recent.len() > 3 {
            self.recent.remove(0);
        }
        self.count += 1;

        let e0 = self.first[0];
        let n = self.count - 1;
        let integral = if n == 0 {
            0.0
        } else {
            let dt = self.dt;
            let g0 = e0.net_loss();
            // interior sum counts g0 once; the trapezoid weights it by one half
            let trap = dt * (self.trapezoid_inner.value() - 0.5 * g0 + 0.5 * g);
            if n >= 2 {
                let (a0, a1, a2) = (
                    self.first[0].net_loss(),
                    self.first[1].net_loss(),
                    self.first[2].net_loss(),
                );
                let (b2, b1, b0) = (self.recent[0], self.recent[1], self.recent[2]);
                let d_start = (-3.0 * a0 + 4.0 * a1 - a2) / (2.0 * dt);
                let d_end = (3.0 * b0 - 4.0 * b1 + b2) / (2.0 * dt);
                trap - dt * dt / 12.0 * (d_end - d_start)
            } else {
                trap
            }
        };

        row(&s, &e0, integral)
    }

    /// Row 1 again, integrated with `h (5 g0 + 8 g1 - g2) / 12` instead of the
    /// trapezoid. `push` cannot do this at step 1; available from the third sample on.
    pub fn refined_first_row(&self) -> Option<EnergyBudget> {
        let [a, b, c] = self.first.get(..3)? else {
            return None;
        };
        let integral = self.dt * (5.0 * a.net_loss() + 8.0 * b.net_loss() - c.net_loss()) / 12.0;
        Some(row(b, a, integral))
    }
}

fn row(s: &BudgetSample, initial: &BudgetSample, integral: f64) -> EnergyBudget {
    EnergyBudget {
        time: s.time,
        model_energy: s.model_energy,
        energy_unweighted: s.energy_unweighted,
        dissipation_rate: s.kinetic_dissipation + s.magnetic_dissipation,
        kinetic_dissipation: s.kinetic_dissipation,
        magnetic_dissipation: s.magnetic_dissipation,
        forcing_power: s.forcing_power,
        budget_residual: (s.model_energy - initial.model_energy + integral).abs(),
    }
}

/// Budget rows for a whole sample sequence, with row 1 refined when possible.
pub fn budget_rows(dt: f64, samples: impl IntoIterator<Item = BudgetSample>) -> Vec<EnergyBudget> {
    let mut tracker = BudgetTracker::new(dt);
    let mut rows: Vec<_> = samples.into_iter().map(|s| tracker.push(s)).collect();
    if let Some(r) = tracker.refined_first_row() {
        rows[1] = r;
    }
    rows
}
