//! Filtered Navier-Stokes model
//! `w_t + div(filter(w (x) w)) - nu Laplacian w + grad q = f_bar`, `div w = 0`.

use std::sync::Arc;

use serde::Serialize;

use crate::budget::{
    budget_rows, dissipation_rate, forcing_power, model_energy, unweighted_energy, BudgetSample,
    EnergyBudget,
};
use crate::error::{Error, Result};
use crate::filter::{apply_filter, filter_symbol, FilterParams};
use crate::flux;
use crate::integrator::LawsonRk4;
use crate::spectral::{
    leray_project, random_solenoidal, sobolev_norm, sobolev_norm_sq, FieldKind, SobolevIndex,
    SpectralField, TorusGrid,
};

/// Relative tolerance for the divergence-free and zero-mean checks.
pub const INVARIANT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    pub w: SpectralField,
    pub time: f64,
}

/// Worst invariant violations of a field, relative to its largest coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InvariantReport {
    pub divergence: f64,
    pub mean: f64,
    pub asymmetry: f64,
}

impl InvariantReport {
    pub fn of(f: &SpectralField) -> Self {
        let scale = f.max_amplitude().max(f64::MIN_POSITIVE);
        InvariantReport {
            divergence: f.max_divergence() / scale,
            mean: f.mean_magnitude() / scale,
            asymmetry: f.conjugate_asymmetry() / scale,
        }
    }

    pub fn holds(&self) -> bool {
        self.divergence <= INVARIANT_TOLERANCE
            && self.mean <= INVARIANT_TOLERANCE
            && self.asymmetry <= 1e-13
    }
}

impl FlowState {
    /// Projects, masks and removes the mean of `w`.
    pub fn new(w: SpectralField, time: f64) -> Result<Self> {
        w.expect_kind(FieldKind::Vector)?;
        let w = leray_project(&w.masked())?.without_mean().symmetrized();
        Ok(FlowState { w, time })
    }

    /// Initial state from data `v0`; with `filter_data` the model starts from `filter(v0)`.
    pub fn initial(v0: &SpectralField, p: &FilterParams, filter_data: bool) -> Result<Self> {
        let w = if filter_data {
            apply_filter(v0, p)
        } else {
            v0.clone()
        };
        Self::new(w, 0.0)
    }

    pub fn invariants(&self) -> InvariantReport {
        InvariantReport::of(&self.w)
    }
}

#[derive(Debug, Clone)]
pub struct NseConfig {
    pub nu: f64,
    pub filter: FilterParams,
    /// Steady filtered forcing `f_bar`; `None` means zero.
    pub forcing: Option<SpectralField>,
    pub dt: f64,
    pub t_end: f64,
}

impl NseConfig {
    pub fn new(nu: f64, filter: FilterParams, dt: f64, t_end: f64) -> Self {
        NseConfig {
            nu,
            filter,
            forcing: None,
            dt,
            t_end,
        }
    }

    pub fn with_forcing(mut self, forcing: SpectralField) -> Self {
        self.forcing = Some(forcing);
        self
    }

    pub fn validate(&self, grid: &TorusGrid) -> Result<()> {
        self.filter.validate()?;
        positive("nu", self.nu)?;
        positive("dt", self.dt)?;
        positive("t_end", self.t_end)?;
        if let Some(f) = &self.forcing {
            check_forcing(f, grid)?;
        }
        Ok(())
    }

    /// Number of steps to reach `t_end`.
    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round().max(1.0) as usize
    }
}

pub(crate) fn positive(name: &str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} must be > 0, got {x}"
        )))
    }
}

pub(crate) fn check_forcing(f: &SpectralField, grid: &TorusGrid) -> Result<()> {
    f.expect_kind(FieldKind::Vector)?;
    if !f.grid().same_as(grid) {
        return Err(Error::GridMismatch);
    }
    let r = InvariantReport::of(f);
    if r.divergence > INVARIANT_TOLERANCE || r.mean > INVARIANT_TOLERANCE {
        return Err(Error::InvalidParameter(
            "forcing must be divergence free with zero mean".into(),
        ));
    }
    Ok(())
}

/// Filtered advection after pressure elimination: `P(-div(filter(w (x) w)))`.
pub fn nonlinear_term(w: &SpectralField, p: &FilterParams) -> Result<SpectralField> {
    w.expect_kind(FieldKind::Vector)?;
    let grid = w.grid();
    let symbol = filter_symbol(grid, p);
    let u = flux::physical(w);
    let stress = flux::symmetric_stress(grid, &u, None);
    SpectralField::from_components(
        grid,
        FieldKind::Vector,
        flux::projected_divergence(grid, &symbol, &stress),
    )
}

/// Pressure from `Laplacian q = -div div(filter(w (x) w))`, zero mean.
pub fn pressure_solve(w: &SpectralField, p: &FilterParams) -> Result<SpectralField> {
    w.expect_kind(FieldKind::Vector)?;
    let grid = w.grid();
    let symbol = filter_symbol(grid, p);
    let stress = flux::symmetric_stress(grid, &flux::physical(w), None);
    SpectralField::from_components(
        grid,
        FieldKind::Scalar,
        vec![flux::pressure_from_stress(grid, &symbol, &stress)],
    )
}

/// Explicit part of the right side: nonlinear term plus forcing. The viscous term
/// `-nu |k|^2` is left to the integrator.
pub fn rhs(state: &FlowState, cfg: &NseConfig) -> Result<SpectralField> {
    NseSolver::new(state.w.grid(), cfg.clone())?.explicit(&state.w)
}

/// One integrating-factor RK4 step.
pub fn step(state: &FlowState, cfg: &NseConfig) -> Result<FlowState> {
    NseSolver::new(state.w.grid(), cfg.clone())?.step(state)
}

/// Time stepper with the filter symbol and integrating factors cached.
pub struct NseSolver {
    cfg: NseConfig,
    grid: Arc<TorusGrid>,
    symbol: Vec<f64>,
    lawson: LawsonRk4,
}

impl NseSolver {
    pub fn new(grid: &Arc<TorusGrid>, cfg: NseConfig) -> Result<Self> {
        cfg.validate(grid)?;
        Ok(NseSolver {
            symbol: filter_symbol(grid, &cfg.filter),
            lawson: LawsonRk4::new(grid, &[cfg.nu], cfg.dt),
            grid: Arc::clone(grid),
            cfg,
        })
    }

    pub fn config(&self) -> &NseConfig {
        &self.cfg
    }

    pub fn explicit(&self, w: &SpectralField) -> Result<SpectralField> {
        let u = flux::physical(w);
        let stress = flux::symmetric_stress(&self.grid, &u, None);
        let tendency = SpectralField::from_components(
            &self.grid,
            FieldKind::Vector,
            flux::projected_divergence(&self.grid, &self.symbol, &stress),
        )?;
        match &self.cfg.forcing {
            Some(f) => tendency.plus(f),
            None => Ok(tendency),
        }
    }

    pub fn step(&self, state: &FlowState) -> Result<FlowState> {
        Ok(self.advance(state, None, state.time + self.cfg.dt)?.0)
    }

    fn advance(
        &self,
        state: &FlowState,
        carry: Option<&[SpectralField]>,
        time: f64,
    ) -> Result<(FlowState, Vec<SpectralField>)> {
        let (next, carry) = self
            .lawson
            .step(std::slice::from_ref(&state.w), carry, |u| {
                Ok(vec![self.explicit(&u[0])?])
            })?;
        let w = finish_field(&next[0], time, state.time)?;
        Ok((FlowState { w, time }, carry))
    }

    /// Advances `steps` times, calling `observe` on the initial and every new state.
    ///
    /// Unlike repeated [`step`](Self::step) calls, the rounding error of each update is
    /// fed into the next one and times are `t0 + n dt`, so long runs do not drift.
    pub fn run(
        &self,
        initial: &FlowState,
        steps: usize,
        mut observe: impl FnMut(&FlowState),
    ) -> Result<FlowState> {
        let mut state = initial.clone();
        let mut carry: Option<Vec<SpectralField>> = None;
        observe(&state);
        for n in 1..=steps {
            let time = initial.time + n as f64 * self.cfg.dt;
            let (next, c) = self
                .advance(&state, carry.as_deref(), time)
                .map_err(|e| with_step(e, &state, self.cfg.dt))?;
            state = next;
            carry = Some(c);
            observe(&state);
        }
        Ok(state)
    }

    /// Runs to `t_end`.
    pub fn run_to_end(&self, initial: &FlowState) -> Result<FlowState> {
        self.run(initial, self.cfg.steps(), |_| {})
    }

    pub fn budget_sample(&self, state: &FlowState) -> BudgetSample {
        let p = &self.cfg.filter;
        BudgetSample {
            time: state.time,
            model_energy: model_energy(&state.w, p),
            energy_unweighted: unweighted_energy(&state.w, p),
            kinetic_dissipation: dissipation_rate(&state.w, self.cfg.nu, p),
            magnetic_dissipation: 0.0,
            forcing_power: forcing_power(self.cfg.forcing.as_ref(), &state.w, p),
        }
    }
}

/// Post-step cleanup shared with the MHD stepper: project, symmetrize, check finiteness.
pub(crate) fn finish_field(f: &SpectralField, time: f64, last_valid: f64) -> Result<SpectralField> {
    if !f.is_finite() {
        return Err(Error::BlowUp {
            time,
            step: 0,
            last_valid_time: last_valid,
        });
    }
    Ok(leray_project(f)?.without_mean().symmetrized())
}

pub(crate) fn with_step(e: Error, state_before: &impl HasTime, dt: f64) -> Error {
    match e {
        Error::BlowUp {
            time,
            last_valid_time,
            ..
        } => Error::BlowUp {
            time,
            step: ((state_before.time() + dt) / dt).round() as usize,
            last_valid_time,
        },
        other => other,
    }
}

pub(crate) trait HasTime {
    fn time(&self) -> f64;
}

impl HasTime for FlowState {
    fn time(&self) -> f64 {
        self.time
    }
}

/// Budget rows for a uniformly spaced history.
pub fn energy_budget(history: &[FlowState], cfg: &NseConfig) -> Result<Vec<EnergyBudget>> {
    let Some(first) = history.first() else {
        return Ok(Vec::new());
    };
    let solver = NseSolver::new(first.w.grid(), cfg.clone())?;
    Ok(budget_rows(
        cfg.dt,
        history.iter().map(|s| solver.budget_sample(s)),
    ))
}

/// Runs the solver to `t_end` and returns one budget row per step.
pub fn run_with_budget(
    initial: &FlowState,
    cfg: &NseConfig,
) -> Result<(FlowState, Vec<EnergyBudget>)> {
    let solver = NseSolver::new(initial.w.grid(), cfg.clone())?;
    let mut samples = Vec::with_capacity(cfg.steps() + 1);
    let last = solver.run(initial, cfg.steps(), |s| {
        samples.push(solver.budget_sample(s))
    })?;
    Ok((last, budget_rows(cfg.dt, samples)))
}

/// Growth of a small perturbation against its Gronwall envelope
/// `||dw(t)|| <= ||dw(0)|| exp(C int_0^t ||w_1||^2_{1 + theta} ds)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DependenceReport {
    pub perturbation_size: f64,
    pub times: Vec<f64>,
    /// `||w_2(t) - w_1(t)||_{1/6, 2}` (full norm).
    pub difference: Vec<f64>,
    /// `int_0^t ||w_1||^2_{1 + 1/6, 2} ds` (trapezoid).
    pub regularity_integral: Vec<f64>,
    /// Smallest non-negative `C` for which the envelope holds at every sample.
    pub fitted_constant: f64,
    pub envelope: Vec<f64>,
    pub within_envelope: bool,
}

impl DependenceReport {
    pub fn final_difference(&self) -> f64 {
        *self.difference.last().unwrap_or(&0.0)
    }
}

pub const PROBE_NORM: SobolevIndex = SobolevIndex {
    s: 1.0 / 6.0,
    homogeneous: false,
};

/// Runs trajectories from `w0` and `w0 + delta`, `delta` the seeded random solenoidal
/// direction scaled to `perturbation_size` in the `H^{1/6}` norm.
pub fn continuous_dependence_probe(
    w0: &FlowState,
    perturbation_size: f64,
    cfg: &NseConfig,
    seed: u64,
) -> Result<DependenceReport> {
    if !(perturbation_size.is_finite() && perturbation_size >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "perturbation size must be >= 0, got {perturbation_size}"
        )));
    }
    let grid = w0.w.grid();
    let direction = random_solenoidal(grid, seed, -5.0 / 3.0);
    let direction = direction.scaled(1.0 / sobolev_norm(&direction, PROBE_NORM));
    let perturbed = FlowState {
        w: w0.w.add_scaled(perturbation_size, &direction)?,
        time: w0.time,
    };

    let solver = NseSolver::new(grid, cfg.clone())?;
    let regularity = SobolevIndex::full(1.0 + 1.0 / 6.0);
    let mut base = w0.clone();
    let mut other = perturbed;
    let mut times = vec![base.time];
    let mut difference = vec![sobolev_norm(&other.w.minus(&base.w)?, PROBE_NORM)];
    let mut integral = vec![0.0];
    let mut prev_reg = sobolev_norm_sq(&base.w, regularity);
    for _ in 0..cfg.steps() {
        base = solver.step(&base)?;
        other = solver.step(&other)?;
        let reg = sobolev_norm_sq(&base.w, regularity);
        let last = *integral.last().expect("nonempty");
        integral.push(last + 0.5 * cfg.dt * (prev_reg + reg));
        prev_reg = reg;
        times.push(base.time);
        difference.push(sobolev_norm(&other.w.minus(&base.w)?, PROBE_NORM));
    }

    let d0 = difference[0];
    let fitted_constant = if d0 > 0.0 {
        difference
            .iter()
            .zip(&integral)
            .filter(|(_, &i)| i > 0.0)
            .map(|(&d, &i)| (d / d0).ln() / i)
            .fold(0.0_f64, f64::max)
    } else {
        0.0
    };
    let envelope: Vec<f64> = integral
        .iter()
        .map(|&i| d0 * (fitted_constant * i).exp())
        .collect();
    let within_envelope = difference
        .iter()
        .zip(&envelope)
        .all(|(&d, &e)| d <= e * (1.0 + 1e-12));
    Ok(DependenceReport {
        perturbation_size,
        times,
        difference,
        regularity_integral: integral,
        fitted_constant,
        envelope,
        within_envelope,
    })
}
