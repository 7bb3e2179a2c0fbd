//! Filtered MHD model: velocity `w` and magnetic field `W` coupled through the four
//! filtered quadratic terms
//!
//! ```text
//! w_t - nu1 Lap w + div(filter(w (x) w)) - div(filter(W (x) W)) + grad q = 0
//! W_t - nu2 Lap W + div(filter(w (x) W)) - div(filter(W (x) w))          = 0
//! ```
//!
//! The magnetic pressure is carried by the single scalar `q`.

use std::sync::Arc;

use serde::Serialize;

use crate::budget::{
    budget_rows, dissipation_rate, forcing_power, model_energy, unweighted_energy, BudgetSample,
    EnergyBudget,
};
use crate::error::{Error, Result};
use crate::filter::{filter_symbol, inverse_shift, FilterParams};
use crate::flux;
use crate::integrator::LawsonRk4;
use crate::nse::{
    check_forcing, finish_field, positive, with_step, FlowState, HasTime, InvariantReport,
};
use crate::spectral::{sobolev_norm, FieldKind, SobolevIndex, SpectralField, TorusGrid};

#[derive(Debug, Clone, PartialEq)]
pub struct MhdState {
    pub velocity: SpectralField,
    pub magnetic: SpectralField,
    pub time: f64,
}

impl HasTime for MhdState {
    fn time(&self) -> f64 {
        self.time
    }
}

impl MhdState {
    /// Projects, masks and removes the mean of both fields.
    pub fn new(velocity: SpectralField, magnetic: SpectralField, time: f64) -> Result<Self> {
        if !velocity.grid().same_as(magnetic.grid()) {
            return Err(Error::GridMismatch);
        }
        let w = FlowState::new(velocity, time)?.w;
        let b = FlowState::new(magnetic, time)?.w;
        Ok(MhdState {
            velocity: w,
            magnetic: b,
            time,
        })
    }

    /// Velocity-only state with `W = 0`.
    pub fn from_flow(flow: &FlowState) -> Self {
        MhdState {
            magnetic: SpectralField::zeros(flow.w.grid(), FieldKind::Vector),
            velocity: flow.w.clone(),
            time: flow.time,
        }
    }

    pub fn invariants(&self) -> (InvariantReport, InvariantReport) {
        (
            InvariantReport::of(&self.velocity),
            InvariantReport::of(&self.magnetic),
        )
    }
}

#[derive(Debug, Clone)]
pub struct MhdConfig {
    /// Fluid viscosity `nu1`.
    pub viscosity: f64,
    /// Magnetic diffusivity `nu2`.
    pub resistivity: f64,
    pub filter: FilterParams,
    /// Velocity forcing hook, zero unless set.
    pub forcing: Option<SpectralField>,
    pub dt: f64,
    pub t_end: f64,
}

impl MhdConfig {
    pub fn new(
        viscosity: f64,
        resistivity: f64,
        filter: FilterParams,
        dt: f64,
        t_end: f64,
    ) -> Self {
        MhdConfig {
            viscosity,
            resistivity,
            filter,
            forcing: None,
            dt,
            t_end,
        }
    }

    pub fn validate(&self, grid: &TorusGrid) -> Result<()> {
        self.filter.validate()?;
        positive("nu1", self.viscosity)?;
        positive("nu2", self.resistivity)?;
        positive("dt", self.dt)?;
        positive("t_end", self.t_end)?;
        if let Some(f) = &self.forcing {
            check_forcing(f, grid)?;
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round().max(1.0) as usize
    }
}

/// Explicit tendencies `(dw, dW)`; both projected, viscous parts excluded.
pub fn mhd_rhs(state: &MhdState, cfg: &MhdConfig) -> Result<(SpectralField, SpectralField)> {
    let solver = MhdSolver::new(state.velocity.grid(), cfg.clone())?;
    let mut out = solver.explicit(&[state.velocity.clone(), state.magnetic.clone()])?;
    let db = out.pop().expect("two fields");
    let dw = out.pop().expect("two fields");
    Ok((dw, db))
}

pub fn mhd_step(state: &MhdState, cfg: &MhdConfig) -> Result<MhdState> {
    MhdSolver::new(state.velocity.grid(), cfg.clone())?.step(state)
}

/// Pressure `q` absorbing the magnetic pressure: stress `w (x) w - W (x) W`.
pub fn mhd_pressure(state: &MhdState, p: &FilterParams) -> Result<SpectralField> {
    let grid = state.velocity.grid();
    let symbol = filter_symbol(grid, p);
    let u = flux::physical(&state.velocity);
    let b = flux::physical(&state.magnetic);
    let stress = flux::symmetric_stress(grid, &u, Some(&b));
    SpectralField::from_components(
        grid,
        FieldKind::Scalar,
        vec![flux::pressure_from_stress(grid, &symbol, &stress)],
    )
}

pub struct MhdSolver {
    cfg: MhdConfig,
    grid: Arc<TorusGrid>,
    symbol: Vec<f64>,
    lawson: LawsonRk4,
}

impl MhdSolver {
    pub fn new(grid: &Arc<TorusGrid>, cfg: MhdConfig) -> Result<Self> {
        cfg.validate(grid)?;
        Ok(MhdSolver {
            symbol: filter_symbol(grid, &cfg.filter),
            lawson: LawsonRk4::new(grid, &[cfg.viscosity, cfg.resistivity], cfg.dt),
            grid: Arc::clone(grid),
            cfg,
        })
    }

    pub fn config(&self) -> &MhdConfig {
        &self.cfg
    }

    fn explicit(&self, fields: &[SpectralField]) -> Result<Vec<SpectralField>> {
        let grid = &self.grid;
        let u = flux::physical(&fields[0]);
        let b = flux::physical(&fields[1]);
        let stress = flux::symmetric_stress(grid, &u, Some(&b));
        let dw = SpectralField::from_components(
            grid,
            FieldKind::Vector,
            flux::projected_divergence(grid, &self.symbol, &stress),
        )?;
        let dw = match &self.cfg.forcing {
            Some(f) => dw.plus(f)?,
            None => dw,
        };
        let a = flux::antisymmetric_flux(grid, &u, &b);
        let db = SpectralField::from_components(
            grid,
            FieldKind::Vector,
            flux::induction(grid, &self.symbol, &a),
        )?;
        Ok(vec![dw, db])
    }

    pub fn step(&self, state: &MhdState) -> Result<MhdState> {
        Ok(self.advance(state, None, state.time + self.cfg.dt)?.0)
    }

    fn advance(
        &self,
        state: &MhdState,
        carry: Option<&[SpectralField]>,
        time: f64,
    ) -> Result<(MhdState, Vec<SpectralField>)> {
        let (next, carry) = self.lawson.step(
            &[state.velocity.clone(), state.magnetic.clone()],
            carry,
            |u| self.explicit(u),
        )?;
        let next = MhdState {
            velocity: finish_field(&next[0], time, state.time)?,
            magnetic: finish_field(&next[1], time, state.time)?,
            time,
        };
        Ok((next, carry))
    }

    /// As [`NseSolver::run`](crate::NseSolver::run): compensated updates, times `t0 + n dt`.
    pub fn run(
        &self,
        initial: &MhdState,
        steps: usize,
        mut observe: impl FnMut(&MhdState),
    ) -> Result<MhdState> {
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

    pub fn run_to_end(&self, initial: &MhdState) -> Result<MhdState> {
        self.run(initial, self.cfg.steps(), |_| {})
    }

    pub fn budget_sample(&self, state: &MhdState) -> BudgetSample {
        let p = &self.cfg.filter;
        BudgetSample {
            time: state.time,
            model_energy: model_energy(&state.velocity, p) + model_energy(&state.magnetic, p),
            energy_unweighted: unweighted_energy(&state.velocity, p)
                + unweighted_energy(&state.magnetic, p),
            kinetic_dissipation: dissipation_rate(&state.velocity, self.cfg.viscosity, p),
            magnetic_dissipation: dissipation_rate(&state.magnetic, self.cfg.resistivity, p),
            forcing_power: forcing_power(self.cfg.forcing.as_ref(), &state.velocity, p),
        }
    }
}

pub fn mhd_energy_budget(history: &[MhdState], cfg: &MhdConfig) -> Result<Vec<EnergyBudget>> {
    let Some(first) = history.first() else {
        return Ok(Vec::new());
    };
    let solver = MhdSolver::new(first.velocity.grid(), cfg.clone())?;
    Ok(budget_rows(
        cfg.dt,
        history.iter().map(|s| solver.budget_sample(s)),
    ))
}

pub fn run_mhd_with_budget(
    initial: &MhdState,
    cfg: &MhdConfig,
) -> Result<(MhdState, Vec<EnergyBudget>)> {
    let solver = MhdSolver::new(initial.velocity.grid(), cfg.clone())?;
    let mut samples = Vec::with_capacity(cfg.steps() + 1);
    let last = solver.run(initial, cfg.steps(), |s| {
        samples.push(solver.budget_sample(s))
    })?;
    Ok((last, budget_rows(cfg.dt, samples)))
}

/// Total nonlinear energy transfer `(dw, S w) + (dW, S W)`, `S` the inverse filter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cancellation {
    pub transfer: f64,
    /// `||w|| ||dw|| + ||W|| ||dW||`, the size the transfer is compared against.
    pub scale: f64,
}

impl Cancellation {
    pub fn relative(&self) -> f64 {
        if self.scale == 0.0 {
            self.transfer.abs()
        } else {
            self.transfer.abs() / self.scale
        }
    }
}

pub fn cancellation_check(state: &MhdState, p: &FilterParams) -> Result<Cancellation> {
    let cfg = MhdConfig::new(1.0, 1.0, *p, 1.0, 1.0);
    let (dw, db) = mhd_rhs(state, &cfg)?;
    let transfer = dw.inner(&inverse_shift(&state.velocity, p))?
        + db.inner(&inverse_shift(&state.magnetic, p))?;
    let l2 = |f: &SpectralField| sobolev_norm(f, SobolevIndex::L2);
    Ok(Cancellation {
        transfer,
        scale: l2(&state.velocity) * l2(&dw) + l2(&state.magnetic) * l2(&db),
    })
}
