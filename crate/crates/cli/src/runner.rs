//! Builds the fields a config describes and drives one solver run into a directory.

use std::fs::{self, File};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use critles::initial::{low_mode_forcing, orszag_tang, shear_mode, taylor_green};
use critles::mhd::mhd_pressure;
use critles::nse::pressure_solve;
use critles::spectral::{random_solenoidal, read_snapshot, sobolev_norm, write_snapshot};
use critles::{
    make_grid, BudgetSample, BudgetTracker, EnergyBudget, FieldKind, FilterParams, FlowState,
    MhdConfig, MhdSolver, MhdState, NseConfig, NseSolver, SobolevIndex, SpectralField, TorusGrid,
};
use serde::Serialize;

use crate::config::{ForcingSpec, InitialCondition, Model, RunConfig};
use crate::error::{CliError, CliResult};
use crate::manifest::Status;

/// Fields and parameters ready for a solver.
#[derive(Debug, Clone)]
pub struct Inputs {
    pub grid: Arc<TorusGrid>,
    pub filter: FilterParams,
    pub velocity: SpectralField,
    /// Present for MHD runs.
    pub magnetic: Option<SpectralField>,
    pub forcing: Option<SpectralField>,
}

enum Slot {
    Velocity,
    Magnetic,
}

fn initial_field(
    grid: &Arc<TorusGrid>,
    ic: &InitialCondition,
    slot: Slot,
    key: &str,
    origin: &Path,
) -> CliResult<SpectralField> {
    Ok(match ic {
        InitialCondition::TaylorGreen { amplitude } => taylor_green(grid, *amplitude),
        InitialCondition::ShearMode { amplitude } => shear_mode(grid, *amplitude),
        InitialCondition::OrszagTang => {
            let (w, b) = orszag_tang(grid);
            match slot {
                Slot::Velocity => w,
                Slot::Magnetic => b,
            }
        }
        InitialCondition::Zero => SpectralField::zeros(grid, FieldKind::Vector),
        InitialCondition::RandomSolenoidal {
            seed,
            spectrum_slope,
            amplitude,
        } => random_solenoidal(grid, *seed, *spectrum_slope).scaled(*amplitude),
        InitialCondition::File { path } => load_vector(grid, path, key, origin)?,
    })
}

fn load_vector(
    grid: &Arc<TorusGrid>,
    path: &Path,
    key: &str,
    origin: &Path,
) -> CliResult<SpectralField> {
    let (field, meta) = read_snapshot(path).map_err(|e| {
        CliError::config(
            origin,
            Some(key),
            format!("cannot load {}: {e}", path.display()),
        )
    })?;
    if meta.kind != FieldKind::Vector {
        return Err(CliError::config(
            origin,
            Some(key),
            "snapshot is not a vector field",
        ));
    }
    if !field.grid().same_as(grid) {
        return Err(CliError::config(
            origin,
            Some(key),
            format!(
                "snapshot grid (N = {}, L = {}, dealias {}) differs from the configured grid",
                meta.resolution, meta.period, meta.dealias_fraction
            ),
        ));
    }
    // rebind to the run's grid handle
    Ok(SpectralField::from_components(
        grid,
        FieldKind::Vector,
        field.into_components(),
    )?)
}

impl Inputs {
    /// Builds every field of `cfg`; `origin` names the config in error messages.
    pub fn build(cfg: &RunConfig, origin: &Path) -> CliResult<Self> {
        let g = &cfg.grid;
        let grid = make_grid(g.resolution, g.period, g.dealias_fraction)
            .map_err(|e| CliError::config(origin, Some("grid"), e.to_string()))?;
        let filter = cfg.filter_params();
        let prepare = |raw: SpectralField, key: &str| -> CliResult<SpectralField> {
            FlowState::initial(&raw, &filter, cfg.filter_initial_data)
                .map(|s| s.w)
                .map_err(|e| CliError::config(origin, Some(key), e.to_string()))
        };
        let velocity = prepare(
            initial_field(
                &grid,
                &cfg.initial_condition,
                Slot::Velocity,
                "initial_condition",
                origin,
            )?,
            "initial_condition",
        )?;
        let magnetic = match cfg.model {
            Model::Nse => None,
            Model::Mhd => {
                let key = "magnetic_initial_condition";
                let ic = cfg
                    .magnetic_initial_condition
                    .as_ref()
                    .unwrap_or(&InitialCondition::Zero);
                Some(prepare(
                    initial_field(&grid, ic, Slot::Magnetic, key, origin)?,
                    key,
                )?)
            }
        };
        let forcing = match &cfg.forcing {
            None => None,
            Some(ForcingSpec::LowMode { amplitude }) => Some(low_mode_forcing(&grid, *amplitude)),
            Some(ForcingSpec::File { path }) => Some(load_vector(&grid, path, "forcing", origin)?),
        };
        let inputs = Inputs {
            grid,
            filter,
            velocity,
            magnetic,
            forcing,
        };
        // surfaces solver-side rejections (e.g. a forcing that is not solenoidal) now
        inputs
            .solver(cfg)
            .map_err(|e| CliError::config(origin, Some("forcing"), e.to_string()))?;
        Ok(inputs)
    }

    fn solver(&self, cfg: &RunConfig) -> critles::Result<Solver> {
        let (dt, t_end) = (cfg.time.dt, cfg.time.t_end);
        Ok(match cfg.model {
            Model::Nse => {
                let mut c =
                    NseConfig::new(cfg.physics.nu.unwrap_or(f64::NAN), self.filter, dt, t_end);
                c.forcing = self.forcing.clone();
                Solver::Nse(NseSolver::new(&self.grid, c)?)
            }
            Model::Mhd => {
                let mut c = MhdConfig::new(
                    cfg.physics.nu1.unwrap_or(f64::NAN),
                    cfg.physics.nu2.unwrap_or(f64::NAN),
                    self.filter,
                    dt,
                    t_end,
                );
                c.forcing = self.forcing.clone();
                Solver::Mhd(MhdSolver::new(&self.grid, c)?)
            }
        })
    }
}

enum Solver {
    Nse(NseSolver),
    Mhd(MhdSolver),
}

#[derive(Serialize)]
struct BudgetRow {
    step: usize,
    time: f64,
    model_energy: f64,
    energy_unweighted: f64,
    dissipation_rate: f64,
    kinetic_dissipation: f64,
    magnetic_dissipation: f64,
    forcing_power: f64,
    budget_residual: f64,
}

#[derive(Serialize)]
struct NormRow<'a> {
    step: usize,
    time: f64,
    field: &'a str,
    norm: &'a str,
    value: f64,
}

/// Step, time and named fields of the latest observed state.
type Observed = (usize, f64, Vec<(&'static str, SpectralField)>);

/// Budget, norm and snapshot output for one run, fed one state at a time.
struct Recorder {
    dir: PathBuf,
    budget: csv::Writer<File>,
    norms: csv::Writer<File>,
    norm_indices: Vec<(SobolevIndex, String)>,
    tracker: BudgetTracker,
    pending: Option<EnergyBudget>,
    budget_every: usize,
    norms_every: usize,
    snapshot_every: usize,
    total_steps: usize,
    step: usize,
    outputs: Vec<String>,
    last: Option<Observed>,
    error: Option<CliError>,
}

fn create(path: &Path) -> CliResult<csv::Writer<File>> {
    let file = File::create(path).map_err(|e| CliError::io(path.display().to_string(), e))?;
    Ok(csv::Writer::from_writer(file))
}

impl Recorder {
    fn new(cfg: &RunConfig, dir: &Path) -> CliResult<Self> {
        fs::create_dir_all(dir.join("snapshots"))
            .map_err(|e| CliError::io(dir.display().to_string(), e))?;
        let theta = cfg.filter.theta;
        let norm_indices = [
            SobolevIndex::L2,
            SobolevIndex::full(theta),
            SobolevIndex::homogeneous(1.0),
            SobolevIndex::full(1.0 + theta),
        ]
        .into_iter()
        .map(|idx| (idx, idx.label()))
        .collect();
        Ok(Recorder {
            dir: dir.to_path_buf(),
            budget: create(&dir.join("budget.csv"))?,
            norms: create(&dir.join("norms.csv"))?,
            norm_indices,
            tracker: BudgetTracker::new(cfg.time.dt),
            pending: None,
            budget_every: cfg.output.budget_every,
            norms_every: cfg.output.norms_every,
            snapshot_every: cfg.output.snapshot_every,
            total_steps: cfg.time.steps(),
            step: 0,
            outputs: vec!["budget.csv".into(), "norms.csv".into()],
            last: None,
            error: None,
        })
    }

    fn observe(&mut self, sample: BudgetSample, fields: &[(&'static str, &SpectralField)]) {
        if self.error.is_some() {
            return;
        }
        if let Err(e) = self.try_observe(sample, fields) {
            self.error = Some(e);
        }
    }

    fn try_observe(
        &mut self,
        sample: BudgetSample,
        fields: &[(&'static str, &SpectralField)],
    ) -> CliResult<()> {
        let step = self.step;
        self.step += 1;
        let time = sample.time;
        let b = self.tracker.push(sample);
        let at_end = step == self.total_steps;
        if step == 2 {
            if let (Some(pending), Some(refined)) =
                (self.pending.as_mut(), self.tracker.refined_first_row())
            {
                *pending = refined;
            }
            self.flush_pending()?;
        }
        if step.is_multiple_of(self.budget_every) || at_end {
            if step == 1 && !at_end {
                // row 1 improves once the next sample is in
                self.pending = Some(b);
            } else {
                self.write_budget(step, &b)?;
            }
        }
        if step.is_multiple_of(self.norms_every) || at_end {
            for (name, field) in fields {
                for (idx, label) in &self.norm_indices {
                    self.norms.serialize(NormRow {
                        step,
                        time,
                        field: name,
                        norm: label,
                        value: sobolev_norm(field, *idx),
                    })?;
                }
            }
        }
        if self.snapshot_every > 0
            && step > 0
            && step.is_multiple_of(self.snapshot_every)
            && !at_end
        {
            for (name, field) in fields {
                self.snapshot(field, time, &format!("{name}_{step:06}"))?;
            }
        }
        self.last = Some((
            step,
            time,
            fields.iter().map(|(n, f)| (*n, (*f).clone())).collect(),
        ));
        Ok(())
    }

    fn write_budget(&mut self, step: usize, b: &EnergyBudget) -> CliResult<()> {
        self.budget.serialize(BudgetRow {
            step,
            time: b.time,
            model_energy: b.model_energy,
            energy_unweighted: b.energy_unweighted,
            dissipation_rate: b.dissipation_rate,
            kinetic_dissipation: b.kinetic_dissipation,
            magnetic_dissipation: b.magnetic_dissipation,
            forcing_power: b.forcing_power,
            budget_residual: b.budget_residual,
        })?;
        Ok(())
    }

    fn flush_pending(&mut self) -> CliResult<()> {
        match self.pending.take() {
            Some(b) => self.write_budget(1, &b),
            None => Ok(()),
        }
    }

    fn snapshot(&mut self, field: &SpectralField, time: f64, stem: &str) -> CliResult<()> {
        write_snapshot(field, time, &self.dir.join("snapshots").join(stem))?;
        self.outputs.push(format!("snapshots/{stem}.json"));
        self.outputs.push(format!("snapshots/{stem}.bin"));
        Ok(())
    }

    fn finish(mut self) -> CliResult<(Vec<String>, Option<Observed>)> {
        if let Some(e) = self.error.take() {
            return Err(e);
        }
        self.flush_pending()?;
        self.budget
            .flush()
            .map_err(|e| CliError::io("budget.csv", e))?;
        self.norms
            .flush()
            .map_err(|e| CliError::io("norms.csv", e))?;
        Ok((self.outputs, self.last))
    }
}

/// How a run ended, plus its final fields.
#[derive(Debug)]
pub struct RunOutcome {
    pub status: Status,
    pub message: Option<String>,
    pub steps_completed: usize,
    pub final_time: f64,
    /// Final velocity, pressure and (MHD) magnetic field; empty after a blow-up.
    pub fields: Vec<(String, SpectralField)>,
    pub outputs: Vec<String>,
    /// The solver error of a failed run.
    pub failure: Option<critles::Error>,
}

/// Runs `cfg` from `inputs`, writing `budget.csv`, `norms.csv` and `snapshots/` under `dir`.
///
/// A blow-up is not an `Err`: it comes back as [`Status::BlowUp`] with the last valid
/// state saved as `snapshots/<field>_last_valid`.
pub fn execute(cfg: &RunConfig, inputs: &Inputs, dir: &Path) -> CliResult<RunOutcome> {
    let solver = inputs.solver(cfg)?;
    let mut rec = Recorder::new(cfg, dir)?;
    let steps = cfg.time.steps();
    let result = match &solver {
        Solver::Nse(s) => {
            // inputs are already projected; projecting again would move roundoff
            let initial = FlowState {
                w: inputs.velocity.clone(),
                time: 0.0,
            };
            s.run(&initial, steps, |st| {
                rec.observe(s.budget_sample(st), &[("velocity", &st.w)])
            })
            .and_then(|last| {
                let q = pressure_solve(&last.w, &inputs.filter)?;
                Ok(vec![
                    ("velocity".to_string(), last.w),
                    ("pressure".to_string(), q),
                ])
            })
        }
        Solver::Mhd(s) => {
            let magnetic = inputs
                .magnetic
                .clone()
                .expect("mhd inputs carry a magnetic field");
            let initial = MhdState {
                velocity: inputs.velocity.clone(),
                magnetic,
                time: 0.0,
            };
            s.run(&initial, steps, |st| {
                rec.observe(
                    s.budget_sample(st),
                    &[("velocity", &st.velocity), ("magnetic", &st.magnetic)],
                )
            })
            .and_then(|last| {
                let q = mhd_pressure(&last, &inputs.filter)?;
                Ok(vec![
                    ("velocity".to_string(), last.velocity),
                    ("pressure".to_string(), q),
                    ("magnetic".to_string(), last.magnetic),
                ])
            })
        }
    };
    let (mut outputs, last) = rec.finish()?;
    let (last_step, last_time, last_fields) = last.expect("the initial state is always observed");

    let mut save = |field: &SpectralField, time: f64, stem: String| -> CliResult<()> {
        write_snapshot(field, time, &dir.join("snapshots").join(&stem))?;
        outputs.push(format!("snapshots/{stem}.json"));
        outputs.push(format!("snapshots/{stem}.bin"));
        Ok(())
    };
    match result {
        Ok(fields) => {
            for (name, field) in &fields {
                save(field, last_time, format!("{name}_final"))?;
            }
            Ok(RunOutcome {
                status: Status::Completed,
                message: None,
                steps_completed: last_step,
                final_time: last_time,
                fields,
                outputs,
                failure: None,
            })
        }
        Err(e @ critles::Error::BlowUp { .. }) => {
            for (name, field) in &last_fields {
                save(field, last_time, format!("{name}_last_valid"))?;
            }
            Ok(RunOutcome {
                status: Status::BlowUp,
                message: Some(e.to_string()),
                steps_completed: last_step,
                final_time: last_time,
                fields: Vec::new(),
                outputs,
                failure: Some(e),
            })
        }
        Err(e) => Err(e.into()),
    }
}

/// Folds a CLI failure into the solver error type, for sweep members.
pub(crate) fn into_solver_error(e: CliError) -> critles::Error {
    match e {
        CliError::Solver(e) => e,
        CliError::Io { source, .. } => critles::Error::Io(source),
        CliError::Csv(e) => critles::Error::Io(e.into()),
        CliError::Json(e) => critles::Error::Json(e),
        other @ CliError::Config { .. } => critles::Error::InvalidParameter(other.to_string()),
    }
}
