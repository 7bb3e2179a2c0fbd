//! Built-in property suites for `critles verify`.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::Arc;

use clap::ValueEnum;
use critles::filter::{filter_deviation_bound, inverse_shift, verify_lemma_bounds};
use critles::initial::{shear_mode, taylor_green};
use critles::mhd::cancellation_check;
use critles::nse::{nonlinear_term, run_with_budget};
use critles::spectral::{leray_project, random_field, random_solenoidal, sobolev_norm};
use critles::{
    make_grid, BudgetTracker, FieldKind, FilterParams, FlowState, MhdConfig, MhdSolver, MhdState,
    NseConfig, NseSolver, SobolevIndex, SpectralField, TorusGrid,
};
use serde::Serialize;

use crate::error::CliResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    /// Per-mode filter bounds and the filter deviation estimate.
    Filter,
    /// Energy-transfer cancellations of the nonlinear terms.
    Identities,
    /// Energy budget closure and its convergence order.
    Budget,
    /// MHD with zero magnetic field against the fluid solver.
    Reduction,
}

/// One row of the verification table: `attained` must not exceed `tolerance`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub attained: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    fn at_most(name: impl Into<String>, attained: f64, tolerance: f64) -> Self {
        Check {
            name: name.into(),
            attained,
            tolerance,
            pass: attained <= tolerance,
        }
    }

    fn at_least(name: impl Into<String>, attained: f64, threshold: f64) -> Self {
        Check {
            name: name.into(),
            attained,
            tolerance: threshold,
            pass: attained >= threshold,
        }
    }
}

const THETAS: [f64; 2] = [FilterParams::CRITICAL_THETA, FilterParams::CLASSICAL_THETA];

fn box_grid(n: usize) -> Arc<TorusGrid> {
    make_grid(n, 2.0 * PI, 2.0 / 3.0).expect("fixture grid is valid")
}

fn l2(f: &SpectralField) -> f64 {
    sobolev_norm(f, SobolevIndex::L2)
}

/// Runs one suite; `seed` shifts the seeds of the random fixtures.
pub fn run_suite(suite: Suite, seed: u64) -> CliResult<Vec<Check>> {
    match suite {
        Suite::Filter => filter_suite(seed),
        Suite::Identities => identities_suite(seed),
        Suite::Budget => budget_suite(),
        Suite::Reduction => reduction_suite(seed),
    }
}

fn filter_suite(seed: u64) -> CliResult<Vec<Check>> {
    let grid = box_grid(32);
    let mut checks = Vec::new();
    for theta in THETAS {
        for alpha in [1.0, 0.1, 0.01] {
            let p = FilterParams::new(alpha, theta)?;
            for beta in [0.0, theta, 2.0 * theta] {
                let r = verify_lemma_bounds(&grid, &p, beta)?;
                checks.push(Check {
                    name: format!("mode bound theta={theta:.4} alpha={alpha} beta={beta:.4}"),
                    attained: r.max_ratio.max(r.max_symbol),
                    tolerance: 1.0 + r.tolerance,
                    pass: r.pass,
                });
            }
        }
    }
    let small = box_grid(16);
    for theta in THETAS {
        let p = FilterParams::new(0.2, theta)?;
        let mut worst: f64 = 0.0;
        for k in 0..5 {
            let f = random_field(&small, FieldKind::Vector, seed + k).masked();
            for s in [0.0, 1.0] {
                let b = filter_deviation_bound(&f, s, &p)?;
                worst = worst.max(b.lhs / b.rhs);
            }
        }
        checks.push(Check::at_most(
            format!("deviation / bound theta={theta:.4}"),
            worst,
            1.0 + 1e-12,
        ));
    }
    Ok(checks)
}

fn identities_suite(seed: u64) -> CliResult<Vec<Check>> {
    let grid = box_grid(16);
    let mut checks = Vec::new();
    for theta in THETAS {
        let p = FilterParams::new(0.1, theta)?;
        let (mut transfer, mut cancel): (f64, f64) = (0.0, 0.0);
        for k in 0..10 {
            let w = random_solenoidal(&grid, seed + 100 + k, -5.0 / 3.0).scaled(1.0 + k as f64);
            let n = nonlinear_term(&w, &p)?;
            transfer = transfer.max(n.inner(&inverse_shift(&w, &p))?.abs() / (l2(&w) * l2(&n)));

            let state = MhdState::new(
                w,
                random_solenoidal(&grid, seed + 200 + k, -2.0).scaled(0.7),
                0.0,
            )?;
            cancel = cancel.max(cancellation_check(&state, &p)?.relative());
        }
        checks.push(Check::at_most(
            format!("fluid transfer theta={theta:.4}"),
            transfer,
            1e-11,
        ));
        checks.push(Check::at_most(
            format!("mhd cancellation theta={theta:.4}"),
            cancel,
            1e-11,
        ));
    }
    let mut divergence: f64 = 0.0;
    for k in 0..5 {
        let v = random_field(&grid, FieldKind::Vector, seed + 300 + k);
        let projected = leray_project(&v)?;
        divergence = divergence.max(projected.max_divergence() / projected.max_amplitude());
    }
    checks.push(Check::at_most("projection divergence", divergence, 1e-13));
    Ok(checks)
}

fn budget_suite() -> CliResult<Vec<Check>> {
    let grid = box_grid(16);
    let p = FilterParams::critical(0.1)?;
    let nu = 0.1;
    let mut checks = Vec::new();

    let shear = FlowState::new(shear_mode(&grid, 1.0), 0.0)?;
    let (last, rows) = run_with_budget(&shear, &NseConfig::new(nu, p, 1e-2, 1.0))?;
    let e0 = rows[0].model_energy;
    checks.push(Check::at_most(
        "shear residual / initial energy",
        rows.last().expect("rows").budget_residual.abs() / e0,
        1e-8,
    ));
    let exact = shear_mode(&grid, (-nu * last.time).exp());
    checks.push(Check::at_most(
        "shear coefficient error vs exp(-nu t)",
        last.w.minus(&exact)?.max_amplitude(),
        1e-12,
    ));

    let tg = FlowState::new(taylor_green(&grid, 1.0), 0.0)?;
    let residual = |dt: f64| -> CliResult<(f64, f64)> {
        let (_, rows) = run_with_budget(&tg, &NseConfig::new(nu, p, dt, 1.0))?;
        Ok((
            rows.last().expect("rows").budget_residual.abs(),
            rows[0].model_energy,
        ))
    };
    let (coarse, e0) = residual(8e-3)?;
    let (fine, _) = residual(4e-3)?;
    checks.push(Check::at_most(
        "taylor-green residual / initial energy",
        fine / e0,
        1e-5,
    ));
    checks.push(Check::at_least(
        "taylor-green residual order in dt",
        (coarse / fine).log2(),
        3.5,
    ));
    Ok(checks)
}

fn reduction_suite(seed: u64) -> CliResult<Vec<Check>> {
    let grid = box_grid(16);
    let p = FilterParams::critical(0.1)?;
    let w0 = FlowState::new(
        taylor_green(&grid, 1.0)
            .plus(&random_solenoidal(&grid, seed + 5, -5.0 / 3.0).scaled(0.5))?,
        0.0,
    )?;
    let nse = NseSolver::new(&grid, NseConfig::new(0.1, p, 1e-2, 1.0))?;
    let mhd = MhdSolver::new(&grid, MhdConfig::new(0.1, 0.05, p, 1e-2, 1.0))?;

    let mut fluid = Vec::new();
    let mut nse_budget = BudgetTracker::new(1e-2);
    nse.run(&w0, 100, |s| {
        fluid.push((s.clone(), nse_budget.push(nse.budget_sample(s))))
    })?;
    let mut velocity_gap: f64 = 0.0;
    let mut magnetic: f64 = 0.0;
    let mut budget_gap: f64 = 0.0;
    let mut time_gap: f64 = 0.0;
    let mut mhd_budget = BudgetTracker::new(1e-2);
    let mut n = 0;
    mhd.run(&MhdState::from_flow(&w0), 100, |s| {
        let (f, b) = &fluid[n];
        n += 1;
        let row = mhd_budget.push(mhd.budget_sample(s));
        velocity_gap = velocity_gap.max(
            f.w.minus(&s.velocity)
                .map_or(f64::INFINITY, |d| d.max_amplitude()),
        );
        magnetic = magnetic.max(s.magnetic.max_amplitude());
        budget_gap = budget_gap.max((row.budget_residual - b.budget_residual).abs());
        time_gap = time_gap.max((s.time - f.time).abs());
    })?;
    Ok(vec![
        Check::at_most(
            "velocity coefficient difference (100 steps)",
            velocity_gap,
            0.0,
        ),
        Check::at_most("magnetic field amplitude", magnetic, 0.0),
        Check::at_most("budget residual difference", budget_gap, 0.0),
        Check::at_most("time difference", time_gap, 0.0),
    ])
}

/// Aligned pass/fail table.
pub fn format_table(suite: Suite, checks: &[Check]) -> String {
    let name_width = checks
        .iter()
        .map(|c| c.name.len())
        .max()
        .unwrap_or(5)
        .max(5);
    let mut out = String::new();
    let title = format!("{suite:?}").to_lowercase();
    let _ = writeln!(out, "suite: {title}");
    let _ = writeln!(
        out,
        "{:<name_width$}  {:>12}  {:>12}  result",
        "check", "attained", "tolerance"
    );
    for c in checks {
        let _ = writeln!(
            out,
            "{:<name_width$}  {:>12.4e}  {:>12.4e}  {}",
            c.name,
            c.attained,
            c.tolerance,
            if c.pass { "PASS" } else { "FAIL" }
        );
    }
    let failed = checks.iter().filter(|c| !c.pass).count();
    let _ = writeln!(
        out,
        "{} of {} checks passed",
        checks.len() - failed,
        checks.len()
    );
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_marks_failures() {
        let checks = vec![
            Check::at_most("small", 1e-13, 1e-11),
            Check::at_least("order", 2.0, 3.5),
        ];
        let table = format_table(Suite::Budget, &checks);
        assert!(table.contains("PASS") && table.contains("FAIL"));
        assert!(table.contains("1 of 2 checks passed"));
    }

    #[test]
    fn reduction_suite_is_exact() {
        assert!(run_suite(Suite::Reduction, 0)
            .unwrap()
            .iter()
            .all(|c| c.pass));
    }
}
