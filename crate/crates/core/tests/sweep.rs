use std::f64::consts::PI;
use std::sync::Arc;

use critles::budget::model_energy;
use critles::diagnostics::{alpha_sweep, summarize_sweep, SweepOutcome};
use critles::initial::taylor_green;
use critles::nse::pressure_solve;
use critles::spectral::make_grid;
use critles::{
    FilterParams, FlowState, MhdConfig, MhdSolver, MhdState, NseConfig, NseSolver, TorusGrid,
};

fn grid() -> Arc<TorusGrid> {
    make_grid(16, 2.0 * PI, 2.0 / 3.0).unwrap()
}

fn nse_run(g: &Arc<TorusGrid>, theta: f64, alpha: f64) -> critles::Result<SweepOutcome> {
    let p = FilterParams::new(alpha, theta)?;
    let v0 = taylor_green(g, 1.0);
    let cfg = NseConfig::new(0.1, p, 0.01, 0.5);
    let out = NseSolver::new(g, cfg)?.run_to_end(&FlowState::initial(&v0, &p, true)?)?;
    Ok(SweepOutcome {
        fields: vec![
            ("pressure".into(), pressure_solve(&out.w, &p)?),
            ("velocity".into(), out.w),
        ],
    })
}

#[test]
fn sweep_errors_decrease_with_alpha() {
    let g = grid();
    let theta = FilterParams::CRITICAL_THETA;
    let reference = nse_run(&g, theta, 0.0).unwrap();
    let alphas = [0.4, 0.2, 0.1, 0.05];
    let records = alpha_sweep(&alphas, &reference, &[2.0, 3.0], 2, |a| {
        nse_run(&g, theta, a)
    })
    .unwrap();
    assert_eq!(records.iter().map(|r| r.alpha).collect::<Vec<_>>(), alphas);
    for field in ["velocity", "pressure"] {
        let s = summarize_sweep(&records, field);
        assert!(s.complete && s.strictly_decreasing, "{field}: {s:?}");
        assert!(s.slope.unwrap() > 0.0);
    }
    for r in &records {
        let e = r.error("velocity").unwrap();
        assert_eq!(e.lp.len(), 2);
        assert!(e.lp.iter().all(|(_, v)| *v > 0.0));
    }
}

#[test]
fn parallel_sweep_matches_serial_sweep() {
    let g = make_grid(8, 2.0 * PI, 2.0 / 3.0).unwrap();
    let theta = 1.0;
    let reference = nse_run(&g, theta, 0.0).unwrap();
    let run = |workers| {
        alpha_sweep(&[0.3, 0.1], &reference, &[3.0], workers, |a| {
            nse_run(&g, theta, a)
        })
        .unwrap()
        .into_iter()
        .map(|r| r.errors)
        .collect::<Vec<_>>()
    };
    assert_eq!(run(1), run(2));
}

#[test]
fn machine_epsilon_filter_is_nearly_the_identity() {
    // the deviation of the filter is of size eps^{2 theta}: ~6e-6 for theta = 1/6,
    // so the criterion is read on the energy of the difference
    let g = grid();
    for theta in [FilterParams::CRITICAL_THETA, 1.0] {
        let reference = nse_run(&g, theta, 0.0).unwrap();
        let energy = model_energy(
            reference.get("velocity").unwrap(),
            &FilterParams::identity(),
        );
        let records = alpha_sweep(&[f64::EPSILON], &reference, &[2.0], 1, |a| {
            nse_run(&g, theta, a)
        })
        .unwrap();
        let err = records[0].error_l2("velocity").unwrap();
        assert!(0.5 * err * err <= 1e-8 * energy, "theta {theta}: {err}");
        if theta == 1.0 {
            assert!(err <= 1e-8 * energy);
        }
    }
}

#[test]
fn invalid_alpha_lists_are_rejected() {
    let g = make_grid(4, 2.0 * PI, 2.0 / 3.0).unwrap();
    let reference = nse_run(&g, 1.0, 0.0).unwrap();
    for alphas in [&[0.0, 0.1][..], &[0.1, 0.2][..], &[][..]] {
        assert!(alpha_sweep(alphas, &reference, &[2.0], 1, |a| nse_run(&g, 1.0, a)).is_err());
    }
}

#[test]
fn diverged_members_are_flagged_and_the_sweep_continues() {
    let g = make_grid(8, 2.0 * PI, 2.0 / 3.0).unwrap();
    let reference = nse_run(&g, 1.0, 0.0).unwrap();
    let records = alpha_sweep(&[0.3, 0.2, 0.1], &reference, &[2.0], 1, |a| {
        if a == 0.2 {
            let p = FilterParams::new(a, 1.0)?;
            let w0 = FlowState::new(taylor_green(&g, 1e200), 0.0)?;
            NseSolver::new(&g, NseConfig::new(0.1, p, 0.01, 0.5))?.run_to_end(&w0)?;
            unreachable!("run should blow up");
        }
        nse_run(&g, 1.0, a)
    })
    .unwrap();
    assert!(records[0].failure.is_none() && records[2].failure.is_none());
    assert!(records[1]
        .failure
        .as_deref()
        .unwrap()
        .contains("non-finite"));
    assert!(!summarize_sweep(&records, "velocity").complete);
}

#[test]
fn mhd_sweep_with_zero_magnetic_field_matches_nse_sweep() {
    let g = make_grid(8, 2.0 * PI, 2.0 / 3.0).unwrap();
    let theta = FilterParams::CRITICAL_THETA;
    let mhd_run = |alpha: f64| -> critles::Result<SweepOutcome> {
        let p = FilterParams::new(alpha, theta)?;
        let v0 = taylor_green(&g, 1.0);
        let initial = MhdState::from_flow(&FlowState::initial(&v0, &p, true)?);
        let out =
            MhdSolver::new(&g, MhdConfig::new(0.1, 0.2, p, 0.01, 0.5))?.run_to_end(&initial)?;
        Ok(SweepOutcome {
            fields: vec![
                ("pressure".into(), critles::mhd::mhd_pressure(&out, &p)?),
                ("velocity".into(), out.velocity),
            ],
        })
    };
    let n_ref = nse_run(&g, theta, 0.0).unwrap();
    let m_ref = mhd_run(0.0).unwrap();
    let alphas = [0.4, 0.1];
    let n = alpha_sweep(&alphas, &n_ref, &[2.0, 3.0], 1, |a| nse_run(&g, theta, a)).unwrap();
    let m = alpha_sweep(&alphas, &m_ref, &[2.0, 3.0], 1, mhd_run).unwrap();
    for (x, y) in n.iter().zip(&m) {
        assert_eq!(x.errors, y.errors);
    }
}
