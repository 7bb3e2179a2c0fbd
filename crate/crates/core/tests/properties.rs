use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use critles::diagnostics::{difference_norms, shell_spectrum};
use critles::filter::{apply_filter, filter_deviation_bound, inverse_shift};
use critles::mhd::cancellation_check;
use critles::nse::nonlinear_term;
use critles::spectral::{
    leray_project, make_grid, random_field, random_solenoidal, read_snapshot, sobolev_norm,
    write_snapshot, FieldKind, SobolevIndex,
};
use critles::{FilterParams, MhdState, TorusGrid};
use proptest::prelude::*;

fn grid() -> Arc<TorusGrid> {
    static GRID: OnceLock<Arc<TorusGrid>> = OnceLock::new();
    GRID.get_or_init(|| make_grid(8, 2.0 * PI, 2.0 / 3.0).unwrap())
        .clone()
}

fn params() -> impl Strategy<Value = FilterParams> {
    (
        0.0f64..1.5,
        prop_oneof![Just(1.0 / 6.0), Just(1.0), 0.05f64..2.0],
    )
        .prop_map(|(alpha, theta)| FilterParams::new(alpha, theta).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn projection_is_an_orthogonal_projector(s1 in any::<u64>(), s2 in any::<u64>()) {
        let g = grid();
        let a = random_field(&g, FieldKind::Vector, s1);
        let b = random_field(&g, FieldKind::Vector, s2);
        let pa = leray_project(&a).unwrap();
        let pb = leray_project(&b).unwrap();
        let twice = leray_project(&pa).unwrap();
        prop_assert!(twice.minus(&pa).unwrap().max_amplitude() <= 1e-15);
        let lhs = pa.inner(&b).unwrap();
        let rhs = a.inner(&pb).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
        prop_assert!(pa.max_divergence() <= 1e-14);
    }

    #[test]
    fn filter_is_self_adjoint_contraction(s1 in any::<u64>(), s2 in any::<u64>(), p in params()) {
        let g = grid();
        let a = random_field(&g, FieldKind::Vector, s1);
        let b = random_field(&g, FieldKind::Vector, s2);
        let lhs = apply_filter(&a, &p).inner(&b).unwrap();
        let rhs = a.inner(&apply_filter(&b, &p)).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
        for s in [0.0, 1.0 / 6.0, 1.0] {
            let idx = SobolevIndex::full(s);
            prop_assert!(sobolev_norm(&apply_filter(&a, &p), idx) <= sobolev_norm(&a, idx) * (1.0 + 1e-15));
        }
        let back = inverse_shift(&apply_filter(&a, &p), &p);
        prop_assert!(back.minus(&a).unwrap().max_amplitude() <= 1e-13 * a.max_amplitude());
    }

    #[test]
    fn deviation_bound_holds(seed in any::<u64>(), s in 0.0f64..2.0, p in params()) {
        prop_assume!(p.alpha > 0.0);
        let f = random_field(&grid(), FieldKind::Scalar, seed);
        prop_assert!(filter_deviation_bound(&f, s, &p).unwrap().holds());
    }

    #[test]
    fn nonlinear_transfer_vanishes(seed in any::<u64>(), p in params(), amp in 0.1f64..10.0) {
        let g = grid();
        let w = random_solenoidal(&g, seed, -5.0 / 3.0).scaled(amp);
        let n = nonlinear_term(&w, &p).unwrap();
        let scale = sobolev_norm(&w, SobolevIndex::L2) * sobolev_norm(&n, SobolevIndex::L2);
        prop_assert!(n.inner(&inverse_shift(&w, &p)).unwrap().abs() <= 1e-11 * scale);
        prop_assert!(n.conjugate_asymmetry() == 0.0);
        prop_assert!(n.max_divergence() <= 1e-12 * n.max_amplitude().max(1e-300));
    }

    #[test]
    fn mhd_transfer_vanishes(s1 in any::<u64>(), s2 in any::<u64>(), p in params()) {
        let g = grid();
        let state = MhdState::new(
            random_solenoidal(&g, s1, -5.0 / 3.0),
            random_solenoidal(&g, s2, -1.0),
            0.0,
        ).unwrap();
        prop_assert!(cancellation_check(&state, &p).unwrap().relative() <= 1e-11);
    }

    #[test]
    fn norms_increase_with_index(seed in any::<u64>(), s in 0.0f64..2.0, ds in 0.0f64..1.0) {
        let f = random_field(&grid(), FieldKind::Vector, seed);
        prop_assert!(
            sobolev_norm(&f, SobolevIndex::full(s)) <= sobolev_norm(&f, SobolevIndex::full(s + ds)) * (1.0 + 1e-15)
        );
    }

    #[test]
    fn shells_partition_energy(seed in any::<u64>()) {
        let f = random_field(&grid(), FieldKind::Vector, seed);
        let total: f64 = shell_spectrum(&f).iter().sum();
        let energy = 0.5 * sobolev_norm(&f, SobolevIndex::L2).powi(2);
        prop_assert!((total - energy).abs() <= 1e-12 * energy);
    }

    #[test]
    fn difference_norms_satisfy_triangle_inequality(s1 in any::<u64>(), s2 in any::<u64>(), s3 in any::<u64>()) {
        let g = grid();
        let a = random_field(&g, FieldKind::Vector, s1);
        let b = random_field(&g, FieldKind::Vector, s2);
        let c = random_field(&g, FieldKind::Vector, s3);
        let p = [2.0, 3.0];
        let ab = difference_norms(&a, &b, &p).unwrap();
        let bc = difference_norms(&b, &c, &p).unwrap();
        let ac = difference_norms(&a, &c, &p).unwrap();
        prop_assert!(ac.l2 <= (ab.l2 + bc.l2) * (1.0 + 1e-14));
        for i in 0..p.len() {
            prop_assert!(ac.lp[i].1 <= (ab.lp[i].1 + bc.lp[i].1) * (1.0 + 1e-14));
        }
    }

    #[test]
    fn snapshot_roundtrip_is_bit_exact(seed in any::<u64>(), t in 0.0f64..10.0) {
        let dir = tempfile::tempdir().unwrap();
        let f = random_solenoidal(&grid(), seed, -2.0);
        let meta_path = write_snapshot(&f, t, &dir.path().join("w")).unwrap();
        let (back, meta) = read_snapshot(&meta_path).unwrap();
        prop_assert_eq!(back, f);
        prop_assert_eq!(meta.time, t);
        prop_assert!(meta.flags.divergence_free && meta.flags.zero_mean && meta.flags.real);
    }
}

#[test]
fn deviation_scales_with_filter_strength() {
    // a long box keeps alpha |k| small, where the deviation is linear in alpha^{2 theta}
    for theta in [1.0 / 6.0, 1.0] {
        let g = make_grid(16, 2.0 * PI * 1000.0, 2.0 / 3.0).unwrap();
        let f = random_field(&g, FieldKind::Scalar, 21).masked();
        let alphas = [0.2, 0.1, 0.05];
        let lhs: Vec<f64> = alphas
            .iter()
            .map(|&a| {
                filter_deviation_bound(&f, 0.0, &FilterParams::new(a, theta).unwrap())
                    .unwrap()
                    .lhs
            })
            .collect();
        let slope = (lhs[0] / lhs[2]).ln() / (alphas[0] / alphas[2]).ln();
        assert!(
            (slope - 2.0 * theta).abs() <= 0.05,
            "theta {theta}: slope {slope}"
        );
    }
}

#[test]
fn deviation_of_unit_mode() {
    let g = grid();
    let mut f = critles::SpectralField::zeros(&g, FieldKind::Scalar);
    f.set_mode([1, 0, 0], 0, num_complex::Complex64::new(1.0, 0.0))
        .unwrap();
    let b = filter_deviation_bound(&f, 0.0, &FilterParams::critical(1.0).unwrap()).unwrap();
    let norm = sobolev_norm(&f, SobolevIndex::L2);
    assert!((b.lhs - 0.5 * norm).abs() < 1e-14 * norm);
    assert!((b.rhs - 2f64.powf(1.0 / 6.0) * 0.5 * norm).abs() < 1e-14 * norm);
    assert!(b.lhs < b.rhs);
}
