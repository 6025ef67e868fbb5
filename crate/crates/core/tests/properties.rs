use approx::assert_relative_eq;
use hjb_core::linalg::{pseudo_inverse, PINV_RTOL};
use hjb_core::regulation::{extract_physical, regulation_control, state_penalty};
use hjb_core::tracking::tracking_control;
use hjb_core::{
    builtin_example, BasisSet, CostConfig, DynamicsModel, ExampleIIParams, ExampleId, ReferenceTrajectory,
};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn models() -> Vec<(DynamicsModel, CostConfig)> {
    vec![
        (builtin_example(ExampleId::I, None).unwrap(), CostConfig::identity(2, 1, 1.0).unwrap()),
        (
            builtin_example(ExampleId::II, Some(ExampleIIParams::CASE_1)).unwrap(),
            CostConfig::identity(2, 1, 0.5).unwrap(),
        ),
        (
            builtin_example(ExampleId::II, Some(ExampleIIParams::CASE_2)).unwrap(),
            CostConfig::identity(2, 1, 0.5).unwrap(),
        ),
        (builtin_example(ExampleId::III, None).unwrap(), CostConfig::identity(2, 3, 0.1).unwrap()),
    ]
}

fn state() -> impl Strategy<Value = DVector<f64>> {
    (-5.0..5.0f64, -5.0..5.0f64).prop_map(|(a, b)| DVector::from_vec(vec![a, b]))
}

proptest! {
    #[test]
    fn gram_is_symmetric_psd(x in state()) {
        for (model, _) in models() {
            let g = model.gram(&x).unwrap();
            prop_assert!((&g - g.transpose()).amax() <= 1e-12 * (1.0 + g.amax()));
            let scale = g.amax();
            let eig = g.symmetric_eigen().eigenvalues;
            prop_assert!(eig.min() >= -1e-9 * (1.0 + scale));
        }
    }

    #[test]
    fn hjb_closure(x in state()) {
        for (model, cfg) in models() {
            let d = regulation_control(&model, &cfg, &x).unwrap();
            let q = state_penalty(&model, &cfg, &x).unwrap();
            let uru = d.u_aug.dot(&(cfg.r() * &d.u_aug));
            prop_assert!((uru - q).abs() <= 1e-9 * (1.0 + q));
        }
    }

    #[test]
    fn lyapunov_derivative_is_negative(x in state()) {
        for (model, cfg) in models() {
            let d = regulation_control(&model, &cfg, &x).unwrap();
            if d.degenerate {
                continue;
            }
            let p = model.augmented_matrix(&x).unwrap();
            let v_dot = x.dot(&(p.as_matrix() * &d.u_aug));
            prop_assert!(v_dot < 0.0, "V' = {v_dot} at {x:?}");
        }
    }

    #[test]
    fn scaling_r_by_four_halves_u(x in state()) {
        for (model, cfg) in models() {
            let scaled = CostConfig::new(cfg.q0().clone(), cfg.r() * 4.0, cfg.gamma(), cfg.deadzone_eps()).unwrap();
            let a = regulation_control(&model, &cfg, &x).unwrap();
            let b = regulation_control(&model, &scaled, &x).unwrap();
            for (ua, ub) in a.u_aug.iter().zip(b.u_aug.iter()) {
                prop_assert!((0.5 * ua - ub).abs() <= 1e-12 * (1.0 + ua.abs()));
            }
        }
    }

    #[test]
    fn physical_input_drops_first_entry(v in proptest::collection::vec(-10.0..10.0f64, 2..6)) {
        let u = DVector::from_vec(v.clone());
        let tau = extract_physical(&u);
        prop_assert_eq!(tau.as_slice(), &v[1..]);
    }

    #[test]
    fn pseudo_inverse_satisfies_penrose(entries in proptest::collection::vec(-3.0..3.0f64, 6)) {
        let a = DMatrix::from_vec(2, 3, entries);
        let (p, _) = pseudo_inverse(&a, PINV_RTOL).unwrap();
        prop_assert!((&a * &p * &a - &a).amax() < 1e-9);
        prop_assert!((&p * &a * &p - &p).amax() < 1e-9);
    }

    #[test]
    fn basis_gradients_match_finite_differences(x in state()) {
        for basis in [BasisSet::example_one(), BasisSet::example_three()] {
            prop_assert!(basis.gradient_mismatch(&x, 1e-6) < 1e-4 * (1.0 + x.norm().powi(4)));
        }
    }
}

#[test]
fn zero_reference_tracking_equals_regulation_on_many_states() {
    let reference = ReferenceTrajectory::zero(2);
    let mut rng_state = 1u64;
    let mut next = || {
        rng_state = rng_state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((rng_state >> 11) as f64 / (1u64 << 53) as f64) * 10.0 - 5.0
    };
    for _ in 0..100 {
        let x = DVector::from_vec(vec![next(), next()]);
        for (model, cfg) in models() {
            let reg = regulation_control(&model, &cfg, &x).unwrap().tau;
            let trk = tracking_control(&model, &cfg, &x, &reference, 0.0).unwrap();
            assert_eq!(reg, trk);
        }
    }
}

#[test]
fn deadzone_gives_zero_control_at_origin() {
    for (model, cfg) in models() {
        let d = regulation_control(&model, &cfg, &DVector::zeros(2)).unwrap();
        assert!(d.degenerate);
        assert_relative_eq!(d.tau.norm(), 0.0);
    }
}
