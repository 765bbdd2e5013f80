use cldyn_core::activation::Activation;
use cldyn_core::data::{Moments, Streams};
use cldyn_core::expectations::{MeanField, MeanFieldParams, QuadratureSpec};
use cldyn_core::ode::*;
use cldyn_core::sgd::normalize;
use cldyn_core::{HiddenDistribution, NoiseModel};
use proptest::prelude::*;
use rand::Rng;

fn small_quad() -> QuadratureSpec {
    QuadratureSpec {
        n_e: 21,
        n_gamma: 9,
        n_c: 9,
    }
}

fn hidden() -> impl Strategy<Value = HiddenDistribution> {
    prop_oneof![
        (0.2f64..3.0).prop_map(HiddenDistribution::gaussian),
        (0.5f64..8.0, 0.05f64..1.0).prop_map(|(a, p)| HiddenDistribution::three_point(a, p)),
    ]
}

fn noise() -> impl Strategy<Value = NoiseModel> {
    prop_oneof![
        Just(NoiseModel::None),
        (0.0f64..2.0).prop_map(|eta| NoiseModel::Independent { eta }),
        (0.0f64..2.0).prop_map(|eta| NoiseModel::AntiCorrelated { eta }),
        (0.0f64..2.0, -0.99f64..0.99).prop_map(|(eta, rho)| NoiseModel::Correlated { eta, rho }),
    ]
}

fn three_point_moments() -> impl Strategy<Value = Moments> {
    (0.5f64..8.0, 0.05f64..1.0).prop_map(|(a, p)| HiddenDistribution::three_point(a, p).moments())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gradient_variance_is_nonnegative(
        h in hidden(),
        noise in noise(),
        relu in any::<bool>(),
        tau in 0.0f64..1.0,
        m in 1usize..50,
        q in -0.999f64..0.999,
    ) {
        let act = if relu { Activation::Relu } else { Activation::Quadratic };
        let mf = MeanField::new(
            MeanFieldParams::new(act, vec![h], tau, m).with_noise(noise).with_quadrature(small_quad()),
        ).unwrap();
        prop_assert!(mf.coefficients(&[q]).unwrap().lambda >= 0.0);
    }

    #[test]
    fn origin_and_axes_are_invariant(
        a in three_point_moments(),
        b in three_point_moments(),
        tau in 0.0f64..1.0,
        m in 1.0f64..50.0,
        s in 0.0f64..1.0,
        eta in 0.0f64..2.0,
    ) {
        let p = QuadraticParams::new(vec![a], tau, m);
        prop_assert_eq!(rhs_quadratic_1d(0.0, &p).unwrap(), 0.0);
        let pn = p.clone().with_eta(eta);
        for mode in [NoiseMode::Independent, NoiseMode::AntiCorrelated] {
            prop_assert_eq!(rhs_quadratic_noise(0.0, &pn, mode).unwrap(), 0.0);
        }
        let p2 = QuadraticParams::new(vec![a, b], tau, m);
        prop_assert_eq!(rhs_quadratic_2d(s, 0.0, &p2).unwrap()[1], 0.0);
        prop_assert_eq!(rhs_quadratic_2d(0.0, s, &p2).unwrap()[0], 0.0);
        prop_assert_eq!(rhs_quadratic_2d(0.0, 0.0, &p2).unwrap(), [0.0, 0.0]);
    }

    #[test]
    fn quadrature_rhs_keeps_axes_invariant(
        h1 in hidden(),
        h2 in hidden(),
        noise in noise(),
        q in -0.99f64..0.99,
    ) {
        let mf = MeanField::new(
            MeanFieldParams::new(Activation::Quadratic, vec![h1, h2], 0.1, 10)
                .with_noise(noise)
                .with_quadrature(small_quad()),
        ).unwrap();
        prop_assert_eq!(mf.rhs(&[q, 0.0]).unwrap()[1], 0.0);
        prop_assert_eq!(mf.rhs(&[0.0, q]).unwrap()[0], 0.0);
        prop_assert_eq!(mf.rhs(&[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn normalization_restores_sphere(n in 2usize..2000, seed in any::<u64>(), scale in 1e-3f64..1e3) {
        let mut rng = Streams::new(seed).init;
        let mut w: Vec<f64> = (0..n).map(|_| scale * (rng.random::<f64>() - 0.5)).collect();
        prop_assume!(w.iter().any(|v| *v != 0.0));
        normalize(&mut w, 0).unwrap();
        let norm2: f64 = w.iter().map(|v| v * v).sum();
        prop_assert!((norm2 - n as f64).abs() <= 1e-10 * n as f64);
    }

    #[test]
    fn closed_forms_stay_in_domain(a in three_point_moments(), q0 in 0.0f64..1.0) {
        let p = QuadraticParams::new(vec![a], 0.1, 10.0);
        let traj = integrate(closed_form_1d(&p), &[q0], 5.0, 1e-2, Domain::UnitInterval, 10).unwrap();
        prop_assert!(traj.states.iter().all(|x| (0.0..=1.0).contains(&x[0])));
    }
}
