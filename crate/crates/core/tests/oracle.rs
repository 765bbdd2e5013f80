//! Closed-form quadratic ODEs against the general quadrature right-hand side.

use cldyn_core::data::{HiddenDistribution, Moments, NoiseModel};
use cldyn_core::expectations::{MeanField, MeanFieldParams};
use cldyn_core::ode::{rhs_quadratic_1d, rhs_quadratic_2d, rhs_quadratic_noise, NoiseMode, QuadraticForm, QuadraticParams};
use cldyn_core::Activation;

const TAU: f64 = 0.1;
const M: usize = 10;

fn general(hidden: Vec<HiddenDistribution>, noise: NoiseModel) -> MeanField {
    MeanField::new(MeanFieldParams::new(Activation::Quadratic, hidden, TAU, M).with_noise(noise)).unwrap()
}

fn laws_1d() -> Vec<HiddenDistribution> {
    vec![
        HiddenDistribution::three_point(4.5, 0.2),
        HiddenDistribution::three_point(5.0, 0.2),
        HiddenDistribution::three_point(5.5, 0.2),
        HiddenDistribution::gaussian(1.2),
        HiddenDistribution::Discrete {
            values: vec![-2.0, -0.5, 0.5, 2.0],
            probabilities: vec![0.1, 0.4, 0.4, 0.1],
        },
    ]
}

#[test]
fn single_feature_closed_form_matches_quadrature() {
    for law in laws_1d() {
        let mf = general(vec![law.clone()], NoiseModel::None);
        let p = QuadraticParams::new(vec![law.moments()], TAU, M as f64);
        for k in 1..=19 {
            let big_q = k as f64 / 20.0;
            let q = big_q.sqrt();
            let want = 2.0 * q * mf.rhs(&[q]).unwrap()[0];
            let got = rhs_quadratic_1d(big_q, &p).unwrap();
            assert!((got - want).abs() < 1e-10, "{law:?} Q={big_q}: {got} vs {want}");
        }
    }
}

#[test]
fn dropped_factor_variant_disagrees_with_quadrature() {
    let law = HiddenDistribution::three_point(5.5, 0.2);
    let mf = general(vec![law.clone()], NoiseModel::None);
    let mut p = QuadraticParams::new(vec![law.moments()], TAU, M as f64);
    p.form = QuadraticForm::DroppedFactor;
    let q = 0.5f64.sqrt();
    let want = 2.0 * q * mf.rhs(&[q]).unwrap()[0];
    assert!((rhs_quadratic_1d(0.5, &p).unwrap() - want).abs() > 1e-2);
}

#[test]
fn two_feature_closed_form_matches_quadrature() {
    let pairs = [
        (HiddenDistribution::gaussian(1.2), HiddenDistribution::three_point(5.5, 0.2)),
        (HiddenDistribution::three_point(4.5, 0.2), HiddenDistribution::three_point(6.0, 0.25)),
    ];
    for (a, b) in pairs {
        let mf = general(vec![a.clone(), b.clone()], NoiseModel::None);
        let p = QuadraticParams::new(vec![a.moments(), b.moments()], TAU, M as f64);
        for i in 0..10 {
            for j in 0..10 {
                let (q1, q2) = ((i as f64 + 0.5) / 10.0, (j as f64 + 0.5) / 10.0);
                if q1 + q2 > 1.0 {
                    continue;
                }
                let q = [q1.sqrt(), q2.sqrt()];
                let d = mf.rhs(&q).unwrap();
                let got = rhs_quadratic_2d(q1, q2, &p).unwrap();
                for k in 0..2 {
                    let want = 2.0 * q[k] * d[k];
                    assert!((got[k] - want).abs() < 1e-10, "({q1},{q2})[{k}]: {} vs {want}", got[k]);
                }
            }
        }
    }
}

#[test]
fn noisy_closed_form_matches_quadrature() {
    for law in [HiddenDistribution::three_point(5.0, 0.2), HiddenDistribution::three_point(5.5, 0.2)] {
        for (mode, make) in [
            (NoiseMode::Independent, (|eta| NoiseModel::Independent { eta }) as fn(f64) -> NoiseModel),
            (NoiseMode::AntiCorrelated, |eta| NoiseModel::AntiCorrelated { eta }),
        ] {
            for eta in [0.05, 0.3, 1.0] {
                let mf = general(vec![law.clone()], make(eta));
                let p = QuadraticParams::new(vec![law.moments()], TAU, M as f64).with_eta(eta);
                for k in 1..=9 {
                    let big_q = k as f64 / 10.0;
                    let q = big_q.sqrt();
                    let want = 2.0 * q * mf.rhs(&[q]).unwrap()[0];
                    let got = rhs_quadratic_noise(big_q, &p, mode).unwrap();
                    assert!(
                        (got - want).abs() < 1e-9 * want.abs().max(1.0),
                        "{mode:?} eta={eta} Q={big_q}: {got} vs {want}"
                    );
                }
            }
        }
    }
}

#[test]
fn moments_only_enter_through_triples() {
    // two different laws with equal (m₂, m₄, m₆) give the same quadrature rhs
    let a = HiddenDistribution::three_point(5.5, 0.2);
    let m: Moments = a.moments();
    let b = HiddenDistribution::Discrete {
        values: vec![-(5.5f64).sqrt(), 0.0, (5.5f64).sqrt()],
        probabilities: vec![0.1, 0.8, 0.1],
    };
    assert_eq!(b.moments(), m);
    let (ra, rb) = (general(vec![a], NoiseModel::None), general(vec![b], NoiseModel::None));
    assert!((ra.rhs(&[0.7]).unwrap()[0] - rb.rhs(&[0.7]).unwrap()[0]).abs() < 1e-14);
}
