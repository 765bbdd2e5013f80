use cldyn_core::activation::{Activation, Prior};
use cldyn_core::data::{generate_feature_matrix, Streams};
use cldyn_core::expectations::Centering;
use cldyn_core::sgd::*;
use cldyn_core::{Execution, HiddenDistribution, NoiseModel};

fn base(hidden: Vec<HiddenDistribution>) -> TrainConfig {
    let mut cfg = TrainConfig::new(400, hidden, 5, 0.2, 3.0);
    cfg.init = Init::Directed { q0: 0.3, feature: 0 };
    cfg.record_stride = Some(200);
    cfg
}

/// Welch statistic between two ensembles at every recorded time, plus the
/// ratio of their spreads.
fn compare_samplers(cfg: &TrainConfig, seeds: usize) -> (f64, f64) {
    let mut explicit = cfg.clone();
    explicit.sampler = Sampler::Explicit;
    let mut reduced = cfg.clone();
    reduced.sampler = Sampler::Reduced;
    let a_seeds: Vec<u64> = (0..seeds as u64).collect();
    let b_seeds: Vec<u64> = (1000..1000 + seeds as u64).collect();
    let a = ensemble_stats(&run_ensemble(&explicit, &a_seeds, Execution::Parallel).unwrap(), 0);
    let b = ensemble_stats(&run_ensemble(&reduced, &b_seeds, Execution::Parallel).unwrap(), 0);
    assert_eq!(a.times, b.times);
    let mut worst_z: f64 = 0.0;
    let mut worst_ratio: f64 = 1.0;
    for i in 1..a.times.len() {
        let se = a.std_err[i].hypot(b.std_err[i]);
        worst_z = worst_z.max((a.mean[i] - b.mean[i]).abs() / se);
        let r = a.std_err[i] / b.std_err[i];
        if (r.ln()).abs() > worst_ratio.ln().abs() {
            worst_ratio = r;
        }
    }
    (worst_z, worst_ratio)
}

fn assert_equivalent(name: &str, cfg: &TrainConfig) {
    let (z, ratio) = compare_samplers(cfg, 40);
    assert!(z < 4.0, "{name}: ensemble means differ, z = {z:.2}");
    assert!(ratio > 0.55 && ratio < 1.8, "{name}: spread ratio {ratio:.2}");
}

#[test]
fn reduced_sampler_matches_explicit_without_noise() {
    assert_equivalent("quadratic", &base(vec![HiddenDistribution::three_point(6.0, 0.2)]));
}

#[test]
fn reduced_sampler_matches_explicit_with_independent_noise() {
    let mut cfg = base(vec![HiddenDistribution::three_point(6.0, 0.2)]);
    cfg.noise = NoiseModel::Independent { eta: 0.3 };
    assert_equivalent("independent", &cfg);
}

#[test]
fn reduced_sampler_matches_explicit_with_anticorrelated_noise() {
    let mut cfg = base(vec![HiddenDistribution::three_point(6.0, 0.2)]);
    cfg.noise = NoiseModel::AntiCorrelated { eta: 0.3 };
    assert_equivalent("anticorrelated", &cfg);
}

#[test]
fn reduced_sampler_matches_explicit_for_relu_with_two_features() {
    let mut cfg = base(vec![HiddenDistribution::gaussian(2.0), HiddenDistribution::three_point(6.0, 0.2)]);
    cfg.activation = Activation::Relu;
    cfg.centering = Centering::Population;
    cfg.noise = NoiseModel::Correlated { eta: 0.2, rho: 0.5 };
    cfg.tau = 0.5;
    assert_equivalent("relu", &cfg);
}

#[test]
fn weight_norm_is_preserved() {
    for sampler in [Sampler::Explicit, Sampler::Reduced] {
        let mut cfg = base(vec![HiddenDistribution::three_point(6.0, 0.2)]);
        cfg.sampler = sampler;
        cfg.noise = NoiseModel::Independent { eta: 0.5 };
        cfg.prior = Prior::Linear { slope: 0.3 };
        cfg.t_final = 1.0;
        let mut streams = Streams::new(7);
        let state = initial_state(&cfg, &mut streams).unwrap();
        let (_, end) = run_training_from(state, &cfg, &mut streams.data).unwrap();
        let norm2: f64 = end.w.iter().map(|v| v * v).sum();
        assert!((norm2 - 400.0).abs() < 1e-10 * 400.0, "{sampler:?}: {norm2}");
        assert_eq!(end.k, cfg.steps());
    }
}

#[test]
fn runs_are_reproducible_and_execution_independent() {
    let cfg = base(vec![HiddenDistribution::three_point(6.0, 0.2)]);
    let seeds = [3, 4, 5];
    let a = run_ensemble(&cfg, &seeds, Execution::Sequential).unwrap();
    let b = run_ensemble(&cfg, &seeds, Execution::Parallel).unwrap();
    assert_eq!(a, b);
    let c = run_training(&TrainConfig { seed: 4, ..cfg.clone() }).unwrap();
    assert_eq!(c, a[1]);
    let d = run_training(&TrainConfig { seed: 9, ..cfg }).unwrap();
    assert_ne!(d, a[1]);
}

#[test]
fn directed_start_has_requested_overlap() {
    let mut cfg = base(vec![HiddenDistribution::gaussian(1.0), HiddenDistribution::gaussian(1.0)]);
    cfg.init = Init::Directed { q0: 0.25, feature: 1 };
    let state = initial_state(&cfg, &mut Streams::new(2)).unwrap();
    let (q, _) = empirical_order_params(&state, &Prior::Zero);
    assert!(q[0].abs() < 1e-12);
    assert!((q[1] * q[1] - 0.25).abs() < 1e-12);
}

#[test]
fn random_start_has_small_overlap() {
    let mut cfg = base(vec![HiddenDistribution::gaussian(1.0)]);
    cfg.init = Init::Random;
    cfg.n = 10_000;
    let state = initial_state(&cfg, &mut Streams::new(2)).unwrap();
    let (q, _) = empirical_order_params(&state, &Prior::Zero);
    // q ~ N(0, 1/N)
    assert!(q[0].abs() < 5.0 / 100.0);
}

#[test]
fn features_are_orthogonal_with_norm_root_n() {
    let mut rng = Streams::new(1).features;
    let u = generate_feature_matrix(300, 3, &mut rng).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            let d: f64 = u.column(i).iter().zip(u.column(j)).map(|(a, b)| a * b).sum();
            let want = if i == j { 300.0 } else { 0.0 };
            assert!((d - want).abs() < 1e-9, "{i} {j} {d}");
        }
    }
}

#[test]
fn invalid_configs_are_rejected() {
    let mut cfg = base(vec![HiddenDistribution::gaussian(1.0)]);
    cfg.batch = 0;
    assert!(run_training(&cfg).is_err());
    let mut cfg = base(vec![HiddenDistribution::gaussian(1.0)]);
    cfg.n = 1;
    assert!(run_training(&cfg).is_err());
    let mut cfg = base(vec![HiddenDistribution::gaussian(1.0)]);
    cfg.init = Init::Directed { q0: 1.5, feature: 0 };
    assert!(run_training(&cfg).is_err());
}
