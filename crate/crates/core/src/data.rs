//! Spiked-sphere data: `x = U c/√N + a`, with `a` Gaussian in the complement
//! of the feature subspace, and the two additively-noised views of each sample.

use rand::Rng as _;
use rand::SeedableRng;
use rand_distr::StandardNormal;
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::error::{Error, Result};
use crate::quadrature::gauss_hermite;

pub type Rng = Xoshiro256PlusPlus;

/// Independent random streams derived from one seed: feature matrix, weight
/// initialization and the data/noise draws. Streams are 2¹²⁸ steps apart.
pub struct Streams {
    pub features: Rng,
    pub init: Rng,
    pub data: Rng,
}

impl Streams {
    pub fn new(seed: u64) -> Self {
        let features = Rng::seed_from_u64(seed);
        let mut init = features.clone();
        init.jump();
        let mut data = init.clone();
        data.jump();
        Streams {
            features,
            init,
            data,
        }
    }
}

/// Even moments (m₂, m₄, m₆) of a hidden-variable law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub m2: f64,
    pub m4: f64,
    pub m6: f64,
}

impl Moments {
    pub const fn new(m2: f64, m4: f64, m6: f64) -> Self {
        Moments { m2, m4, m6 }
    }

    pub const fn standard_normal() -> Self {
        Moments::new(1.0, 3.0, 15.0)
    }

    /// Deviations from the standard normal: ν = m₂−1, κ = m₄−3, β = m₆−15.
    pub fn nu(&self) -> f64 {
        self.m2 - 1.0
    }
    pub fn kappa(&self) -> f64 {
        self.m4 - 3.0
    }
    pub fn beta(&self) -> f64 {
        self.m6 - 15.0
    }

    /// Whether some probability law has these moments (Cauchy–Schwarz chain,
    /// with a little slack for rounding).
    pub fn is_realizable(&self) -> bool {
        let tol = 1e-12;
        if !(self.m2.is_finite() && self.m4.is_finite() && self.m6.is_finite()) {
            return false;
        }
        if self.m2 < 0.0 || self.m4 < self.m2 * self.m2 * (1.0 - tol) {
            return false;
        }
        self.m2 == 0.0 || self.m6 >= self.m4 * self.m4 / self.m2 * (1.0 - tol)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum HiddenDistribution {
    Gaussian { variance: f64 },
    /// Mass `mass/2` at each of `±√amplitude`, `1 − mass` at zero.
    ThreePoint { amplitude: f64, mass: f64 },
    Discrete { values: Vec<f64>, probabilities: Vec<f64> },
}

impl HiddenDistribution {
    pub fn gaussian(variance: f64) -> Self {
        HiddenDistribution::Gaussian { variance }
    }

    pub fn three_point(amplitude: f64, mass: f64) -> Self {
        HiddenDistribution::ThreePoint { amplitude, mass }
    }

    /// The three-point law with given (m₂, m₄): amplitude m₄/m₂, mass m₂²/m₄.
    pub fn three_point_from_moments(m2: f64, m4: f64) -> Result<Self> {
        if !(m2 > 0.0 && m4 >= m2 * m2) {
            return Err(Error::param(
                "three-point moments",
                format!("need m2 > 0 and m4 >= m2^2, got m2 = {m2}, m4 = {m4}"),
            ));
        }
        Ok(HiddenDistribution::three_point(m4 / m2, m2 * m2 / m4))
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            HiddenDistribution::Gaussian { variance } => {
                if !(variance.is_finite() && *variance >= 0.0) {
                    return Err(Error::param("variance", format!("must be >= 0, got {variance}")));
                }
            }
            HiddenDistribution::ThreePoint { amplitude, mass } => {
                if !(amplitude.is_finite() && *amplitude >= 0.0) {
                    return Err(Error::param("amplitude", format!("must be >= 0, got {amplitude}")));
                }
                if !(0.0..=1.0).contains(mass) {
                    return Err(Error::param("mass", format!("must lie in [0, 1], got {mass}")));
                }
            }
            HiddenDistribution::Discrete {
                values,
                probabilities,
            } => {
                if values.is_empty() || values.len() != probabilities.len() {
                    return Err(Error::param(
                        "probabilities",
                        "need one probability per value and at least one value",
                    ));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::param("values", "must be finite"));
                }
                if probabilities.iter().any(|p| !(*p >= 0.0)) {
                    return Err(Error::param("probabilities", "must be non-negative"));
                }
                let total: f64 = probabilities.iter().sum();
                if (total - 1.0).abs() > 1e-12 {
                    return Err(Error::param(
                        "probabilities",
                        format!("must sum to 1 within 1e-12, sum is {total}"),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn mean(&self) -> f64 {
        match self {
            HiddenDistribution::Gaussian { .. } | HiddenDistribution::ThreePoint { .. } => 0.0,
            HiddenDistribution::Discrete {
                values,
                probabilities,
            } => values.iter().zip(probabilities).map(|(v, p)| v * p).sum(),
        }
    }

    pub fn moments(&self) -> Moments {
        match self {
            HiddenDistribution::Gaussian { variance: v } => {
                Moments::new(*v, 3.0 * v * v, 15.0 * v * v * v)
            }
            HiddenDistribution::ThreePoint { amplitude: a, mass: p } => {
                Moments::new(a * p, a * a * p, a * a * a * p)
            }
            HiddenDistribution::Discrete {
                values,
                probabilities,
            } => {
                let m = |k: i32| -> f64 {
                    values
                        .iter()
                        .zip(probabilities)
                        .map(|(v, p)| p * v.powi(k))
                        .sum()
                };
                Moments::new(m(2), m(4), m(6))
            }
        }
    }

    pub fn sample(&self, rng: &mut Rng) -> f64 {
        match self {
            HiddenDistribution::Gaussian { variance } => {
                variance.sqrt() * rng.sample::<f64, _>(StandardNormal)
            }
            HiddenDistribution::ThreePoint { amplitude, mass } => {
                let u: f64 = rng.random();
                if u < 0.5 * mass {
                    amplitude.sqrt()
                } else if u < *mass {
                    -amplitude.sqrt()
                } else {
                    0.0
                }
            }
            HiddenDistribution::Discrete {
                values,
                probabilities,
            } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (v, p) in values.iter().zip(probabilities) {
                    acc += p;
                    if u < acc {
                        return *v;
                    }
                }
                *values.last().expect("validated non-empty")
            }
        }
    }

    /// Nodes and weights that integrate against this law: exact for discrete
    /// laws, an `n_gauss`-point Gauss–Hermite rule for the Gaussian.
    pub fn quadrature(&self, n_gauss: usize) -> (Vec<f64>, Vec<f64>) {
        match self {
            HiddenDistribution::Gaussian { variance } => {
                let r = gauss_hermite(n_gauss).scaled(*variance);
                (r.nodes, r.weights)
            }
            HiddenDistribution::ThreePoint { amplitude, mass } => {
                let a = amplitude.sqrt();
                (vec![-a, 0.0, a], vec![0.5 * mass, 1.0 - mass, 0.5 * mass])
            }
            HiddenDistribution::Discrete {
                values,
                probabilities,
            } => (values.clone(), probabilities.clone()),
        }
    }
}

/// Law of the two augmentation noises, per coordinate:
/// `(γ⁽¹⁾, γ⁽²⁾) ~ N(0, [[η, ρη], [ρη, η]])`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseModel {
    None,
    Independent { eta: f64 },
    /// `γ⁽²⁾ = −γ⁽¹⁾` exactly.
    AntiCorrelated { eta: f64 },
    Correlated { eta: f64, rho: f64 },
}

impl NoiseModel {
    pub fn eta(&self) -> f64 {
        match *self {
            NoiseModel::None => 0.0,
            NoiseModel::Independent { eta }
            | NoiseModel::AntiCorrelated { eta }
            | NoiseModel::Correlated { eta, .. } => eta,
        }
    }

    pub fn rho(&self) -> f64 {
        match *self {
            NoiseModel::None | NoiseModel::Independent { .. } => 0.0,
            NoiseModel::AntiCorrelated { .. } => -1.0,
            NoiseModel::Correlated { rho, .. } => rho,
        }
    }

    pub fn is_silent(&self) -> bool {
        self.eta() == 0.0
    }

    pub fn validate(&self) -> Result<()> {
        let eta = self.eta();
        if !(eta.is_finite() && eta >= 0.0) {
            return Err(Error::param("eta", format!("must be >= 0, got {eta}")));
        }
        let rho = self.rho();
        if !(-1.0..=1.0).contains(&rho) {
            return Err(Error::param("rho", format!("must lie in [-1, 1], got {rho}")));
        }
        Ok(())
    }
}

/// Feature matrix with columns of squared norm `N`, stored column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    n: usize,
    cols: Vec<Vec<f64>>,
}

impl FeatureMatrix {
    pub fn from_columns(cols: Vec<Vec<f64>>) -> Result<Self> {
        let n = cols.first().map_or(0, Vec::len);
        if cols.is_empty() || n == 0 || cols.iter().any(|c| c.len() != n) || cols.len() > n {
            return Err(Error::InvalidDimension { n, d1: cols.len() });
        }
        Ok(FeatureMatrix { n, cols })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d1(&self) -> usize {
        self.cols.len()
    }

    pub fn column(&self, i: usize) -> &[f64] {
        &self.cols[i]
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.cols
    }

    /// `Uᵀv`.
    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        self.cols.iter().map(|c| dot(c, v)).collect()
    }
}

/// Dot product with four independent accumulators, so the loop vectorizes.
/// The summation order is fixed, which keeps runs bit-reproducible.
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 4];
    let chunks = n / 4;
    for k in 0..chunks {
        let i = 4 * k;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut tail = 0.0;
    for i in 4 * chunks..n {
        tail += a[i] * b[i];
    }
    (acc[0] + acc[2]) + (acc[1] + acc[3]) + tail
}

/// Orthonormalized i.i.d. Gaussian columns, rescaled to norm √N.
pub fn generate_feature_matrix(n: usize, d1: usize, rng: &mut Rng) -> Result<FeatureMatrix> {
    if d1 == 0 || d1 > n {
        return Err(Error::InvalidDimension { n, d1 });
    }
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(d1);
    for _ in 0..d1 {
        let mut v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        // two passes of modified Gram-Schmidt keep the Gram matrix at rounding level
        for _ in 0..2 {
            for c in &cols {
                let a = dot(c, &v) / n as f64;
                v.iter_mut().zip(c).for_each(|(x, y)| *x -= a * y);
            }
        }
        let scale = (n as f64).sqrt() / dot(&v, &v).sqrt();
        v.iter_mut().for_each(|x| *x *= scale);
        cols.push(v);
    }
    Ok(FeatureMatrix { n, cols })
}

/// A mini-batch of `m` samples, stored row-major (`m × N`). The views are
/// only materialized when the noise is non-trivial; otherwise both views
/// alias the raw samples.
#[derive(Debug, Clone, PartialEq)]
pub struct DataBatch {
    pub n: usize,
    pub m: usize,
    pub raw: Vec<f64>,
    pub hidden: Vec<Vec<f64>>,
    views: Option<(Vec<f64>, Vec<f64>)>,
}

impl DataBatch {
    pub fn empty(n: usize) -> Self {
        DataBatch {
            n,
            m: 0,
            raw: Vec::new(),
            hidden: Vec::new(),
            views: None,
        }
    }

    pub fn sample(&self, b: usize) -> &[f64] {
        &self.raw[b * self.n..(b + 1) * self.n]
    }

    /// View `l ∈ {1, 2}` of sample `b`.
    pub fn view(&self, l: usize, b: usize) -> &[f64] {
        let range = b * self.n..(b + 1) * self.n;
        match (&self.views, l) {
            (None, _) => &self.raw[range],
            (Some((v1, _)), 1) => &v1[range],
            (Some((_, v2)), 2) => &v2[range],
            _ => panic!("view index must be 1 or 2, got {l}"),
        }
    }

    pub fn has_noise(&self) -> bool {
        self.views.is_some()
    }
}

/// Fresh raw batch. See [`generate_batch_into`].
pub fn generate_batch(
    u: &FeatureMatrix,
    hidden: &[HiddenDistribution],
    m: usize,
    rng: &mut Rng,
) -> Result<DataBatch> {
    let mut batch = DataBatch::empty(u.n());
    generate_batch_into(&mut batch, u, hidden, m, rng)?;
    Ok(batch)
}

/// Draws `m` samples `x = U c/√N + ã − U(Uᵀã)/N` into `batch`, reusing its
/// buffers. Per sample the stream is consumed as `c` (d₁ draws) then `ã`.
pub fn generate_batch_into(
    batch: &mut DataBatch,
    u: &FeatureMatrix,
    hidden: &[HiddenDistribution],
    m: usize,
    rng: &mut Rng,
) -> Result<()> {
    let (n, d1) = (u.n(), u.d1());
    if hidden.len() != d1 {
        return Err(Error::InvalidDimension { n, d1: hidden.len() });
    }
    batch.n = n;
    batch.m = m;
    batch.raw.resize(m * n, 0.0);
    batch.hidden.resize(m, Vec::new());
    batch.views = None;
    let inv_sqrt_n = 1.0 / (n as f64).sqrt();
    let inv_n = 1.0 / n as f64;
    let mut coef = vec![0.0; d1];
    for b in 0..m {
        let c = &mut batch.hidden[b];
        c.clear();
        c.extend(hidden.iter().map(|h| h.sample(rng)));
        let x = &mut batch.raw[b * n..(b + 1) * n];
        for xi in x.iter_mut() {
            *xi = rng.sample(StandardNormal);
        }
        for (i, col) in u.columns().iter().enumerate() {
            coef[i] = c[i] * inv_sqrt_n - dot(col, x) * inv_n;
        }
        for (i, col) in u.columns().iter().enumerate() {
            let a = coef[i];
            x.iter_mut().zip(col).for_each(|(xi, ui)| *xi += a * ui);
        }
    }
    Ok(())
}

/// Fills the two views `x⁽ℓ⁾ = x + γ⁽ℓ⁾`. With zero noise the views alias
/// the raw samples and no randomness is consumed.
pub fn augment(batch: &mut DataBatch, noise: &NoiseModel, rng: &mut Rng) -> Result<()> {
    noise.validate()?;
    if noise.is_silent() {
        batch.views = None;
        return Ok(());
    }
    let len = batch.raw.len();
    let (mut v1, mut v2) = batch
        .views
        .take()
        .unwrap_or_else(|| (Vec::with_capacity(len), Vec::with_capacity(len)));
    v1.clear();
    v2.clear();
    v1.extend_from_slice(&batch.raw);
    v2.extend_from_slice(&batch.raw);
    let s = noise.eta().sqrt();
    match *noise {
        NoiseModel::AntiCorrelated { .. } => {
            for (a, b) in v1.iter_mut().zip(v2.iter_mut()) {
                let g = s * rng.sample::<f64, _>(StandardNormal);
                *a += g;
                *b -= g;
            }
        }
        _ => {
            let rho = noise.rho();
            let rho_c = (1.0 - rho * rho).max(0.0).sqrt();
            for (a, b) in v1.iter_mut().zip(v2.iter_mut()) {
                let t1: f64 = rng.sample(StandardNormal);
                let t2: f64 = rng.sample(StandardNormal);
                *a += s * t1;
                *b += s * (rho * t1 + rho_c * t2);
            }
        }
    }
    batch.views = Some((v1, v2));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rng(seed: u64) -> Rng {
        Rng::seed_from_u64(seed)
    }

    #[test]
    fn moment_examples() {
        assert_eq!(HiddenDistribution::gaussian(1.0).moments(), Moments::new(1.0, 3.0, 15.0));
        let m = HiddenDistribution::three_point(5.5, 0.2).moments();
        assert!((m.m2 - 1.1).abs() < 1e-14);
        assert!((m.m4 - 6.05).abs() < 1e-13);
        assert!((m.m6 - 33.275).abs() < 1e-12);
        let g = HiddenDistribution::gaussian(1.2).moments();
        assert!((g.m2 - 1.2).abs() < 1e-15);
        assert!((g.m4 - 4.32).abs() < 1e-13);
        assert!((g.m6 - 25.92).abs() < 1e-12);
    }

    #[test]
    fn three_point_from_moments_round_trips() {
        let d = HiddenDistribution::three_point_from_moments(1.1, 6.05).unwrap();
        let m = d.moments();
        assert!((m.m2 - 1.1).abs() < 1e-13 && (m.m6 - 33.275).abs() < 1e-10);
        assert!(HiddenDistribution::three_point_from_moments(1.0, 0.5).is_err());
    }

    #[test]
    fn discrete_law_validation() {
        let bad = HiddenDistribution::Discrete {
            values: vec![-1.0, 1.0],
            probabilities: vec![0.5, 0.6],
        };
        assert!(bad.validate().is_err());
        let ok = HiddenDistribution::Discrete {
            values: vec![-1.0, 1.0],
            probabilities: vec![0.5, 0.5],
        };
        ok.validate().unwrap();
        assert_eq!(ok.moments(), Moments::new(1.0, 1.0, 1.0));
    }

    #[test]
    fn quadrature_reproduces_moments() {
        for d in [
            HiddenDistribution::gaussian(1.2),
            HiddenDistribution::three_point(5.5, 0.2),
        ] {
            let (x, w) = d.quadrature(11);
            let mom = |k: i32| -> f64 { x.iter().zip(&w).map(|(x, w)| w * x.powi(k)).sum() };
            let m = d.moments();
            assert!((mom(2) - m.m2).abs() < 1e-12);
            assert!((mom(4) - m.m4).abs() < 1e-11);
            assert!((mom(6) - m.m6).abs() < 1e-10);
            assert!(mom(3).abs() < 1e-12);
        }
    }

    #[test]
    fn feature_matrix_contracts() {
        let u = generate_feature_matrix(100, 1, &mut rng(1)).unwrap();
        assert!((dot(u.column(0), u.column(0)) - 100.0).abs() < 1e-8);
        let u = generate_feature_matrix(100, 2, &mut rng(2)).unwrap();
        assert!(dot(u.column(0), u.column(1)).abs() < 1e-8);
        assert!((dot(u.column(1), u.column(1)) - 100.0).abs() < 1e-8);
        let a = generate_feature_matrix(4000, 2, &mut rng(3)).unwrap();
        let b = generate_feature_matrix(4000, 2, &mut rng(3)).unwrap();
        assert_eq!(a, b);
        assert_eq!(
            generate_feature_matrix(3, 4, &mut rng(0)),
            Err(Error::InvalidDimension { n: 3, d1: 4 })
        );
    }

    #[test]
    fn projection_recovers_hidden_variable() {
        let mut r = rng(5);
        let u = generate_feature_matrix(300, 2, &mut r).unwrap();
        let laws = [
            HiddenDistribution::gaussian(1.2),
            HiddenDistribution::three_point(5.5, 0.2),
        ];
        let batch = generate_batch(&u, &laws, 8, &mut r).unwrap();
        let sqrt_n = 300f64.sqrt();
        for b in 0..8 {
            let p = u.project(batch.sample(b));
            for i in 0..2 {
                assert!((p[i] / sqrt_n - batch.hidden[b][i]).abs() < 1e-10);
            }
        }
        // forcing c = 0 leaves only the complement
        let zero = [HiddenDistribution::gaussian(0.0), HiddenDistribution::gaussian(0.0)];
        let batch = generate_batch(&u, &zero, 4, &mut r).unwrap();
        for b in 0..4 {
            assert!(u.project(batch.sample(b)).iter().all(|p| (p / sqrt_n).abs() < 1e-8));
        }
    }

    #[test]
    fn empty_batch() {
        let mut r = rng(0);
        let u = generate_feature_matrix(10, 1, &mut r).unwrap();
        let b = generate_batch(&u, &[HiddenDistribution::gaussian(1.0)], 0, &mut r).unwrap();
        assert_eq!(b.m, 0);
        assert!(b.raw.is_empty());
    }

    #[test]
    fn views_follow_noise_model() {
        let mut r = rng(9);
        let u = generate_feature_matrix(50, 1, &mut r).unwrap();
        let mut batch =
            generate_batch(&u, &[HiddenDistribution::gaussian(1.0)], 3, &mut r).unwrap();
        augment(&mut batch, &NoiseModel::None, &mut r).unwrap();
        assert_eq!(batch.view(1, 2), batch.sample(2));
        assert_eq!(batch.view(2, 2), batch.sample(2));
        augment(&mut batch, &NoiseModel::AntiCorrelated { eta: 0.1 }, &mut r).unwrap();
        for b in 0..3 {
            for i in 0..50 {
                let s = batch.view(1, b)[i] + batch.view(2, b)[i];
                assert!((s - 2.0 * batch.sample(b)[i]).abs() < 1e-14);
            }
        }
        assert!(augment(&mut batch, &NoiseModel::Correlated { eta: 0.1, rho: 1.5 }, &mut r).is_err());
    }

    #[test]
    fn independent_noise_is_uncorrelated() {
        let mut r = rng(11);
        let u = generate_feature_matrix(1000, 1, &mut r).unwrap();
        let mut batch =
            generate_batch(&u, &[HiddenDistribution::gaussian(1.0)], 1000, &mut r).unwrap();
        augment(&mut batch, &NoiseModel::Independent { eta: 0.5 }, &mut r).unwrap();
        let prods: Vec<f64> = (0..batch.m)
            .flat_map(|b| {
                let x = batch.sample(b).to_vec();
                let v1 = batch.view(1, b).to_vec();
                let v2 = batch.view(2, b).to_vec();
                (0..1000).map(move |i| (v1[i] - x[i]) * (v2[i] - x[i]))
            })
            .collect();
        let (mean, se) = mean_se(&prods);
        assert!(mean.abs() < 3.0 * se, "mean {mean} se {se}");
    }

    #[test]
    fn squared_norm_and_feature_variance() {
        let mut r = rng(21);
        let u = generate_feature_matrix(1000, 1, &mut r).unwrap();
        let batch = generate_batch(&u, &[HiddenDistribution::gaussian(1.0)], 10_000, &mut r).unwrap();
        let norms: Vec<f64> = (0..batch.m).map(|b| dot(batch.sample(b), batch.sample(b))).collect();
        let (mean, se) = mean_se(&norms);
        assert!((mean - 1000.0).abs() < 3.0 * se, "{mean} ± {se}");

        let u = generate_feature_matrix(64, 1, &mut r).unwrap();
        let batch =
            generate_batch(&u, &[HiddenDistribution::three_point(5.5, 0.2)], 100_000, &mut r).unwrap();
        let sq: Vec<f64> = (0..batch.m)
            .map(|b| (u.project(batch.sample(b))[0] / 8.0).powi(2))
            .collect();
        let (mean, se) = mean_se(&sq);
        assert!((mean - 1.1).abs() < 3.0 * se, "{mean} ± {se}");
    }

    #[test]
    fn streams_are_distinct_and_reproducible() {
        let mut a = Streams::new(7);
        let mut b = Streams::new(7);
        let xa: f64 = a.data.random();
        let xb: f64 = b.data.random();
        assert_eq!(xa, xb);
        let f: f64 = a.features.random();
        let i: f64 = a.init.random();
        assert_ne!(f, i);
    }

    fn mean_se(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, (var / n).sqrt())
    }
}
