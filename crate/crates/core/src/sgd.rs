//! One-pass mini-batch SGD on the contrastive loss with per-step weight
//! normalization:
//!
//! ```text
//! w̃ = w − (τ/(2m√N)) Σ_b [x_b⁽²⁾ μ(z_b⁽¹⁾, z_b⁽²⁾) + x_b⁽¹⁾ μ(z_b⁽²⁾, z_b⁽¹⁾)] − (τ/N) φ(w)
//! w ← √N · w̃/‖w̃‖
//! ```
//!
//! with `z⁽ℓ⁾ = wᵀx⁽ℓ⁾/√N` and `μ(z₁, z₂) = −2(σ(z₁) − ȳ⁽¹⁾)σ′(z₂)`.

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use crate::activation::{Activation, Prior};
use crate::data::{augment, dot, generate_batch_into, generate_feature_matrix, DataBatch, FeatureMatrix};
use crate::data::{HiddenDistribution, NoiseModel, Rng, Streams};
use crate::error::{Error, Result};
use crate::expectations::{Centering, MeanField, MeanFieldParams, QuadratureSpec};
use crate::par::Execution;

/// Initial weight vector.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Init {
    /// `w ~ N(0, I)`, normalized: overlaps of order `1/√N`.
    #[default]
    Random,
    /// `w = √N(√Q₀ û + √(1−Q₀) ξ)` with `û` the chosen feature direction and
    /// `ξ` a random unit vector orthogonal to all features: starts at
    /// `Q = Q₀` on that feature and zero overlap elsewhere.
    Directed { q0: f64, feature: usize },
}

/// How each step's randomness is realized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Sampler {
    /// Materializes every sample and both views in `R^N`
    /// (generate → augment → gradient step → normalize).
    #[default]
    Explicit,
    /// Draws only what the update depends on, with the same law as
    /// `Explicit`. Given `w`, a sample enters through `c`, the component
    /// `ξ = v̂ᵀã` of its background noise along the complement part `v̂` of
    /// `w`, and the view noises along `ŵ`; the remaining components add up
    /// across the batch to a single Gaussian vector orthogonal to those
    /// directions with variance `Σ_b coef_b²`. Costs O(N) normals per step
    /// instead of O(mN).
    Reduced,
}

#[derive(Debug, Clone)]
pub struct TrainConfig {
    /// Ambient dimension N.
    pub n: usize,
    /// Law of each hidden coordinate; `d₁ = hidden.len()`.
    pub hidden: Vec<HiddenDistribution>,
    /// Mini-batch size m.
    pub batch: usize,
    pub tau: f64,
    /// Final continuous time; the run takes ⌊T·N⌋ steps.
    pub t_final: f64,
    pub activation: Activation,
    pub noise: NoiseModel,
    pub centering: Centering,
    pub prior: Prior,
    pub seed: u64,
    /// Steps between records; `None` means max(1, ⌊N/100⌋).
    pub record_stride: Option<usize>,
    pub init: Init,
    /// Quadrature used for the population centering.
    pub quad: QuadratureSpec,
    pub sampler: Sampler,
}

impl TrainConfig {
    pub fn new(n: usize, hidden: Vec<HiddenDistribution>, batch: usize, tau: f64, t_final: f64) -> Self {
        TrainConfig {
            n,
            hidden,
            batch,
            tau,
            t_final,
            activation: Activation::Quadratic,
            noise: NoiseModel::None,
            centering: Centering::Zero,
            prior: Prior::Zero,
            seed: 0,
            record_stride: None,
            init: Init::Random,
            quad: QuadratureSpec::default(),
            sampler: Sampler::Explicit,
        }
    }

    pub fn d1(&self) -> usize {
        self.hidden.len()
    }

    pub fn steps(&self) -> u64 {
        (self.t_final * self.n as f64).floor() as u64
    }

    pub fn stride(&self) -> usize {
        self.record_stride.unwrap_or((self.n / 100).max(1)).max(1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden.is_empty() || self.d1() > self.n {
            return Err(Error::InvalidDimension {
                n: self.n,
                d1: self.d1(),
            });
        }
        for h in &self.hidden {
            h.validate()?;
        }
        self.noise.validate()?;
        if !(self.tau.is_finite() && self.tau >= 0.0) {
            return Err(Error::param("tau", format!("must be >= 0, got {}", self.tau)));
        }
        if self.batch == 0 {
            return Err(Error::param("m", "batch size must be >= 1"));
        }
        if !(self.t_final.is_finite() && self.t_final > 0.0) {
            return Err(Error::param("T", format!("must be > 0, got {}", self.t_final)));
        }
        if let Init::Directed { q0, feature } = self.init {
            if !(0.0..=1.0).contains(&q0) {
                return Err(Error::Domain {
                    what: "Q0",
                    value: q0,
                    domain: "[0, 1]",
                });
            }
            if feature >= self.d1() {
                return Err(Error::param(
                    "init.feature",
                    format!("must be < d1 = {}, got {feature}", self.d1()),
                ));
            }
            if self.d1() == self.n && q0 < 1.0 {
                return Err(Error::InvalidDimension {
                    n: self.n,
                    d1: self.d1(),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    pub w: Vec<f64>,
    pub u: FeatureMatrix,
    /// Completed iterations.
    pub k: u64,
}

impl ModelState {
    pub fn new(w: Vec<f64>, u: FeatureMatrix) -> Result<Self> {
        if w.len() != u.n() {
            return Err(Error::InvalidDimension {
                n: w.len(),
                d1: u.d1(),
            });
        }
        Ok(ModelState { w, u, k: 0 })
    }

    pub fn n(&self) -> usize {
        self.w.len()
    }
}

/// `q = Uᵀw/N`, `r = wᵀφ(w)/N`.
pub fn empirical_order_params(state: &ModelState, prior: &Prior) -> (Vec<f64>, f64) {
    let n = state.n() as f64;
    let q = state.u.project(&state.w).into_iter().map(|v| v / n).collect();
    let r = state.w.iter().map(|w| w * prior.eval(*w)).sum::<f64>() / n;
    (q, r)
}

/// Parameters of a single update, beyond the state and the batch.
#[derive(Debug, Clone, Copy)]
pub struct StepParams {
    pub tau: f64,
    pub activation: Activation,
    pub prior: Prior,
    pub ybar: [f64; 2],
}

/// Unnormalized update `w̃`. See [`gradient_step_into`].
pub fn gradient_step(state: &ModelState, batch: &DataBatch, p: &StepParams) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    gradient_step_into(state, batch, p, &mut out)?;
    Ok(out)
}

/// Writes `w̃` into `out`. A non-finite pre-activation or gradient factor is
/// reported as [`Error::Overflow`] at the state's step index.
pub fn gradient_step_into(state: &ModelState, batch: &DataBatch, p: &StepParams, out: &mut Vec<f64>) -> Result<()> {
    let n = state.n();
    let sqrt_n = (n as f64).sqrt();
    out.clear();
    out.extend_from_slice(&state.w);
    if !p.prior.is_zero() {
        let c = p.tau / n as f64;
        out.iter_mut().zip(&state.w).for_each(|(o, w)| *o -= c * p.prior.eval(*w));
    }
    if batch.m == 0 {
        return Ok(());
    }
    let scale = p.tau / (2.0 * batch.m as f64 * sqrt_n);
    let act = p.activation;
    let overflow = Error::Overflow { step: state.k };
    for b in 0..batch.m {
        let x1 = batch.view(1, b);
        let x2 = batch.view(2, b);
        let z1 = dot(&state.w, x1) / sqrt_n;
        let z2 = if batch.has_noise() { dot(&state.w, x2) / sqrt_n } else { z1 };
        let mu12 = -2.0 * (act.eval(z1) - p.ybar[0]) * act.deriv(z2);
        let mu21 = -2.0 * (act.eval(z2) - p.ybar[1]) * act.deriv(z1);
        if !(mu12.is_finite() && mu21.is_finite()) {
            return Err(overflow);
        }
        if batch.has_noise() {
            let (a2, a1) = (scale * mu12, scale * mu21);
            for ((o, v1), v2) in out.iter_mut().zip(x1).zip(x2) {
                *o -= a2 * v2 + a1 * v1;
            }
        } else {
            let a = scale * (mu12 + mu21);
            out.iter_mut().zip(x1).for_each(|(o, v)| *o -= a * v);
        }
    }
    Ok(())
}

/// `w = √N · w̃/‖w̃‖` in place.
pub fn normalize(w: &mut [f64], step: u64) -> Result<()> {
    let norm = dot(w, w).sqrt();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(if norm.is_finite() {
            Error::DegenerateWeight { step }
        } else {
            Error::Overflow { step }
        });
    }
    let s = (w.len() as f64).sqrt() / norm;
    w.iter_mut().for_each(|v| *v *= s);
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecordPoint {
    pub t: f64,
    pub q: Vec<f64>,
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub seed: u64,
    pub points: Vec<RecordPoint>,
}

impl TrajectoryRecord {
    pub fn times(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.t).collect()
    }

    /// Squared overlaps `Q_t = q_t²` on one feature.
    pub fn big_q(&self, feature: usize) -> Vec<f64> {
        self.points.iter().map(|p| p.q[feature] * p.q[feature]).collect()
    }
}

/// Initial state for `cfg`, drawing the feature matrix and the weights from
/// their own streams.
pub fn initial_state(cfg: &TrainConfig, streams: &mut Streams) -> Result<ModelState> {
    cfg.validate()?;
    let u = generate_feature_matrix(cfg.n, cfg.d1(), &mut streams.features)?;
    let n = cfg.n;
    let mut xi: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut streams.init)).collect();
    let w = match cfg.init {
        Init::Random => {
            normalize(&mut xi, 0)?;
            xi
        }
        Init::Directed { q0, feature } => {
            for _ in 0..2 {
                for c in u.columns() {
                    let a = dot(c, &xi) / n as f64;
                    xi.iter_mut().zip(c).for_each(|(x, ci)| *x -= a * ci);
                }
            }
            let xn = dot(&xi, &xi).sqrt();
            let (a, b) = (q0.sqrt(), (1.0 - q0).sqrt());
            let sqrt_n = (n as f64).sqrt();
            // both directions have norm √N after scaling
            u.column(feature)
                .iter()
                .zip(&xi)
                .map(|(ui, x)| a * ui + b * sqrt_n * x / xn)
                .collect()
        }
    };
    ModelState::new(w, u)
}

/// Runs SGD from `state` for the configured number of steps, drawing all data
/// from `data`. Used directly when the initial state is built by hand.
pub fn run_training_from(mut state: ModelState, cfg: &TrainConfig, data: &mut Rng) -> Result<(TrajectoryRecord, ModelState)> {
    let steps = cfg.steps();
    let stride = cfg.stride() as u64;
    let centering = match cfg.centering {
        Centering::Zero => None,
        Centering::Population => Some(MeanField::new(
            MeanFieldParams::new(cfg.activation, cfg.hidden.clone(), cfg.tau, cfg.batch)
                .with_noise(cfg.noise)
                .with_quadrature(cfg.quad),
        )?),
    };
    let record = |state: &ModelState| {
        let (q, r) = empirical_order_params(state, &cfg.prior);
        RecordPoint {
            t: state.k as f64 / cfg.n as f64,
            q,
            r,
        }
    };
    let mut points = vec![record(&state)];
    let mut batch = DataBatch::empty(cfg.n);
    let mut scratch = ReducedScratch::default();
    let mut w_next = Vec::with_capacity(cfg.n);
    for _ in 0..steps {
        let ybar = match &centering {
            None => [0.0; 2],
            Some(mf) => {
                let (mut q, _) = empirical_order_params(&state, &Prior::Zero);
                // finite-N overlaps can exceed 1 by O(1/√N)
                let qq: f64 = q.iter().map(|v| v * v).sum();
                if qq > 1.0 {
                    q.iter_mut().for_each(|v| *v /= qq.sqrt());
                }
                mf.population_means(&q)?
            }
        };
        let p = StepParams {
            tau: cfg.tau,
            activation: cfg.activation,
            prior: cfg.prior,
            ybar,
        };
        match cfg.sampler {
            Sampler::Explicit => {
                generate_batch_into(&mut batch, &state.u, &cfg.hidden, cfg.batch, data)?;
                augment(&mut batch, &cfg.noise, data)?;
                gradient_step_into(&state, &batch, &p, &mut w_next)?;
            }
            Sampler::Reduced => {
                reduced_step_into(&state, cfg, &p, data, &mut scratch, &mut w_next)?;
            }
        }
        normalize(&mut w_next, state.k)?;
        std::mem::swap(&mut state.w, &mut w_next);
        state.k += 1;
        if state.k % stride == 0 || state.k == steps {
            points.push(record(&state));
        }
    }
    Ok((
        TrajectoryRecord {
            seed: cfg.seed,
            points,
        },
        state,
    ))
}

#[derive(Default)]
struct ReducedScratch {
    v: Vec<f64>,
    zeta: Vec<f64>,
    hidden_sum: Vec<f64>,
    c: Vec<f64>,
}

/// Draws `ζ ~ N(0, I_N)` and projects it onto the orthogonal complement of
/// the unit vectors in `dirs`, which must be mutually orthogonal.
fn projected_normal(zeta: &mut [f64], u: &FeatureMatrix, dirs: &[&[f64]], rng: &mut Rng) {
    for z in zeta.iter_mut() {
        *z = StandardNormal.sample(rng);
    }
    let inv_n = 1.0 / u.n() as f64;
    for col in u.columns() {
        let a = dot(col, zeta) * inv_n;
        zeta.iter_mut().zip(col).for_each(|(z, ci)| *z -= a * ci);
    }
    for d in dirs {
        let a = dot(d, zeta);
        zeta.iter_mut().zip(d.iter()).for_each(|(z, di)| *z -= a * di);
    }
}

/// One update with the [`Sampler::Reduced`] construction.
///
/// Stream order per step: for each sample `c` (d₁ draws), `ξ`, then the
/// view-noise scalars; then `ζ₁` (N draws) and, with noise, `ζ₂` (N draws).
fn reduced_step_into(
    state: &ModelState,
    cfg: &TrainConfig,
    p: &StepParams,
    rng: &mut Rng,
    sc: &mut ReducedScratch,
    out: &mut Vec<f64>,
) -> Result<()> {
    let n = state.n();
    let nf = n as f64;
    let sqrt_n = nf.sqrt();
    let u = &state.u;
    let d1 = u.d1();
    let q: Vec<f64> = u.project(&state.w).into_iter().map(|v| v / nf).collect();

    // complement part of w and its unit direction
    sc.v.clear();
    sc.v.extend_from_slice(&state.w);
    for (col, qi) in u.columns().iter().zip(&q) {
        sc.v.iter_mut().zip(col).for_each(|(v, ci)| *v -= qi * ci);
    }
    let v_norm = dot(&sc.v, &sc.v).sqrt();
    let s = v_norm / sqrt_n;
    let has_dir = v_norm > 1e-12 * sqrt_n;
    if has_dir {
        sc.v.iter_mut().for_each(|v| *v /= v_norm);
    }

    let (eta, rho) = (cfg.noise.eta(), cfg.noise.rho());
    let noisy = eta > 0.0;
    let (sqrt_eta, rho_c) = (eta.sqrt(), (1.0 - rho * rho).max(0.0).sqrt());
    let act = p.activation;
    sc.hidden_sum.clear();
    sc.hidden_sum.resize(d1, 0.0);
    sc.c.resize(d1, 0.0);
    let (mut along_v, mut sum_a2) = (0.0, 0.0);
    let (mut along_w, mut noise_var) = (0.0, 0.0);
    for _ in 0..cfg.batch {
        for (ci, h) in sc.c.iter_mut().zip(&cfg.hidden) {
            *ci = h.sample(rng);
        }
        let xi: f64 = StandardNormal.sample(rng);
        let (psi1, psi2) = if !noisy {
            (0.0, 0.0)
        } else if matches!(cfg.noise, NoiseModel::AntiCorrelated { .. }) {
            let g: f64 = sqrt_eta * rng.sample::<f64, _>(StandardNormal);
            (g, -g)
        } else {
            let t1: f64 = StandardNormal.sample(rng);
            let t2: f64 = StandardNormal.sample(rng);
            (sqrt_eta * t1, sqrt_eta * (rho * t1 + rho_c * t2))
        };
        let z = dot(&sc.c, &q) + s * xi;
        let (z1, z2) = (z + psi1, z + psi2);
        let mu12 = -2.0 * (act.eval(z1) - p.ybar[0]) * act.deriv(z2);
        let mu21 = -2.0 * (act.eval(z2) - p.ybar[1]) * act.deriv(z1);
        if !(mu12.is_finite() && mu21.is_finite()) {
            return Err(Error::Overflow { step: state.k });
        }
        let a = mu12 + mu21;
        for (hs, ci) in sc.hidden_sum.iter_mut().zip(&sc.c) {
            *hs += a * ci;
        }
        along_v += a * xi;
        sum_a2 += a * a;
        if noisy {
            along_w += mu12 * psi2 + mu21 * psi1;
            noise_var += eta * (mu12 * mu12 + mu21 * mu21 + 2.0 * rho * mu12 * mu21);
        }
    }

    let scale = p.tau / (2.0 * cfg.batch as f64 * sqrt_n);
    out.clear();
    out.extend_from_slice(&state.w);
    if !p.prior.is_zero() {
        let c = p.tau / nf;
        out.iter_mut().zip(&state.w).for_each(|(o, w)| *o -= c * p.prior.eval(*w));
    }
    // feature directions: U (Σ_b a_b c_b)/√N
    for (col, hs) in u.columns().iter().zip(&sc.hidden_sum) {
        let a = scale * hs / sqrt_n;
        out.iter_mut().zip(col).for_each(|(o, ci)| *o -= a * ci);
    }
    // background noise: along v̂, then the rest of the complement
    sc.zeta.resize(n, 0.0);
    {
        let dirs: Vec<&[f64]> = if has_dir { vec![&sc.v[..]] } else { vec![] };
        projected_normal(&mut sc.zeta, u, &dirs, rng);
    }
    let (a_v, a_z) = (scale * along_v, scale * sum_a2.sqrt());
    if has_dir {
        for ((o, v), z) in out.iter_mut().zip(&sc.v).zip(&sc.zeta) {
            *o -= a_v * v + a_z * z;
        }
    } else {
        out.iter_mut().zip(&sc.zeta).for_each(|(o, z)| *o -= a_z * z);
    }
    // view noise: along ŵ = w/√N, then its orthogonal complement in R^N
    if noisy {
        for z in sc.zeta.iter_mut() {
            *z = StandardNormal.sample(rng);
        }
        let a = dot(&state.w, &sc.zeta) / nf;
        sc.zeta.iter_mut().zip(&state.w).for_each(|(z, w)| *z -= a * w);
        let (a_w, a_n) = (scale * along_w / sqrt_n, scale * noise_var.max(0.0).sqrt());
        for ((o, w), z) in out.iter_mut().zip(&state.w).zip(&sc.zeta) {
            *o -= a_w * w + a_n * z;
        }
    }
    Ok(())
}

pub fn run_training(cfg: &TrainConfig) -> Result<TrajectoryRecord> {
    let mut streams = Streams::new(cfg.seed);
    let state = initial_state(cfg, &mut streams)?;
    Ok(run_training_from(state, cfg, &mut streams.data)?.0)
}

/// One run per seed, returned in seed order.
pub fn run_ensemble(cfg: &TrainConfig, seeds: &[u64], exec: Execution) -> Result<Vec<TrajectoryRecord>> {
    cfg.validate()?;
    exec.map(seeds, |&seed| {
        let mut c = cfg.clone();
        c.seed = seed;
        run_training(&c)
    })
    .into_iter()
    .collect()
}

/// Mean and standard error of `Q_t` on one feature across runs that share
/// their recording times.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleStats {
    pub times: Vec<f64>,
    pub mean: Vec<f64>,
    pub std_err: Vec<f64>,
}

pub fn ensemble_stats(records: &[TrajectoryRecord], feature: usize) -> EnsembleStats {
    let times = records.first().map(|r| r.times()).unwrap_or_default();
    let qs: Vec<Vec<f64>> = records.iter().map(|r| r.big_q(feature)).collect();
    let n = records.len() as f64;
    let mut mean = Vec::with_capacity(times.len());
    let mut std_err = Vec::with_capacity(times.len());
    for i in 0..times.len() {
        let m = qs.iter().map(|q| q[i]).sum::<f64>() / n;
        let var = if records.len() > 1 {
            qs.iter().map(|q| (q[i] - m).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        mean.push(m);
        std_err.push((var / n).sqrt());
    }
    EnsembleStats { times, mean, std_err }
}
