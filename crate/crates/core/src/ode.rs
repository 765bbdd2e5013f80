//! Closed-form order-parameter ODEs for σ(x) = x² and a fixed-step RK4
//! integrator.
//!
//! The polynomials are written in terms of the deviations from the standard
//! normal, ν = m₂−1, κ = m₄−3, β = m₆−15, and the squared overlaps
//! `Q = q²`. They are cross-checked against the general quadrature path
//! ([`crate::expectations::MeanField::rhs`]) in the test suites.

use crate::data::Moments;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QuadraticForm {
    /// Drift bracket `Q²κ + 3Q(1−2Q)ν` — agrees with the quadrature path.
    #[default]
    Exact,
    /// Drift bracket `Q²κ + 3Qν`, the variant with the `(1−2Q)` factor
    /// dropped. Kept for comparison only; it is not the limit of SGD.
    DroppedFactor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseMode {
    Independent,
    AntiCorrelated,
}

impl NoiseMode {
    pub fn rho(self) -> f64 {
        match self {
            NoiseMode::Independent => 0.0,
            NoiseMode::AntiCorrelated => -1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticParams {
    /// One moment triple per feature.
    pub moments: Vec<Moments>,
    pub tau: f64,
    /// Mini-batch size `m`.
    pub batch: f64,
    /// Augmentation noise variance η (0 = noise free).
    pub eta: f64,
    pub form: QuadraticForm,
}

impl QuadraticParams {
    pub fn new(moments: Vec<Moments>, tau: f64, batch: f64) -> Self {
        QuadraticParams {
            moments,
            tau,
            batch,
            eta: 0.0,
            form: QuadraticForm::Exact,
        }
    }

    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta = eta;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.moments.is_empty() {
            return Err(Error::param("moments", "need at least one moment triple"));
        }
        for m in &self.moments {
            if !m.is_realizable() {
                return Err(Error::param(
                    "moments",
                    format!("({}, {}, {}) is not a realizable moment triple", m.m2, m.m4, m.m6),
                ));
            }
        }
        if !(self.tau.is_finite() && self.tau >= 0.0) {
            return Err(Error::param("tau", format!("must be >= 0, got {}", self.tau)));
        }
        if !(self.batch >= 1.0) {
            return Err(Error::param("m", format!("must be >= 1, got {}", self.batch)));
        }
        if !(self.eta.is_finite() && self.eta >= 0.0) {
            return Err(Error::param("eta", format!("must be >= 0, got {}", self.eta)));
        }
        Ok(())
    }

    fn diffusion_scale(&self) -> f64 {
        16.0 * self.tau * self.tau / self.batch
    }
}

fn check_unit(q: f64) -> Result<()> {
    if (0.0..=1.0).contains(&q) {
        Ok(())
    } else {
        Err(Error::Domain {
            what: "Q",
            value: q,
            domain: "[0, 1]",
        })
    }
}

/// Single feature, no noise:
///
/// `dQ/dt = 8τ(1−Q)[Q²κ + 3Q(1−2Q)ν] − (16τ²/m)Q[Q³β + 15Q²(1−Q)κ + 45Q(1−Q)²ν + 15]`.
pub fn rhs_quadratic_1d(q: f64, p: &QuadraticParams) -> Result<f64> {
    check_unit(q)?;
    let m = p.moments[0];
    let (nu, kappa, beta) = (m.nu(), m.kappa(), m.beta());
    let bracket = match p.form {
        QuadraticForm::Exact => q * q * kappa + 3.0 * q * (1.0 - 2.0 * q) * nu,
        QuadraticForm::DroppedFactor => q * q * kappa + 3.0 * q * nu,
    };
    let drift = 8.0 * p.tau * (1.0 - q) * bracket;
    let diffusion = p.diffusion_scale() * q * sixth_moment_excess(q, nu, kappa, beta);
    Ok(drift - diffusion)
}

/// `⟨Θ⁶⟩ = Q³β + 15Q²(1−Q)κ + 45Q(1−Q)²ν + 15` for Θ = c q + √(1−Q) e.
fn sixth_moment_excess(q: f64, nu: f64, kappa: f64, beta: f64) -> f64 {
    let s = 1.0 - q;
    q * q * q * beta + 15.0 * q * q * s * kappa + 45.0 * q * s * s * nu + 15.0
}

/// Two features, no noise, on the simplex `Q₁, Q₂ ≥ 0, Q₁ + Q₂ ≤ 1`.
pub fn rhs_quadratic_2d(q1: f64, q2: f64, p: &QuadraticParams) -> Result<[f64; 2]> {
    if !(q1 >= 0.0 && q2 >= 0.0 && q1 + q2 <= 1.0 + 1e-12) {
        return Err(Error::Domain {
            what: "Q1 + Q2",
            value: q1 + q2,
            domain: "the simplex Q1, Q2 >= 0, Q1 + Q2 <= 1",
        });
    }
    if p.moments.len() != 2 {
        return Err(Error::param("moments", "two-feature dynamics need two moment triples"));
    }
    let (a, b) = (p.moments[0], p.moments[1]);
    Ok([
        component_2d(q1, q2, a, b, p),
        component_2d(q2, q1, b, a, p),
    ])
}

fn component_2d(q1: f64, q2: f64, a: Moments, b: Moments, p: &QuadraticParams) -> f64 {
    let (n1, k1, b1) = (a.nu(), a.kappa(), a.beta());
    let (n2, k2, b2) = (b.nu(), b.kappa(), b.beta());
    let cross = 3.0 * n1 * n2 * q1 * q2;
    let own = k1 * q1 * q1 + 3.0 * n1 * q1 * (1.0 - 2.0 * q1) + cross;
    let other = k2 * q2 * q2 + 3.0 * n2 * q2 * (1.0 - 2.0 * q2) + cross;
    let drift = 8.0 * p.tau * (own * (1.0 - q1) - other * q1);
    let theta6 = b1 * q1.powi(3)
        + b2 * q2.powi(3)
        + 15.0 * k1 * q1 * q1 * (1.0 - q1)
        + 15.0 * k2 * q2 * q2 * (1.0 - q2)
        + 45.0 * n1 * q1 * (1.0 - q1).powi(2)
        + 45.0 * n2 * q2 * (1.0 - q2).powi(2)
        + 15.0 * k1 * n2 * q1 * q1 * q2
        + 15.0 * k2 * n1 * q1 * q2 * q2
        + 90.0 * n1 * n2 * q1 * q2 * (1.0 - q1 - q2)
        + 15.0;
    drift - p.diffusion_scale() * q1 * theta6
}

/// Single feature with additive augmentation noise of variance `p.eta`.
///
/// The noise shifts the drift by `−4τη(1+2ρ)ν·q` and replaces the sixth
/// moment in Λ by the mixed moments `T_pr = ⟨(X+γ₁)^p (X+γ₂)^r⟩`, where
/// `X = c q + √(1−Q) e`:
///
/// `Λ = (4τ²/m)[(1+η)(T₄₂ + T₂₄) + 2(1+ρη)T₃₃]`.
///
/// At η = 0 this is exactly [`rhs_quadratic_1d`].
pub fn rhs_quadratic_noise(q: f64, p: &QuadraticParams, mode: NoiseMode) -> Result<f64> {
    let base = rhs_quadratic_1d(q, p)?;
    if p.eta == 0.0 {
        return Ok(base);
    }
    if p.eta < 0.0 || !p.eta.is_finite() {
        return Err(Error::param("eta", format!("must be >= 0, got {}", p.eta)));
    }
    let m = p.moments[0];
    let (eta, rho) = (p.eta, mode.rho());
    let s = 1.0 - q;
    // even moments of X
    let a = [
        1.0,
        0.0,
        q * m.m2 + s,
        0.0,
        q * q * m.m4 + 6.0 * q * s * m.m2 + 3.0 * s * s,
        0.0,
        q.powi(3) * m.m6 + 15.0 * q * q * s * m.m4 + 45.0 * q * s * s * m.m2 + 15.0 * s.powi(3),
    ];
    let g = noise_moments(eta, rho);
    let t = |pw: usize, rw: usize| -> f64 {
        let mut acc = 0.0;
        for i in 0..=pw {
            for j in 0..=rw {
                acc += binom(pw, i) * binom(rw, j) * a[pw + rw - i - j] * g[i][j];
            }
        }
        acc
    };
    let lambda_shift = 4.0 * p.tau * p.tau / p.batch
        * ((1.0 + eta) * (t(4, 2) + t(2, 4)) + 2.0 * (1.0 + rho * eta) * t(3, 3) - 4.0 * a[6]);
    let drift_shift = -4.0 * p.tau * eta * (1.0 + 2.0 * rho) * m.nu();
    // dQ/dt = 2(Q−1)Q·ĝ − QΛ with g = q·ĝ
    Ok(base + 2.0 * (q - 1.0) * q * drift_shift - q * lambda_shift)
}

fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `E[γ₁^i γ₂^j]` for `i, j ≤ 6` under covariance `[[η, ρη], [ρη, η]]`
/// (Isserlis recursion).
fn noise_moments(eta: f64, rho: f64) -> [[f64; 7]; 7] {
    let mut g = [[0.0; 7]; 7];
    g[0][0] = 1.0;
    for total in 1..=12usize {
        for i in 0..=total.min(6) {
            let j = total - i;
            if j > 6 {
                continue;
            }
            g[i][j] = if i >= 1 {
                let mut v = 0.0;
                if i >= 2 {
                    v += (i - 1) as f64 * eta * g[i - 2][j];
                }
                if j >= 1 {
                    v += j as f64 * rho * eta * g[i - 1][j - 1];
                }
                v
            } else if j >= 2 {
                (j - 1) as f64 * eta * g[0][j - 2]
            } else {
                0.0
            };
        }
    }
    g
}

/// State space of an integration, used to clamp after each step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Unbounded,
    /// Every component in [0, 1].
    UnitInterval,
    /// Components ≥ 0 summing to at most 1.
    Simplex,
}

impl Domain {
    /// Projects `x` into the domain; returns whether anything moved.
    pub fn clamp(self, x: &mut [f64]) -> bool {
        let mut moved = false;
        match self {
            Domain::Unbounded => {}
            Domain::UnitInterval => {
                for v in x.iter_mut() {
                    let c = v.clamp(0.0, 1.0);
                    moved |= c != *v;
                    *v = c;
                }
            }
            Domain::Simplex => {
                for v in x.iter_mut() {
                    if *v < 0.0 {
                        *v = 0.0;
                        moved = true;
                    }
                }
                let total: f64 = x.iter().sum();
                if total > 1.0 {
                    x.iter_mut().for_each(|v| *v /= total);
                    moved = true;
                }
            }
        }
        moved
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub clamp_events: usize,
}

impl Trajectory {
    pub fn last(&self) -> &[f64] {
        self.states.last().expect("trajectory has at least the initial state")
    }
}

/// Classical RK4 with reusable stage buffers. Intermediate stages are
/// projected into the domain before evaluating the right-hand side so that
/// closed forms with domain checks can be used directly.
pub struct Rk4 {
    domain: Domain,
    k: [Vec<f64>; 4],
    tmp: Vec<f64>,
}

impl Rk4 {
    pub fn new(dim: usize, domain: Domain) -> Self {
        Rk4 {
            domain,
            k: std::array::from_fn(|_| vec![0.0; dim]),
            tmp: vec![0.0; dim],
        }
    }

    /// Advances `x` by `h`; returns whether the end state had to be clamped.
    pub fn step<F>(&mut self, rhs: &mut F, x: &mut [f64], h: f64) -> Result<bool>
    where
        F: FnMut(&[f64], &mut [f64]) -> Result<()>,
    {
        let [k1, k2, k3, k4] = &mut self.k;
        rhs(x, k1)?;
        for (t, (xi, ki)) in self.tmp.iter_mut().zip(x.iter().zip(k1.iter())) {
            *t = xi + 0.5 * h * ki;
        }
        self.domain.clamp(&mut self.tmp);
        rhs(&self.tmp, k2)?;
        for (t, (xi, ki)) in self.tmp.iter_mut().zip(x.iter().zip(k2.iter())) {
            *t = xi + 0.5 * h * ki;
        }
        self.domain.clamp(&mut self.tmp);
        rhs(&self.tmp, k3)?;
        for (t, (xi, ki)) in self.tmp.iter_mut().zip(x.iter().zip(k3.iter())) {
            *t = xi + h * ki;
        }
        self.domain.clamp(&mut self.tmp);
        rhs(&self.tmp, k4)?;
        for i in 0..x.len() {
            x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        Ok(self.domain.clamp(x))
    }
}

/// Integrates `dx/dt = rhs(x)` from `x₀` to `t_final` with step `dt`,
/// recording every `record_every` steps (and the final state).
pub fn integrate<F>(
    mut rhs: F,
    x0: &[f64],
    t_final: f64,
    dt: f64,
    domain: Domain,
    record_every: usize,
) -> Result<Trajectory>
where
    F: FnMut(&[f64], &mut [f64]) -> Result<()>,
{
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::param("dt", format!("must be > 0, got {dt}")));
    }
    if !(t_final >= 0.0 && t_final.is_finite()) {
        return Err(Error::param("T", format!("must be >= 0, got {t_final}")));
    }
    let record_every = record_every.max(1);
    let steps = (t_final / dt - 1e-9).ceil().max(0.0) as usize;
    let mut x = x0.to_vec();
    let mut rk = Rk4::new(x.len(), domain);
    let mut out = Trajectory {
        times: vec![0.0],
        states: vec![x.clone()],
        clamp_events: 0,
    };
    let mut t = 0.0;
    for k in 1..=steps {
        let h = dt.min(t_final - t);
        if rk.step(&mut rhs, &mut x, h)? {
            out.clamp_events += 1;
            log::debug!("state clamped into {domain:?} at t = {}", t + h);
        }
        t = if k == steps { t_final } else { k as f64 * dt };
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::IntegrationFailure { t });
        }
        if k % record_every == 0 || k == steps {
            out.times.push(t);
            out.states.push(x.clone());
        }
    }
    Ok(out)
}

/// Adapts a closed-form 1-D right-hand side to [`integrate`].
pub fn closed_form_1d(p: &QuadraticParams) -> impl FnMut(&[f64], &mut [f64]) -> Result<()> + '_ {
    move |x, dx| {
        dx[0] = rhs_quadratic_1d(x[0], p)?;
        Ok(())
    }
}

pub fn closed_form_2d(p: &QuadraticParams) -> impl FnMut(&[f64], &mut [f64]) -> Result<()> + '_ {
    move |x, dx| {
        let d = rhs_quadratic_2d(x[0], x[1], p)?;
        dx.copy_from_slice(&d);
        Ok(())
    }
}

pub fn closed_form_noise(
    p: &QuadraticParams,
    mode: NoiseMode,
) -> impl FnMut(&[f64], &mut [f64]) -> Result<()> + '_ {
    move |x, dx| {
        dx[0] = rhs_quadratic_noise(x[0], p, mode)?;
        Ok(())
    }
}
