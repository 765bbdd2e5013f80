//! Population averages over the limiting pre-activations
//! `Θ_ℓ = cᵀq + √(1−qᵀq)·e + γ⁽ℓ⁾`, with `e ~ N(0,1)` and `c`, `γ` from
//! their laws, computed by tensor-product quadrature.
//!
//! Drift and diffusion of the order parameter:
//!
//! ```text
//! g = (τ/2)⟨c(f₁₂ + f₂₁)⟩ − (τ/2) q ⟨f′₁₂ + f′₂₁⟩
//! Λ = (τ²/4m)[(1+η)⟨f₁₂²⟩ + (1+η)⟨f₂₁²⟩ + 2(1+ρη)⟨f₁₂f₂₁⟩]
//! dq/dt = q(qᵀg − Λ/2) − g
//! ```
//!
//! where `f₁₂ = −2(σ(Θ₁) − ȳ⁽¹⁾)σ′(Θ₂)` and `f′ = (∂_{Θ₁} + ∂_{Θ₂})f`. The sign
//! of `g` is the one obtained by expanding a single SGD step; it makes the
//! ODE reduce to the quadratic closed forms in [`crate::ode`].
//!
//! Since both `Θ` share the same `e`, Stein's identity gives
//! `⟨f′⟩ = ⟨e·f⟩/√(1−qᵀq)`, which needs no σ″ and so covers ReLU. Near
//! `‖q‖ = 1` that quotient degenerates and central differences take over.

use crate::activation::Activation;
use crate::data::{HiddenDistribution, NoiseModel};
use crate::error::{Error, Result};
use crate::quadrature::{gauss_hermite, GaussRule};

pub const MIN_E_NODES: usize = 11;
/// Below this value of `√(1−qᵀq)` derivative averages use finite differences.
pub const STEIN_CUTOFF: f64 = 1e-3;
const FD_STEP: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Centering {
    #[default]
    Zero,
    Population,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    /// Gauss–Hermite nodes for `e`.
    pub n_e: usize,
    /// Nodes per noise dimension (ignored without noise).
    pub n_gamma: usize,
    /// Nodes per coordinate for Gaussian hidden laws.
    pub n_c: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            n_e: 41,
            n_gamma: 21,
            n_c: 21,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_e < MIN_E_NODES {
            return Err(Error::param(
                "n_e",
                format!("need at least {MIN_E_NODES} nodes, got {}", self.n_e),
            ));
        }
        if self.n_gamma == 0 {
            return Err(Error::param("n_gamma", "need at least 1 node"));
        }
        if self.n_c == 0 {
            return Err(Error::param("n_c", "need at least 1 node"));
        }
        Ok(())
    }
}

/// Macroscopic state: overlaps `q`, prior overlap `r`, output means `ȳ`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderParams {
    pub q: Vec<f64>,
    pub r: f64,
    pub ybar: [f64; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSet {
    pub g: Vec<f64>,
    pub lambda: f64,
    pub ybar: [f64; 2],
}

/// `Θ = cᵀq + √(1−qᵀq)·e + γ`.
pub fn theta(q: &[f64], c: &[f64], e: f64, gamma: f64) -> Result<f64> {
    let s = residual_scale(q)?;
    Ok(dot(c, q) + s * e + gamma)
}

/// `(f₁₂, f₂₁)` with `f_{ℓℓ̃} = −2(σ(Θ_ℓ) − ȳ⁽ℓ⁾)σ′(Θ_ℓ̃)`.
#[inline]
pub fn f_pair(act: &Activation, t1: f64, t2: f64, ybar: [f64; 2]) -> (f64, f64) {
    (
        -2.0 * (act.eval(t1) - ybar[0]) * act.deriv(t2),
        -2.0 * (act.eval(t2) - ybar[1]) * act.deriv(t1),
    )
}

/// `√(1 − qᵀq)`, rejecting `‖q‖ > 1` beyond rounding.
pub fn residual_scale(q: &[f64]) -> Result<f64> {
    let qq = dot(q, q);
    if !qq.is_finite() || qq > 1.0 + 1e-12 {
        return Err(Error::Domain {
            what: "|q|",
            value: qq.sqrt(),
            domain: "[0, 1]",
        });
    }
    Ok((1.0 - qq).max(0.0).sqrt())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone)]
pub struct MeanFieldParams {
    pub activation: Activation,
    /// One law per feature coordinate (independent coordinates).
    pub hidden: Vec<HiddenDistribution>,
    pub noise: NoiseModel,
    pub tau: f64,
    /// Mini-batch size `m`.
    pub batch: usize,
    pub centering: Centering,
    pub quad: QuadratureSpec,
}

impl MeanFieldParams {
    pub fn new(activation: Activation, hidden: Vec<HiddenDistribution>, tau: f64, batch: usize) -> Self {
        MeanFieldParams {
            activation,
            hidden,
            noise: NoiseModel::None,
            tau,
            batch,
            centering: Centering::Zero,
            quad: QuadratureSpec::default(),
        }
    }

    pub fn with_noise(mut self, noise: NoiseModel) -> Self {
        self.noise = noise;
        self
    }

    pub fn with_centering(mut self, centering: Centering) -> Self {
        self.centering = centering;
        self
    }

    pub fn with_quadrature(mut self, quad: QuadratureSpec) -> Self {
        self.quad = quad;
        self
    }
}

/// Node set for `(γ⁽¹⁾, γ⁽²⁾)`: `[γ₁, γ₂, weight]`.
fn noise_nodes(noise: &NoiseModel, n: usize) -> Vec<[f64; 3]> {
    if noise.is_silent() {
        return vec![[0.0, 0.0, 1.0]];
    }
    let s = noise.eta().sqrt();
    let rule = gauss_hermite(n);
    let rho = noise.rho();
    if rho.abs() == 1.0 {
        return rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .map(|(&t, &w)| [s * t, rho * s * t, w])
            .collect();
    }
    let rho_c = (1.0 - rho * rho).sqrt();
    let mut out = Vec::with_capacity(n * n);
    for (&t1, &w1) in rule.nodes.iter().zip(&rule.weights) {
        for (&t2, &w2) in rule.nodes.iter().zip(&rule.weights) {
            out.push([s * t1, s * (rho * t1 + rho_c * t2), w1 * w2]);
        }
    }
    out
}

/// Mean-field evaluator with precomputed quadrature nodes.
#[derive(Debug, Clone)]
pub struct MeanField {
    params: MeanFieldParams,
    /// Tensor-product nodes for `c`, flattened `d₁` values per node.
    c_nodes: Vec<f64>,
    c_weights: Vec<f64>,
    e_rule: GaussRule,
    gamma: Vec<[f64; 3]>,
}

struct Sums {
    c_f: Vec<f64>,
    f_sum: f64,
    e_f: f64,
    fd: f64,
    f11: f64,
    f22: f64,
    f12: f64,
}

impl MeanField {
    pub fn new(params: MeanFieldParams) -> Result<Self> {
        params.quad.validate()?;
        params.noise.validate()?;
        if params.hidden.is_empty() {
            return Err(Error::param("hidden", "need at least one feature"));
        }
        for h in &params.hidden {
            h.validate()?;
        }
        if !(params.tau.is_finite() && params.tau >= 0.0) {
            return Err(Error::param("tau", format!("must be >= 0, got {}", params.tau)));
        }
        if params.batch == 0 {
            return Err(Error::param("m", "batch size must be >= 1"));
        }
        let d1 = params.hidden.len();
        let mut c_nodes = vec![];
        let mut c_weights = vec![1.0];
        let mut prefix: Vec<Vec<f64>> = vec![vec![]];
        for h in &params.hidden {
            let (x, w) = h.quadrature(params.quad.n_c);
            let mut next = Vec::with_capacity(prefix.len() * x.len());
            let mut next_w = Vec::with_capacity(prefix.len() * x.len());
            for (p, pw) in prefix.iter().zip(&c_weights) {
                for (xi, wi) in x.iter().zip(&w) {
                    if *wi == 0.0 {
                        continue;
                    }
                    let mut v = p.clone();
                    v.push(*xi);
                    next.push(v);
                    next_w.push(pw * wi);
                }
            }
            prefix = next;
            c_weights = next_w;
        }
        for p in &prefix {
            debug_assert_eq!(p.len(), d1);
            c_nodes.extend_from_slice(p);
        }
        let gamma = noise_nodes(&params.noise, params.quad.n_gamma);
        Ok(MeanField {
            e_rule: gauss_hermite(params.quad.n_e),
            params,
            c_nodes,
            c_weights,
            gamma,
        })
    }

    pub fn params(&self) -> &MeanFieldParams {
        &self.params
    }

    pub fn d1(&self) -> usize {
        self.params.hidden.len()
    }

    fn check(&self, q: &[f64]) -> Result<f64> {
        if q.len() != self.d1() {
            return Err(Error::InvalidDimension {
                n: q.len(),
                d1: self.d1(),
            });
        }
        residual_scale(q)
    }

    /// Calls `visit(c, cᵀq + s·e, γ₁, γ₂, e, weight)` for every node.
    fn for_each_node(&self, q: &[f64], s: f64, mut visit: impl FnMut(&[f64], f64, f64, f64, f64, f64)) {
        let d1 = self.d1();
        for (k, &wc) in self.c_weights.iter().enumerate() {
            let c = &self.c_nodes[k * d1..(k + 1) * d1];
            let cq = dot(c, q);
            for (&e, &we) in self.e_rule.nodes.iter().zip(&self.e_rule.weights) {
                let base = cq + s * e;
                let w = wc * we;
                for &[g1, g2, wg] in &self.gamma {
                    visit(c, base, g1, g2, e, w * wg);
                }
            }
        }
    }

    /// `ȳ⁽ℓ⁾ = ⟨σ(Θ_ℓ)⟩`. Marginally `Θ_ℓ = cᵀq + √(s² + η)·e` for both
    /// views, so the two means coincide.
    pub fn population_means(&self, q: &[f64]) -> Result<[f64; 2]> {
        let s = self.check(q)?;
        let act = self.params.activation;
        let spread = (s * s + self.params.noise.eta()).sqrt();
        let d1 = self.d1();
        let mut y = 0.0;
        for (k, &wc) in self.c_weights.iter().enumerate() {
            let cq = dot(&self.c_nodes[k * d1..(k + 1) * d1], q);
            for (&e, &we) in self.e_rule.nodes.iter().zip(&self.e_rule.weights) {
                y += wc * we * act.eval(cq + spread * e);
            }
        }
        Ok([y, y])
    }

    fn sums(&self, q: &[f64], s: f64, ybar: [f64; 2]) -> Sums {
        let act = self.params.activation;
        let fd = s <= STEIN_CUTOFF;
        let mut acc = Sums {
            c_f: vec![0.0; self.d1()],
            f_sum: 0.0,
            e_f: 0.0,
            fd: 0.0,
            f11: 0.0,
            f22: 0.0,
            f12: 0.0,
        };
        self.for_each_node(q, s, |c, base, g1, g2, e, w| {
            let (t1, t2) = (base + g1, base + g2);
            let (a, b) = f_pair(&act, t1, t2, ybar);
            let sum = a + b;
            for (ci, acc_ci) in c.iter().zip(acc.c_f.iter_mut()) {
                *acc_ci += w * ci * sum;
            }
            acc.f_sum += w * sum;
            acc.e_f += w * e * sum;
            acc.f11 += w * a * a;
            acc.f22 += w * b * b;
            acc.f12 += w * a * b;
            if fd {
                let (ap, bp) = f_pair(&act, t1 + FD_STEP, t2 + FD_STEP, ybar);
                let (am, bm) = f_pair(&act, t1 - FD_STEP, t2 - FD_STEP, ybar);
                acc.fd += w * ((ap + bp) - (am + bm)) / (2.0 * FD_STEP);
            }
        });
        acc
    }

    pub fn coefficients(&self, q: &[f64]) -> Result<CoefficientSet> {
        let s = self.check(q)?;
        let ybar = match self.params.centering {
            Centering::Zero => [0.0; 2],
            Centering::Population => self.population_means(q)?,
        };
        let acc = self.sums(q, s, ybar);
        let fprime = if s > STEIN_CUTOFF { acc.e_f / s } else { acc.fd };
        let half_tau = 0.5 * self.params.tau;
        // with q_i = 0 the integrand does not depend on c_i, so ⟨c_i F⟩
        // factorizes; this keeps q_i = 0 exactly invariant for centred laws
        let g = acc
            .c_f
            .iter()
            .zip(q)
            .zip(&self.params.hidden)
            .map(|((cf, qi), h)| {
                if *qi == 0.0 {
                    half_tau * h.mean() * acc.f_sum
                } else {
                    half_tau * cf - half_tau * qi * fprime
                }
            })
            .collect();
        let (eta, rho) = (self.params.noise.eta(), self.params.noise.rho());
        let lambda = self.params.tau * self.params.tau / (4.0 * self.params.batch as f64)
            * ((1.0 + eta) * (acc.f11 + acc.f22) + 2.0 * (1.0 + rho * eta) * acc.f12);
        Ok(CoefficientSet { g, lambda, ybar })
    }

    /// `⟨f′₁₂ + f′₂₁⟩` by Stein's identity (or finite differences near ‖q‖ = 1).
    pub fn derivative_average(&self, q: &[f64]) -> Result<f64> {
        let s = self.check(q)?;
        let ybar = match self.params.centering {
            Centering::Zero => [0.0; 2],
            Centering::Population => self.population_means(q)?,
        };
        let acc = self.sums(q, s, ybar);
        Ok(if s > STEIN_CUTOFF { acc.e_f / s } else { acc.fd })
    }

    /// `dq/dt = q(qᵀg − Λ/2) − g`.
    pub fn rhs(&self, q: &[f64]) -> Result<Vec<f64>> {
        let cs = self.coefficients(q)?;
        Ok(rhs_from(q, &cs))
    }
}

pub fn rhs_from(q: &[f64], cs: &CoefficientSet) -> Vec<f64> {
    let big_g = dot(q, &cs.g) - 0.5 * cs.lambda;
    q.iter().zip(&cs.g).map(|(qi, gi)| qi * big_g - gi).collect()
}

/// Critical second moment above which `q = 0` is unstable (ȳ = 0):
///
/// `m₂* = 1 + (τ/2m) · N/D`, with `N = (1+η)⟨σ₁²σ₂′²⟩ + (1+η)⟨σ₂²σ₁′²⟩ + 2(1+ρη)⟨σ₁σ₁′σ₂σ₂′⟩`
/// and `D = ⟨σ₁σ₂″ + 2σ₁′σ₂′ + σ₂σ₁″⟩ = ⟨e(σ₁σ₂′ + σ₂σ₁′)⟩` (Stein), all at
/// `Θ_ℓ = e + γ⁽ℓ⁾`.
pub fn trainability_threshold(
    activation: Activation,
    noise: NoiseModel,
    tau: f64,
    m: usize,
    quad: QuadratureSpec,
) -> Result<f64> {
    quad.validate()?;
    noise.validate()?;
    if m == 0 {
        return Err(Error::param("m", "batch size must be >= 1"));
    }
    let e_rule = gauss_hermite(quad.n_e);
    let gamma = noise_nodes(&noise, quad.n_gamma);
    let (mut num, mut den) = (0.0, 0.0);
    let (eta, rho) = (noise.eta(), noise.rho());
    for (&e, &we) in e_rule.nodes.iter().zip(&e_rule.weights) {
        for &[g1, g2, wg] in &gamma {
            let w = we * wg;
            let (a, b) = f_pair(&activation, e + g1, e + g2, [0.0; 2]);
            num += w * 0.25 * ((1.0 + eta) * (a * a + b * b) + 2.0 * (1.0 + rho * eta) * a * b);
            den += -0.5 * w * e * (a + b);
        }
    }
    if !(den.abs() > 1e-12) {
        return Err(Error::DegenerateActivation(format!(
            "{}: derivative average vanishes at q = 0 ({den:e})",
            activation.name()
        )));
    }
    Ok(1.0 + tau / (2.0 * m as f64) * num / den)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad_model(hidden: HiddenDistribution) -> MeanField {
        MeanField::new(MeanFieldParams::new(Activation::Quadratic, vec![hidden], 0.1, 10)).unwrap()
    }

    #[test]
    fn theta_examples() {
        assert_eq!(theta(&[0.0], &[3.0], 1.0, 0.0).unwrap(), 1.0);
        assert!((theta(&[1.0], &[2.0], 5.0, 0.25).unwrap() - 2.25).abs() < 1e-15);
        let t = theta(&[0.6, 0.0], &[1.0, 1.0], 1.0, 0.1).unwrap();
        assert!((t - 1.5).abs() < 1e-14);
        assert!(theta(&[0.8, 0.8], &[1.0, 1.0], 0.0, 0.0).is_err());
    }

    #[test]
    fn f_pair_examples() {
        assert_eq!(f_pair(&Activation::Quadratic, 1.0, 1.0, [0.0; 2]), (-4.0, -4.0));
        let (a, _) = f_pair(&Activation::Quadratic, 1.3, 0.2, [1.69, 0.0]);
        assert!(a.abs() < 1e-15);
        assert_eq!(f_pair(&Activation::Relu, 2.0, -1.0, [0.0; 2]), (-0.0, -0.0));
    }

    #[test]
    fn origin_has_zero_drift() {
        for act in [Activation::Quadratic, Activation::Relu] {
            for noise in [NoiseModel::None, NoiseModel::Independent { eta: 0.3 }] {
                let mf = MeanField::new(
                    MeanFieldParams::new(act, vec![HiddenDistribution::three_point(5.5, 0.2)], 0.1, 10)
                        .with_noise(noise),
                )
                .unwrap();
                let cs = mf.coefficients(&[0.0]).unwrap();
                assert!(cs.g[0].abs() < 1e-14);
                assert!(mf.rhs(&[0.0]).unwrap()[0].abs() < 1e-14);
            }
        }
    }

    #[test]
    fn quadratic_diffusion_at_origin() {
        let cs = quad_model(HiddenDistribution::gaussian(1.0)).coefficients(&[0.0]).unwrap();
        assert!((cs.lambda - 240.0 * 0.01 / 10.0).abs() < 1e-12);
    }

    #[test]
    fn gaussian_hidden_law_is_drift_free() {
        let mf = quad_model(HiddenDistribution::gaussian(1.0));
        for k in 0..10 {
            let q = k as f64 / 10.0;
            assert!(mf.coefficients(&[q]).unwrap().g[0].abs() < 1e-12, "q = {q}");
        }
        // ‖q‖ = 1 goes through central differences, O(h²) accurate
        assert!(mf.coefficients(&[1.0]).unwrap().g[0].abs() < 1e-7);
        let q = 0.5f64.sqrt();
        let dq = mf.rhs(&[q]).unwrap()[0];
        assert!((2.0 * q * dq + 0.12).abs() < 1e-12);
    }

    #[test]
    fn stein_matches_analytic_derivative() {
        // σ = sin is smooth; compare ⟨e f⟩/s with quadrature of ∂₁f + ∂₂f.
        let act = Activation::Custom {
            name: "sin",
            f: f64::sin,
            df: f64::cos,
        };
        let d2 = |x: f64| -x.sin();
        let law = HiddenDistribution::three_point(2.0, 0.5);
        let mf = MeanField::new(
            MeanFieldParams::new(act, vec![law.clone()], 0.1, 10)
                .with_quadrature(QuadratureSpec { n_e: 61, ..Default::default() }),
        )
        .unwrap();
        let q = 0.4;
        let s = (1.0f64 - q * q).sqrt();
        let stein = mf.derivative_average(&[q]).unwrap();
        let (cx, cw) = law.quadrature(1);
        let e = gauss_hermite(61);
        let mut direct = 0.0;
        for (c, wc) in cx.iter().zip(&cw) {
            for (x, we) in e.nodes.iter().zip(&e.weights) {
                let t = c * q + s * x;
                // f₁₂ + f₂₁ = −4σσ′ on the diagonal; its total derivative
                let dd = -4.0 * (act.deriv(t) * act.deriv(t) + act.eval(t) * d2(t));
                direct += wc * we * dd;
            }
        }
        assert!((stein - direct).abs() < 1e-8, "{stein} vs {direct}");
    }

    #[test]
    fn finite_difference_branch_agrees_at_crossover() {
        let mf = quad_model(HiddenDistribution::three_point(5.5, 0.2));
        // s just above and just below the cutoff
        let q_hi = (1.0f64 - 1.0001e-3f64.powi(2)).sqrt();
        let q_lo = (1.0f64 - 0.9999e-3f64.powi(2)).sqrt();
        let a = mf.derivative_average(&[q_hi]).unwrap();
        let b = mf.derivative_average(&[q_lo]).unwrap();
        assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        assert!(mf.coefficients(&[1.0]).is_ok());
    }

    #[test]
    fn anticorrelated_noise_reduces_diffusion() {
        let law = HiddenDistribution::three_point(5.0, 0.2);
        let lam = |noise| {
            MeanField::new(
                MeanFieldParams::new(Activation::Quadratic, vec![law.clone()], 0.1, 10).with_noise(noise),
            )
            .unwrap()
            .coefficients(&[0.6])
            .unwrap()
            .lambda
        };
        assert!(lam(NoiseModel::AntiCorrelated { eta: 0.2 }) < lam(NoiseModel::Independent { eta: 0.2 }));
        assert_eq!(lam(NoiseModel::None), lam(NoiseModel::Independent { eta: 0.0 }));
    }

    #[test]
    fn population_centering() {
        let mf = MeanField::new(
            MeanFieldParams::new(Activation::Quadratic, vec![HiddenDistribution::three_point(5.5, 0.2)], 0.1, 10)
                .with_centering(Centering::Population),
        )
        .unwrap();
        // ⟨Θ²⟩ = Q m₂ + 1 − Q
        let q = 0.5f64;
        let y = mf.population_means(&[q]).unwrap();
        assert!((y[0] - (q * q * 1.1 + 1.0 - q * q)).abs() < 1e-12);
        assert_eq!(mf.coefficients(&[q]).unwrap().ybar, y);
    }

    #[test]
    fn quadrature_minimum_enforced() {
        let p = MeanFieldParams::new(Activation::Quadratic, vec![HiddenDistribution::gaussian(1.0)], 0.1, 10)
            .with_quadrature(QuadratureSpec { n_e: 5, ..Default::default() });
        assert!(matches!(MeanField::new(p), Err(Error::InvalidParameter { name: "n_e", .. })));
    }

    #[test]
    fn quadratic_threshold_is_one_plus_ten_tau_over_m() {
        let t = trainability_threshold(Activation::Quadratic, NoiseModel::None, 0.1, 10, QuadratureSpec::default())
            .unwrap();
        assert!((t - 1.1).abs() < 1e-12);
        let t0 = trainability_threshold(Activation::Quadratic, NoiseModel::None, 1e-12, 10, QuadratureSpec::default())
            .unwrap();
        assert!((t0 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn degenerate_activation() {
        let flat = Activation::Custom {
            name: "zero",
            f: |_| 0.0,
            df: |_| 0.0,
        };
        assert!(matches!(
            trainability_threshold(flat, NoiseModel::None, 0.1, 10, QuadratureSpec::default()),
            Err(Error::DegenerateActivation(_))
        ));
    }

    #[test]
    fn population_means_match_full_node_sum() {
        let smooth = Activation::Custom {
            name: "exp",
            f: f64::exp,
            df: f64::exp,
        };
        let mf = MeanField::new(
            MeanFieldParams::new(
                smooth,
                vec![HiddenDistribution::gaussian(1.5), HiddenDistribution::three_point(5.0, 0.2)],
                0.1,
                10,
            )
            .with_noise(NoiseModel::Correlated { eta: 0.4, rho: 0.3 }),
        )
        .unwrap();
        let q = [0.3, -0.5];
        let s = residual_scale(&q).unwrap();
        let mut brute = [0.0; 2];
        mf.for_each_node(&q, s, |_, base, g1, g2, _, w| {
            brute[0] += w * smooth.eval(base + g1);
            brute[1] += w * smooth.eval(base + g2);
        });
        let y = mf.population_means(&q).unwrap();
        assert!(y[0] > 1.0);
        for l in 0..2 {
            assert!((y[l] - brute[l]).abs() < 1e-10, "{y:?} vs {brute:?}");
        }
    }
}
