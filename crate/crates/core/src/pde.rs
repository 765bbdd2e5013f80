//! Finite-volume solver for the McKean–Vlasov equation of the joint
//! weight/feature density
//!
//! ```text
//! ∂_t P = −∂_w[Γ P] + ½Λ ∂²_w P,   Γ = w[qᵀg + τr − Λ/2] − uᵀg − τφ(w)
//! ```
//!
//! The density is kept as one 1-D profile in `w` per quadrature node `u_j`
//! of the feature-entry law (standard normal per coordinate). Profiles only
//! interact through the order parameters `q = ∬ u w P`, `r = ∬ w φ(w) P`,
//! which are refreshed before every step.
//!
//! Each step is first-order upwind advection followed by an explicit centred
//! diffusion step, both with zero-flux boundaries; negative values are then
//! clipped and each profile renormalized. The upwind flux splits Γ at cell
//! centres (`F = Γ⁺ᵢPᵢ + Γ⁻ᵢ₊₁Pᵢ₊₁`) rather than at faces: the scheme stays
//! monotone, and for Γ linear in `w` the first moment — hence `q` — evolves
//! exactly up to boundary and time-stepping error.

use crate::activation::Prior;
use crate::error::{Error, Result};
use crate::expectations::{residual_scale, CoefficientSet, MeanField, MeanFieldParams};
use crate::par::Execution;
use crate::quadrature::gauss_hermite;

pub const CFL_LIMIT: f64 = 0.9;
/// Target CFL number when the step is chosen automatically.
const CFL_TARGET: f64 = 0.8;

#[derive(Debug, Clone)]
pub struct PdeConfig {
    pub w_max: f64,
    pub n_w: usize,
    /// Gauss–Hermite nodes per feature coordinate.
    pub u_nodes: usize,
    /// Time step; `None` picks one from the stability bound.
    pub dt: Option<f64>,
    pub t_final: f64,
    /// Time between recorded order parameters.
    pub record_every: f64,
    pub model: MeanFieldParams,
    pub prior: Prior,
    /// Initial overlaps; `None` starts from `w ~ N(0,1)` independent of `u`.
    pub q0: Option<Vec<f64>>,
}

impl PdeConfig {
    pub fn new(model: MeanFieldParams, t_final: f64) -> Self {
        PdeConfig {
            w_max: 6.0,
            n_w: 512,
            u_nodes: 15,
            dt: None,
            t_final,
            record_every: 0.1,
            model,
            prior: Prior::Zero,
            q0: None,
        }
    }

    pub fn d1(&self) -> usize {
        self.model.hidden.len()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.w_max > 0.0 && self.w_max.is_finite()) {
            return Err(Error::param("w_max", format!("must be > 0, got {}", self.w_max)));
        }
        if self.n_w < 3 {
            return Err(Error::param("n_w", format!("need at least 3 cells, got {}", self.n_w)));
        }
        if self.u_nodes == 0 {
            return Err(Error::param("u_nodes", "need at least 1 node"));
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return Err(Error::param("T", format!("must be >= 0, got {}", self.t_final)));
        }
        if !(self.record_every > 0.0) {
            return Err(Error::param("record_every", "must be > 0"));
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::param("dt", format!("must be > 0, got {dt}")));
            }
        }
        if let Some(q0) = &self.q0 {
            if q0.len() != self.d1() {
                return Err(Error::InvalidDimension {
                    n: q0.len(),
                    d1: self.d1(),
                });
            }
            let qq: f64 = q0.iter().map(|v| v * v).sum();
            if qq >= 1.0 {
                return Err(Error::Domain {
                    what: "|q0|",
                    value: qq.sqrt(),
                    domain: "[0, 1)",
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityField {
    /// Cell centres.
    pub w: Vec<f64>,
    pub dw: f64,
    pub u_nodes: Vec<Vec<f64>>,
    pub u_weights: Vec<f64>,
    /// `values[j][i]` ≈ density of `w_i` given `u_j`.
    pub values: Vec<Vec<f64>>,
}

impl DensityField {
    /// `Σ_j ω_j Σ_i P[j][i] Δw`.
    pub fn mass(&self) -> f64 {
        self.values
            .iter()
            .zip(&self.u_weights)
            .map(|(p, o)| o * p.iter().sum::<f64>() * self.dw)
            .sum()
    }
}

fn u_rule(d1: usize, n: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let r = gauss_hermite(n);
    let mut nodes = vec![vec![]];
    let mut weights = vec![1.0];
    for _ in 0..d1 {
        let mut nn = Vec::with_capacity(nodes.len() * n);
        let mut nw = Vec::with_capacity(nodes.len() * n);
        for (p, pw) in nodes.iter().zip(&weights) {
            for (x, w) in r.nodes.iter().zip(&r.weights) {
                let mut v: Vec<f64> = p.clone();
                v.push(*x);
                nn.push(v);
                nw.push(pw * w);
            }
        }
        nodes = nn;
        weights = nw;
    }
    (nodes, weights)
}

/// Gaussian initial profiles: `N(q₀ᵀu, 1 − q₀ᵀq₀)` given `u` (standard
/// normal without `q₀`), sampled at cell centres and normalized per profile.
pub fn init_density(cfg: &PdeConfig) -> Result<DensityField> {
    cfg.validate()?;
    let dw = 2.0 * cfg.w_max / cfg.n_w as f64;
    let w: Vec<f64> = (0..cfg.n_w).map(|i| -cfg.w_max + (i as f64 + 0.5) * dw).collect();
    let (u_nodes, u_weights) = u_rule(cfg.d1(), cfg.u_nodes);
    let q0 = cfg.q0.clone().unwrap_or_else(|| vec![0.0; cfg.d1()]);
    let var = 1.0 - q0.iter().map(|v| v * v).sum::<f64>();
    let values = u_nodes
        .iter()
        .map(|u| {
            let mean: f64 = u.iter().zip(&q0).map(|(a, b)| a * b).sum();
            let mut p: Vec<f64> = w.iter().map(|x| (-(x - mean).powi(2) / (2.0 * var)).exp()).collect();
            let total: f64 = p.iter().sum::<f64>() * dw;
            p.iter_mut().for_each(|v| *v /= total);
            p
        })
        .collect();
    Ok(DensityField {
        w,
        dw,
        u_nodes,
        u_weights,
        values,
    })
}

/// `q = Σ_j ω_j u_j Σ_i w_i P[j][i] Δw`, `r = Σ_j ω_j Σ_i w_i φ(w_i) P[j][i] Δw`.
pub fn order_params(p: &DensityField, prior: &Prior) -> (Vec<f64>, f64) {
    let d1 = p.u_nodes.first().map_or(0, Vec::len);
    let mut q = vec![0.0; d1];
    let mut r = 0.0;
    let phi: Vec<f64> = p.w.iter().map(|w| w * prior.eval(*w)).collect();
    for ((u, o), prof) in p.u_nodes.iter().zip(&p.u_weights).zip(&p.values) {
        let m1: f64 = prof.iter().zip(&p.w).map(|(a, b)| a * b).sum::<f64>() * p.dw;
        for (qi, ui) in q.iter_mut().zip(u) {
            *qi += o * ui * m1;
        }
        if !prior.is_zero() {
            r += o * prof.iter().zip(&phi).map(|(a, b)| a * b).sum::<f64>() * p.dw;
        }
    }
    (q, r)
}

/// Drift/diffusion for one step: `Γ(w, u) = w·linear − uᵀg − τφ(w)`.
#[derive(Debug, Clone)]
pub struct StepCoefficients {
    pub linear: f64,
    pub g: Vec<f64>,
    pub lambda: f64,
    pub tau: f64,
    pub prior: Prior,
}

impl StepCoefficients {
    /// `linear = qᵀg + τr − Λ/2`; the `τr` and `τφ` terms cancel for linear φ
    /// and vanish for φ = 0.
    pub fn from_coefficients(cs: &CoefficientSet, q: &[f64], r: f64, tau: f64, prior: Prior) -> Self {
        let qg: f64 = q.iter().zip(&cs.g).map(|(a, b)| a * b).sum();
        StepCoefficients {
            linear: qg + tau * r - 0.5 * cs.lambda,
            g: cs.g.clone(),
            lambda: cs.lambda,
            tau,
            prior,
        }
    }

    #[inline]
    fn gamma(&self, w: f64, ug: f64) -> f64 {
        w * self.linear - ug - self.tau * self.prior.eval(w)
    }
}

/// `max|Γ|·dt/Δw + Λ·dt/Δw²` over all cells and profiles.
pub fn cfl_number(p: &DensityField, sc: &StepCoefficients, dt: f64) -> f64 {
    let mut gmax: f64 = 0.0;
    for u in &p.u_nodes {
        let ug: f64 = u.iter().zip(&sc.g).map(|(a, b)| a * b).sum();
        for w in &p.w {
            gmax = gmax.max(sc.gamma(*w, ug).abs());
        }
    }
    gmax * dt / p.dw + sc.lambda * dt / (p.dw * p.dw)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepReport {
    /// Largest mass change of a profile before renormalization.
    pub leakage: f64,
    /// Total negative mass removed by clipping (ω-weighted).
    pub clipped: f64,
    pub cfl: f64,
}

/// One operator-split step in place.
pub fn step(p: &mut DensityField, sc: &StepCoefficients, dt: f64, exec: Execution) -> Result<StepReport> {
    let cfl = cfl_number(p, sc, dt);
    if !(cfl <= CFL_LIMIT) {
        return Err(Error::UnstableStep { cfl });
    }
    let n = p.w.len();
    let (dw, w_grid) = (p.dw, &p.w);
    let diff = 0.5 * sc.lambda * dt / (dw * dw);
    let ugs: Vec<f64> = p
        .u_nodes
        .iter()
        .map(|u| u.iter().zip(&sc.g).map(|(a, b)| a * b).sum())
        .collect();
    let mut slices: Vec<(&mut Vec<f64>, f64)> = p.values.iter_mut().zip(ugs).collect();
    let per_slice: Vec<(f64, f64)> = {
        let out = std::sync::Mutex::new(vec![(0.0, 0.0); slices.len()]);
        exec.for_each_mut(&mut slices, |j, (prof, ug)| {
            let before: f64 = prof.iter().sum::<f64>() * dw;
            let gam: Vec<f64> = w_grid.iter().map(|w| sc.gamma(*w, *ug)).collect();
            let mut flux = vec![0.0; n + 1];
            for i in 0..n - 1 {
                flux[i + 1] = gam[i].max(0.0) * prof[i] + gam[i + 1].min(0.0) * prof[i + 1];
            }
            let adv: Vec<f64> = (0..n).map(|i| prof[i] - dt / dw * (flux[i + 1] - flux[i])).collect();
            for i in 0..n {
                let left = if i > 0 { adv[i - 1] - adv[i] } else { 0.0 };
                let right = if i + 1 < n { adv[i + 1] - adv[i] } else { 0.0 };
                prof[i] = adv[i] + diff * (left + right);
            }
            let after: f64 = prof.iter().sum::<f64>() * dw;
            let mut neg = 0.0;
            for v in prof.iter_mut() {
                if *v < 0.0 {
                    neg -= *v;
                    *v = 0.0;
                }
            }
            let total: f64 = prof.iter().sum::<f64>() * dw;
            if total > 0.0 {
                prof.iter_mut().for_each(|v| *v /= total);
            }
            out.lock().expect("no panics while holding the lock")[j] = ((after - before).abs(), neg * dw);
        });
        out.into_inner().expect("lock not poisoned")
    };
    Ok(StepReport {
        leakage: per_slice.iter().map(|s| s.0).fold(0.0, f64::max),
        clipped: per_slice.iter().zip(&p.u_weights).map(|(s, o)| o * s.1).sum(),
        cfl,
    })
}

#[derive(Debug, Clone)]
pub struct PdeRun {
    pub times: Vec<f64>,
    pub q: Vec<Vec<f64>>,
    pub r: Vec<f64>,
    pub density: DensityField,
    pub dt: f64,
    pub steps: usize,
    pub max_leakage: f64,
    pub max_clipped: f64,
    /// Mass in the two outermost cells at the end (truncation monitor).
    pub boundary_mass: f64,
}

fn clamp_unit_ball(q: &mut [f64]) {
    let qq: f64 = q.iter().map(|v| v * v).sum();
    if qq > 1.0 {
        q.iter_mut().for_each(|v| *v /= qq.sqrt());
    }
}

fn step_coefficients(mf: &MeanField, p: &DensityField, cfg: &PdeConfig) -> Result<(Vec<f64>, f64, StepCoefficients)> {
    let (mut q, r) = order_params(p, &cfg.prior);
    clamp_unit_ball(&mut q);
    let cs = mf.coefficients(&q)?;
    let sc = StepCoefficients::from_coefficients(&cs, &q, r, cfg.model.tau, cfg.prior);
    Ok((q, r, sc))
}

/// Largest stable step over a sweep of overlaps, with safety factor.
pub fn stable_dt(cfg: &PdeConfig, mf: &MeanField, p: &DensityField) -> Result<f64> {
    let d1 = cfg.d1();
    let mut probes: Vec<Vec<f64>> = Vec::new();
    for k in 0..=20 {
        let a = k as f64 / 20.0;
        for dir in 0..=d1 {
            let mut q = vec![0.0; d1];
            if dir < d1 {
                q[dir] = a;
            } else {
                q.iter_mut().for_each(|v| *v = a / (d1 as f64).sqrt());
            }
            probes.push(q);
        }
    }
    if let Some(q0) = &cfg.q0 {
        probes.push(q0.clone());
    }
    let r_bound = p
        .w
        .iter()
        .map(|w| (w * cfg.prior.eval(*w)).abs())
        .fold(0.0, f64::max);
    let mut rate: f64 = 0.0;
    for q in probes {
        residual_scale(&q)?;
        let cs = mf.coefficients(&q)?;
        for r in [0.0, r_bound, -r_bound] {
            let sc = StepCoefficients::from_coefficients(&cs, &q, r, cfg.model.tau, cfg.prior);
            rate = rate.max(cfl_number(p, &sc, 1.0));
        }
    }
    Ok(if rate > 0.0 { CFL_TARGET / rate } else { cfg.t_final.max(1.0) })
}

pub fn run_pde(cfg: &PdeConfig, exec: Execution) -> Result<PdeRun> {
    let mut p = init_density(cfg)?;
    let mf = MeanField::new(cfg.model.clone())?;
    let dt_max = match cfg.dt {
        Some(dt) => dt,
        None => stable_dt(cfg, &mf, &p)?,
    };
    let steps = (cfg.t_final / dt_max).ceil().max(1.0) as usize;
    let dt = if cfg.t_final > 0.0 { cfg.t_final / steps as f64 } else { 0.0 };
    let steps = if cfg.t_final > 0.0 { steps } else { 0 };
    // stability is checked up front against the initial coefficients
    let (q, r, sc) = step_coefficients(&mf, &p, cfg)?;
    let cfl = cfl_number(&p, &sc, dt);
    if !(cfl <= CFL_LIMIT) {
        return Err(Error::UnstableStep { cfl });
    }
    let record_stride = ((cfg.record_every / dt.max(f64::MIN_POSITIVE)).round() as usize).max(1);
    let mut run = PdeRun {
        times: vec![0.0],
        q: vec![q],
        r: vec![r],
        density: p.clone(),
        dt,
        steps,
        max_leakage: 0.0,
        max_clipped: 0.0,
        boundary_mass: 0.0,
    };
    for k in 1..=steps {
        let (_, _, sc) = step_coefficients(&mf, &p, cfg)?;
        let rep = step(&mut p, &sc, dt, exec)?;
        run.max_leakage = run.max_leakage.max(rep.leakage);
        run.max_clipped = run.max_clipped.max(rep.clipped);
        if rep.clipped > 0.0 {
            log::debug!("clipped {:.3e} negative mass at step {k}", rep.clipped);
        }
        if k % record_stride == 0 || k == steps {
            let (q, r) = order_params(&p, &cfg.prior);
            if q.iter().any(|v| !v.is_finite()) {
                return Err(Error::IntegrationFailure { t: k as f64 * dt });
            }
            run.times.push(k as f64 * dt);
            run.q.push(q);
            run.r.push(r);
        }
    }
    let n = p.w.len();
    run.boundary_mass = p
        .values
        .iter()
        .zip(&p.u_weights)
        .map(|(prof, o)| o * (prof[0] + prof[1] + prof[n - 2] + prof[n - 1]) * p.dw)
        .sum();
    run.density = p;
    Ok(run)
}
