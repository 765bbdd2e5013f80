//! Fixed points and their stability, trainability thresholds, basins of
//! attraction and noise sweeps on top of the right-hand-side evaluators.

use crate::error::{Error, Result};
use crate::expectations::MeanField;
use crate::ode::{rhs_quadratic_noise, Domain, NoiseMode, QuadraticParams, Rk4};
use crate::par::Execution;

/// Eigenvalues with real part below this are reported as marginal.
pub const MARGINAL_TOL: f64 = 1e-8;
/// Largest accepted `|rhs|` at a reported fixed point.
pub const RESIDUAL_TOL: f64 = 1e-9;
pub const DEFAULT_RESOLUTION: usize = 10_000;
const BISECT_TOL: f64 = 1e-12;
const DIFF_STEP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stability {
    Stable,
    Unstable,
    Saddle,
    Marginal,
}

impl Stability {
    /// Classifies by the signs of the eigenvalues' real parts.
    pub fn classify(real_parts: &[f64]) -> Self {
        if real_parts.iter().any(|v| v.abs() < MARGINAL_TOL) {
            Stability::Marginal
        } else if real_parts.iter().all(|v| *v < 0.0) {
            Stability::Stable
        } else if real_parts.iter().all(|v| *v > 0.0) || real_parts.len() == 1 {
            Stability::Unstable
        } else {
            Stability::Saddle
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Stability::Stable => "stable",
            Stability::Unstable => "unstable",
            Stability::Saddle => "saddle",
            Stability::Marginal => "marginal",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixedPoint {
    pub location: Vec<f64>,
    pub stability: Stability,
    /// Real parts of the linearization's eigenvalues.
    pub eigenvalues: Vec<f64>,
    pub residual: f64,
}

/// Derivative of `f` at `x ∈ [0, 1]`: central where possible, second-order
/// one-sided at the ends.
fn derivative_unit<F: FnMut(f64) -> Result<f64>>(f: &mut F, x: f64, h: f64) -> Result<f64> {
    if x - h < 0.0 {
        Ok((-3.0 * f(x)? + 4.0 * f(x + h)? - f(x + 2.0 * h)?) / (2.0 * h))
    } else if x + h > 1.0 {
        Ok((3.0 * f(x)? - 4.0 * f(x - h)? + f(x - 2.0 * h)?) / (2.0 * h))
    } else {
        Ok((f(x + h)? - f(x - h)?) / (2.0 * h))
    }
}

fn point_1d<F: FnMut(f64) -> Result<f64>>(f: &mut F, x: f64) -> Result<FixedPoint> {
    let d = derivative_unit(f, x, DIFF_STEP)?;
    Ok(FixedPoint {
        location: vec![x],
        stability: Stability::classify(&[d]),
        eigenvalues: vec![d],
        residual: f(x)?.abs(),
    })
}

/// All zeros of a scalar right-hand side on `[0, 1]`, ascending.
///
/// Sign changes on a uniform grid of `resolution` intervals are bisected to
/// 1e-12; both endpoints are checked directly. Tangential zeros (no sign
/// change) between grid points are not detected.
pub fn find_fixed_points_1d<F>(mut rhs: F, resolution: usize) -> Result<Vec<FixedPoint>>
where
    F: FnMut(f64) -> Result<f64>,
{
    let n = resolution.max(2);
    let mut out = Vec::new();
    let grid = |k: usize| if k == n { 1.0 } else { k as f64 / n as f64 };
    let mut prev = rhs(0.0)?;
    if prev.abs() <= RESIDUAL_TOL {
        out.push(point_1d(&mut rhs, 0.0)?);
    }
    for k in 1..=n {
        let x = grid(k);
        let cur = rhs(x)?;
        if cur == 0.0 && k < n {
            out.push(point_1d(&mut rhs, x)?);
        } else if prev != 0.0 && cur != 0.0 && (prev < 0.0) != (cur < 0.0) {
            let (mut lo, mut hi, flo) = (grid(k - 1), x, prev);
            while hi - lo > BISECT_TOL {
                let mid = 0.5 * (lo + hi);
                let fm = rhs(mid)?;
                if fm == 0.0 {
                    lo = mid;
                    hi = mid;
                } else if (fm < 0.0) == (flo < 0.0) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let root = 0.5 * (lo + hi);
            out.push(point_1d(&mut rhs, root)?);
        } else if k == n && cur.abs() <= RESIDUAL_TOL {
            out.push(point_1d(&mut rhs, 1.0)?);
        }
        prev = cur;
    }
    Ok(out)
}

/// Largest stable fixed point in (0, 1].
pub fn recovery_state(points: &[FixedPoint]) -> Option<f64> {
    points
        .iter()
        .filter(|p| p.stability == Stability::Stable && p.location[0] > 0.0)
        .map(|p| p.location[0])
        .fold(None, |acc, v| Some(acc.map_or(v, |a: f64| a.max(v))))
}

fn on_simplex(x: [f64; 2]) -> bool {
    x[0] >= 0.0 && x[1] >= 0.0 && x[0] + x[1] <= 1.0
}

/// Jacobian on the simplex, stepping inward where a central difference
/// would leave it.
fn jacobian_2d<F>(rhs: &F, x: [f64; 2]) -> Result<[[f64; 2]; 2]>
where
    F: Fn([f64; 2]) -> Result<[f64; 2]>,
{
    let h = DIFF_STEP;
    let mut jac = [[0.0; 2]; 2];
    for j in 0..2 {
        let shifted = |d: f64| {
            let mut y = x;
            y[j] += d;
            y
        };
        let col = if on_simplex(shifted(-h)) && on_simplex(shifted(h)) {
            let (a, b) = (rhs(shifted(h))?, rhs(shifted(-h))?);
            [(a[0] - b[0]) / (2.0 * h), (a[1] - b[1]) / (2.0 * h)]
        } else {
            let s = if on_simplex(shifted(h)) && on_simplex(shifted(2.0 * h)) { 1.0 } else { -1.0 };
            let (f0, f1, f2) = (rhs(x)?, rhs(shifted(s * h))?, rhs(shifted(2.0 * s * h))?);
            [
                s * (-3.0 * f0[0] + 4.0 * f1[0] - f2[0]) / (2.0 * h),
                s * (-3.0 * f0[1] + 4.0 * f1[1] - f2[1]) / (2.0 * h),
            ]
        };
        jac[0][j] = col[0];
        jac[1][j] = col[1];
    }
    Ok(jac)
}

/// Real parts of the eigenvalues of a 2×2 matrix, ascending.
pub fn eigen_real_parts_2x2(m: [[f64; 2]; 2]) -> [f64; 2] {
    let tr = m[0][0] + m[1][1];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let disc = 0.25 * tr * tr - det;
    if disc >= 0.0 {
        let s = disc.sqrt();
        [0.5 * tr - s, 0.5 * tr + s]
    } else {
        [0.5 * tr, 0.5 * tr]
    }
}

fn point_2d<F>(rhs: &F, x: [f64; 2]) -> Result<FixedPoint>
where
    F: Fn([f64; 2]) -> Result<[f64; 2]>,
{
    let eig = eigen_real_parts_2x2(jacobian_2d(rhs, x)?);
    let r = rhs(x)?;
    Ok(FixedPoint {
        location: x.to_vec(),
        stability: Stability::classify(&eig),
        eigenvalues: eig.to_vec(),
        residual: r[0].hypot(r[1]),
    })
}

fn newton_2d<F>(rhs: &F, mut x: [f64; 2]) -> Result<Option<[f64; 2]>>
where
    F: Fn([f64; 2]) -> Result<[f64; 2]>,
{
    for _ in 0..60 {
        let f = rhs(x)?;
        if f[0].hypot(f[1]) <= 1e-13 {
            return Ok(Some(x));
        }
        let j = jacobian_2d(rhs, x)?;
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det.abs() < 1e-14 {
            return Ok(None);
        }
        let dx = [
            (j[1][1] * f[0] - j[0][1] * f[1]) / det,
            (j[0][0] * f[1] - j[1][0] * f[0]) / det,
        ];
        // damp steps that would leave the simplex
        let mut lam = 1.0;
        let mut next = [x[0] - dx[0], x[1] - dx[1]];
        while !on_simplex(next) && lam > 1e-6 {
            lam *= 0.5;
            next = [x[0] - lam * dx[0], x[1] - lam * dx[1]];
        }
        if !on_simplex(next) {
            return Ok(None);
        }
        x = next;
    }
    let f = rhs(x)?;
    Ok((f[0].hypot(f[1]) <= RESIDUAL_TOL).then_some(x))
}

/// Fixed points of a two-feature right-hand side on the simplex: the axes
/// are scanned as 1-D problems (they are invariant), the interior is covered
/// by Newton iterations from a grid of seeds.
pub fn find_fixed_points_2d<F>(rhs: F, resolution: usize) -> Result<Vec<FixedPoint>>
where
    F: Fn([f64; 2]) -> Result<[f64; 2]>,
{
    let mut locs: Vec<[f64; 2]> = Vec::new();
    for axis in 0..2 {
        let along = |s: f64| {
            let mut x = [0.0; 2];
            x[axis] = s;
            x
        };
        for p in find_fixed_points_1d(|s| Ok(rhs(along(s))?[axis]), resolution)? {
            locs.push(along(p.location[0]));
        }
    }
    let seeds = 24;
    for i in 1..seeds {
        for j in 1..seeds - i {
            let x0 = [i as f64 / seeds as f64, j as f64 / seeds as f64];
            if let Some(x) = newton_2d(&rhs, x0)? {
                if x[0] > 1e-9 && x[1] > 1e-9 {
                    locs.push(x);
                }
            }
        }
    }
    let mut unique: Vec<[f64; 2]> = Vec::new();
    for x in locs {
        if !unique.iter().any(|u| (u[0] - x[0]).hypot(u[1] - x[1]) < 1e-7) {
            unique.push(x);
        }
    }
    unique.sort_by(|a, b| a.partial_cmp(b).expect("finite fixed points"));
    unique
        .into_iter()
        .map(|x| point_2d(&rhs, x))
        .filter(|p| !matches!(p, Ok(fp) if fp.residual > RESIDUAL_TOL))
        .collect()
}

/// `d(dq/dt)/dq` at `q = 0` for a single-feature mean-field model.
pub fn origin_growth_rate(mf: &MeanField) -> Result<f64> {
    if mf.d1() != 1 {
        return Err(Error::InvalidDimension { n: 1, d1: mf.d1() });
    }
    let h = 1e-5;
    Ok((mf.rhs(&[h])?[0] - mf.rhs(&[-h])?[0]) / (2.0 * h))
}

/// Second moment at which the origin's growth rate changes sign, located by
/// bisection on `[lo, hi]`; `model(m2)` builds the mean-field model.
pub fn growth_rate_sign_flip<M>(model: M, lo: f64, hi: f64, tol: f64) -> Result<f64>
where
    M: Fn(f64) -> Result<MeanField>,
{
    let rate = |m2: f64| -> Result<f64> { origin_growth_rate(&model(m2)?) };
    let (mut a, mut b) = (lo, hi);
    let fa = rate(a)?;
    if (fa < 0.0) == (rate(b)? < 0.0) {
        return Err(Error::param("m2 bracket", format!("no sign change on [{lo}, {hi}]")));
    }
    while b - a > tol {
        let mid = 0.5 * (a + b);
        if (rate(mid)? < 0.0) == (fa < 0.0) {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasinLabel {
    Feature(usize),
    Origin,
    Unresolved,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BasinCell {
    pub start: [f64; 2],
    pub end: [f64; 2],
    pub label: BasinLabel,
    /// `None` when `t_max` was reached first.
    pub converged_at: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasinOptions {
    pub dt: f64,
    pub t_max: f64,
    pub tol: f64,
}

impl Default for BasinOptions {
    fn default() -> Self {
        BasinOptions {
            dt: 1e-2,
            t_max: 200.0,
            tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BasinMap {
    pub resolution: usize,
    /// Cells of the `resolution × resolution` grid over `[0,1]²` whose
    /// centres lie in the simplex.
    pub cells: Vec<BasinCell>,
    pub fixed_points: Vec<FixedPoint>,
}

impl BasinMap {
    /// Fraction of simplex cells carrying `label`.
    pub fn area(&self, label: BasinLabel) -> f64 {
        self.cells.iter().filter(|c| c.label == label).count() as f64 / self.cells.len() as f64
    }

    pub fn count(&self, label: BasinLabel) -> usize {
        self.cells.iter().filter(|c| c.label == label).count()
    }
}

fn label_end(x: [f64; 2], stable_max: [f64; 2]) -> BasinLabel {
    let best = if x[0] > x[1] {
        Some(0)
    } else if x[1] > x[0] {
        Some(1)
    } else {
        None
    };
    match best {
        Some(i) if stable_max[i] > 0.0 && x[i] > 0.5 * stable_max[i] => BasinLabel::Feature(i),
        _ if x[0].max(x[1]) < 1e-3 => BasinLabel::Origin,
        _ => BasinLabel::Unresolved,
    }
}

/// Integrates from every simplex cell centre until `‖rhs‖ < tol` or `t_max`
/// and labels the end state.
pub fn basin_map_2d<F>(rhs: F, resolution: usize, opts: BasinOptions, exec: Execution) -> Result<BasinMap>
where
    F: Fn([f64; 2]) -> Result<[f64; 2]> + Sync,
{
    if resolution == 0 {
        return Err(Error::param("resolution", "must be >= 1"));
    }
    if !(opts.dt > 0.0 && opts.t_max > 0.0 && opts.tol > 0.0) {
        return Err(Error::param("basin options", "dt, t_max and tol must be > 0"));
    }
    let fixed_points = find_fixed_points_2d(&rhs, 2000)?;
    let mut stable_max = [0.0f64; 2];
    for p in fixed_points.iter().filter(|p| p.stability == Stability::Stable) {
        for i in 0..2 {
            stable_max[i] = stable_max[i].max(p.location[i]);
        }
    }
    let n = resolution;
    let starts: Vec<[f64; 2]> = (0..n)
        .flat_map(|i| (0..n).map(move |j| [(i as f64 + 0.5) / n as f64, (j as f64 + 0.5) / n as f64]))
        .filter(|x| x[0] + x[1] <= 1.0)
        .collect();
    let steps = (opts.t_max / opts.dt).ceil() as usize;
    let cells = exec.map(&starts, |start| -> Result<BasinCell> {
        let mut f = |x: &[f64], dx: &mut [f64]| -> Result<()> {
            dx.copy_from_slice(&rhs([x[0], x[1]])?);
            Ok(())
        };
        let mut rk = Rk4::new(2, Domain::Simplex);
        let mut x = start.to_vec();
        let mut converged_at = None;
        for k in 0..=steps {
            let r = rhs([x[0], x[1]])?;
            if r[0].hypot(r[1]) < opts.tol {
                converged_at = Some(k as f64 * opts.dt);
                break;
            }
            if k < steps {
                rk.step(&mut f, &mut x, opts.dt)?;
            }
        }
        let end = [x[0], x[1]];
        Ok(BasinCell {
            start: *start,
            end,
            label: if converged_at.is_some() { label_end(end, stable_max) } else { BasinLabel::Unresolved },
            converged_at,
        })
    });
    Ok(BasinMap {
        resolution,
        cells: cells.into_iter().collect::<Result<_>>()?,
        fixed_points,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub eta: f64,
    /// Recovery state, `None` once it has vanished.
    pub q_star: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSweep {
    pub mode: NoiseMode,
    /// Ascending in η, including points inserted by jump refinement.
    pub points: Vec<SweepPoint>,
    /// Smallest η at which the recovery state vanishes, if in range.
    pub critical_eta: Option<f64>,
}

/// Q* jumps larger than this between neighbouring η trigger refinement.
const SWEEP_JUMP: f64 = 0.02;

fn recovery_at(p: &QuadraticParams, mode: NoiseMode, eta: f64, resolution: usize) -> Result<Option<f64>> {
    let pe = p.clone().with_eta(eta);
    let points = find_fixed_points_1d(|q| rhs_quadratic_noise(q, &pe, mode), resolution)?;
    Ok(recovery_state(&points))
}

/// Recovery state of the single-feature noisy dynamics over an η grid.
pub fn noise_sweep(
    mode: NoiseMode,
    etas: &[f64],
    p: &QuadraticParams,
    resolution: usize,
    exec: Execution,
) -> Result<NoiseSweep> {
    p.validate()?;
    if let Some(bad) = etas.iter().find(|e| !(**e >= 0.0 && e.is_finite())) {
        return Err(Error::param("eta", format!("must be >= 0, got {bad}")));
    }
    let mut grid = etas.to_vec();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let mut points: Vec<SweepPoint> = exec
        .map(&grid, |&eta| recovery_at(p, mode, eta, resolution).map(|q_star| SweepPoint { eta, q_star }))
        .into_iter()
        .collect::<Result<_>>()?;

    // refine where Q* jumps; genuine discontinuities stop at a width floor
    let mut k = 0;
    while k + 1 < points.len() {
        let (a, b) = (points[k], points[k + 1]);
        let jump = matches!((a.q_star, b.q_star), (Some(x), Some(y)) if (x - y).abs() > SWEEP_JUMP);
        if jump && b.eta - a.eta > 1e-6 {
            let eta = 0.5 * (a.eta + b.eta);
            let q_star = recovery_at(p, mode, eta, resolution)?;
            points.insert(k + 1, SweepPoint { eta, q_star });
        } else {
            k += 1;
        }
    }

    let critical_eta = match points.windows(2).find(|w| w[0].q_star.is_some() && w[1].q_star.is_none()) {
        None => None,
        Some(w) => {
            let (mut lo, mut hi) = (w[0].eta, w[1].eta);
            while hi - lo > 1e-10 {
                let mid = 0.5 * (lo + hi);
                if recovery_at(p, mode, mid, resolution)?.is_some() {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            Some(hi)
        }
    };
    Ok(NoiseSweep {
        mode,
        points,
        critical_eta,
    })
}
