//! Mode dispatch: turns a materialized config into an output table.

use cldyn_core::analysis::{
    basin_map_2d, find_fixed_points_1d, find_fixed_points_2d, noise_sweep, recovery_state, BasinLabel, BasinOptions,
    FixedPoint,
};
use cldyn_core::ode::{
    integrate, rhs_quadratic_1d, rhs_quadratic_2d, rhs_quadratic_noise, Domain, NoiseMode, Trajectory,
};
use cldyn_core::pde::{run_pde, PdeConfig};
use cldyn_core::sgd::{ensemble_stats, run_ensemble, Init, Sampler, TrainConfig, TrajectoryRecord};
use cldyn_core::{Execution, MeanField};

use crate::config::{ConfigError, ExperimentConfig, InitKind, Mode, NoiseSpec, SamplerKind};
use crate::output::{Cell, Table};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] cldyn_core::Error),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl RunError {
    /// 1 for bad input or I/O, 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Core(e) if e.is_numerical() => 2,
            _ => 1,
        }
    }
}

type Result<T> = std::result::Result<T, RunError>;

/// Output of one run: the main table, summary lines for the header and any
/// side tables with their destination.
#[derive(Debug, Default)]
pub struct RunOutput {
    pub table: Table,
    pub summary: Vec<String>,
    pub extra: Vec<(String, Table)>,
}

pub fn run(cfg: &ExperimentConfig, exec: Execution) -> Result<RunOutput> {
    match cfg.mode() {
        Mode::Simulate => simulate(cfg, exec),
        Mode::Ode => ode(cfg),
        Mode::Pde => pde(cfg, exec),
        Mode::FixedPoints => fixed_points(cfg),
        Mode::Basins => basins(cfg, exec),
        Mode::NoiseSweep => sweep(cfg, exec),
        Mode::Compare => compare(cfg, exec),
    }
}

fn indexed(prefix: &str, d1: usize) -> Vec<String> {
    if d1 == 1 {
        vec![prefix.to_string()]
    } else {
        (1..=d1).map(|i| format!("{prefix}_{i}")).collect()
    }
}

type QRhs = Box<dyn Fn(&[f64]) -> cldyn_core::Result<Vec<f64>> + Sync>;

/// `dQ/dt` as a function of the squared overlaps.
fn q_space_rhs(cfg: &ExperimentConfig) -> Result<QRhs> {
    if cfg.use_closed_form() {
        let p = cfg.quadratic_params();
        let noise = match cfg.noise {
            NoiseSpec::Independent { .. } => Some(NoiseMode::Independent),
            NoiseSpec::Anticorrelated { .. } => Some(NoiseMode::AntiCorrelated),
            _ => None,
        };
        return Ok(match (cfg.d1(), noise) {
            (1, Some(mode)) => Box::new(move |x| Ok(vec![rhs_quadratic_noise(x[0], &p, mode)?])),
            (1, None) => Box::new(move |x| Ok(vec![rhs_quadratic_1d(x[0], &p)?])),
            _ => Box::new(move |x| Ok(rhs_quadratic_2d(x[0], x[1], &p)?.to_vec())),
        });
    }
    let mf = MeanField::new(cfg.mean_field_params()?)?;
    Ok(Box::new(move |x| {
        let q: Vec<f64> = x.iter().map(|v| v.max(0.0).sqrt()).collect();
        let dq = mf.rhs(&q)?;
        Ok(q.iter().zip(dq).map(|(qi, d)| 2.0 * qi * d).collect())
    }))
}

fn q_domain(d1: usize) -> Domain {
    if d1 == 1 {
        Domain::UnitInterval
    } else {
        Domain::Simplex
    }
}

fn solve_ode(cfg: &ExperimentConfig, x0: &[f64]) -> Result<Trajectory> {
    let rhs = q_space_rhs(cfg)?;
    let stride = (cfg.record_every / cfg.dt).round().max(1.0) as usize;
    let traj = integrate(
        |x: &[f64], dx: &mut [f64]| {
            dx.copy_from_slice(&rhs(x)?);
            Ok(())
        },
        x0,
        cfg.t_final,
        cfg.dt,
        q_domain(cfg.d1()),
        stride,
    )?;
    if traj.clamp_events > 0 {
        log::warn!("ODE state was clamped into its domain {} times", traj.clamp_events);
    }
    Ok(traj)
}

fn ode(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let q0 = cfg.q0.clone().expect("materialized");
    let traj = solve_ode(cfg, &q0)?;
    let mut cols = vec!["t".to_string()];
    cols.extend(indexed("Q", cfg.d1()));
    let mut table = Table::new(cols);
    for (t, x) in traj.times.iter().zip(&traj.states) {
        let mut row = vec![Cell::from(*t)];
        row.extend(x.iter().map(|v| Cell::from(*v)));
        table.push(row);
    }
    Ok(RunOutput {
        summary: vec![format!(
            "right-hand side: {}",
            if cfg.use_closed_form() { "closed form" } else { "quadrature" }
        )],
        table,
        ..Default::default()
    })
}

fn train_config(cfg: &ExperimentConfig) -> Result<TrainConfig> {
    let n = cfg.simulate.n;
    let mut tc = TrainConfig::new(n, cfg.hidden_laws()?, cfg.m, cfg.tau, cfg.t_final);
    tc.activation = cfg.activation.to_core();
    tc.noise = cfg.noise.to_core();
    tc.centering = cfg.mean_field_params()?.centering;
    tc.prior = cfg.prior.to_core();
    tc.quad = cfg.mean_field_params()?.quad;
    tc.sampler = match cfg.simulate.sampler {
        SamplerKind::Explicit => Sampler::Explicit,
        SamplerKind::Reduced => Sampler::Reduced,
    };
    tc.record_stride = Some(((cfg.record_every * n as f64).round() as usize).max(1));
    let q0 = cfg.q0.clone().expect("materialized");
    tc.init = match cfg.simulate.init.expect("materialized") {
        InitKind::Random => Init::Random,
        InitKind::Directed => {
            let feature = q0.iter().position(|v| *v != 0.0).unwrap_or(0);
            Init::Directed {
                q0: q0[feature],
                feature,
            }
        }
    };
    tc.validate()?;
    Ok(tc)
}

fn simulate_records(cfg: &ExperimentConfig, exec: Execution) -> Result<Vec<TrajectoryRecord>> {
    let tc = train_config(cfg)?;
    Ok(run_ensemble(&tc, &cfg.seeds, exec)?)
}

fn simulate(cfg: &ExperimentConfig, exec: Execution) -> Result<RunOutput> {
    let records = simulate_records(cfg, exec)?;
    let d1 = cfg.d1();
    let mut cols = vec!["seed".to_string(), "t".to_string()];
    cols.extend(indexed("Q", d1));
    cols.push("r".into());
    let mut table = Table::new(cols);
    for rec in &records {
        for p in &rec.points {
            let mut row = vec![Cell::from(rec.seed), Cell::from(p.t)];
            row.extend(p.q.iter().map(|q| Cell::from(q * q)));
            row.push(p.r.into());
            table.push(row);
        }
    }
    Ok(RunOutput {
        table,
        ..Default::default()
    })
}

fn compare(cfg: &ExperimentConfig, exec: Execution) -> Result<RunOutput> {
    let records = simulate_records(cfg, exec)?;
    let d1 = cfg.d1();
    let stats: Vec<_> = (0..d1).map(|i| ensemble_stats(&records, i)).collect();
    let x0: Vec<f64> = stats.iter().map(|s| s.mean[0]).collect();
    let traj = solve_ode(cfg, &x0)?;
    let times = &stats[0].times;
    if traj.times.len() != times.len() || traj.times.iter().zip(times).any(|(a, b)| (a - b).abs() > 1e-9) {
        return Err(ConfigError::Invalid {
            key: "record_every".into(),
            message: format!(
                "simulation (every {} steps of 1/n) and ODE (every step of dt = {}) record on different grids; make it a multiple of both",
                (cfg.record_every * cfg.simulate.n as f64).round(),
                cfg.dt
            ),
        }
        .into());
    }
    let mut cols = vec!["t".to_string()];
    if d1 == 1 {
        cols.extend(["Q_ode".to_string(), "Q_sim".to_string(), "std_err".to_string()]);
    } else {
        for i in 1..=d1 {
            cols.extend([format!("Q_ode_{i}"), format!("Q_sim_{i}"), format!("std_err_{i}")]);
        }
    }
    let mut table = Table::new(cols);
    let mut worst: f64 = 0.0;
    for (k, t) in times.iter().enumerate() {
        let mut row = vec![Cell::from(*t)];
        for (i, s) in stats.iter().enumerate() {
            let ode = traj.states[k][i];
            row.extend([ode.into(), s.mean[k].into(), s.std_err[k].into()]);
            if s.std_err[k] > 0.0 {
                worst = worst.max((s.mean[k] - ode).abs() / s.std_err[k]);
            }
        }
        table.push(row);
    }
    Ok(RunOutput {
        table,
        summary: vec![format!(
            "{} seeds; worst |Q_sim - Q_ode| = {worst:.3} standard errors",
            cfg.seeds.len()
        )],
        ..Default::default()
    })
}

fn pde(cfg: &ExperimentConfig, exec: Execution) -> Result<RunOutput> {
    let d1 = cfg.d1();
    let mut pc = PdeConfig::new(cfg.mean_field_params()?, cfg.t_final);
    pc.w_max = cfg.pde.w_max;
    pc.n_w = cfg.pde.n_w;
    pc.u_nodes = cfg.pde.u_nodes;
    pc.dt = cfg.pde.dt;
    pc.record_every = cfg.record_every;
    pc.prior = cfg.prior.to_core();
    pc.q0 = Some(cfg.q0.as_ref().expect("materialized").iter().map(|v| v.sqrt()).collect());
    let run = run_pde(&pc, exec)?;
    let mut cols = vec!["t".to_string()];
    cols.extend(indexed("q", d1));
    cols.extend(indexed("Q", d1));
    cols.push("r".into());
    let mut table = Table::new(cols);
    for ((t, q), r) in run.times.iter().zip(&run.q).zip(&run.r) {
        let mut row = vec![Cell::from(*t)];
        row.extend(q.iter().map(|v| Cell::from(*v)));
        row.extend(q.iter().map(|v| Cell::from(v * v)));
        row.push((*r).into());
        table.push(row);
    }
    let mut extra = Vec::new();
    if let Some(path) = &cfg.pde.density_out {
        let mut cols = vec!["u_index".to_string()];
        cols.extend(indexed("u", d1));
        cols.extend(["w".to_string(), "P".to_string()]);
        let mut dens = Table::new(cols);
        let p = &run.density;
        for (j, (u, prof)) in p.u_nodes.iter().zip(&p.values).enumerate() {
            for (w, v) in p.w.iter().zip(prof) {
                let mut row = vec![Cell::from(j)];
                row.extend(u.iter().map(|x| Cell::from(*x)));
                row.extend([Cell::from(*w), Cell::from(*v)]);
                dens.push(row);
            }
        }
        extra.push((path.clone(), dens));
    }
    Ok(RunOutput {
        table,
        summary: vec![format!(
            "dt = {:e}, steps = {}, max mass change per step = {:.3e}, max clipped mass = {:.3e}, boundary mass = {:.3e}",
            run.dt, run.steps, run.max_leakage, run.max_clipped, run.boundary_mass
        )],
        extra,
    })
}

fn fixed_points(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let rhs = q_space_rhs(cfg)?;
    let res = cfg.fixed_points.resolution;
    let points: Vec<FixedPoint> = if cfg.d1() == 1 {
        find_fixed_points_1d(|q| Ok(rhs(&[q])?[0]), res)?
    } else {
        find_fixed_points_2d(|x| Ok([rhs(&x)?[0], rhs(&x)?[1]]), res)?
    };
    let d1 = cfg.d1();
    let mut cols = indexed("Q", d1);
    cols.push("stability".into());
    cols.extend(indexed("eigenvalue", d1));
    cols.push("residual".into());
    let mut table = Table::new(cols);
    for p in &points {
        let mut row: Vec<Cell> = p.location.iter().map(|v| Cell::from(*v)).collect();
        row.push(p.stability.as_str().into());
        row.extend(p.eigenvalues.iter().map(|v| Cell::from(*v)));
        row.push(p.residual.into());
        table.push(row);
    }
    let mut summary = vec![format!("{} fixed points", points.len())];
    if d1 == 1 {
        summary.push(match recovery_state(&points) {
            Some(q) => format!("recovery state Q* = {q:.12}"),
            None => "no stable interior recovery state".into(),
        });
    }
    Ok(RunOutput {
        table,
        summary,
        ..Default::default()
    })
}

fn label_name(l: BasinLabel) -> String {
    match l {
        BasinLabel::Feature(i) => format!("feature{}", i + 1),
        BasinLabel::Origin => "origin".into(),
        BasinLabel::Unresolved => "unresolved".into(),
    }
}

fn basins(cfg: &ExperimentConfig, exec: Execution) -> Result<RunOutput> {
    let rhs = q_space_rhs(cfg)?;
    let b = cfg.basins;
    let opts = BasinOptions {
        dt: b.dt,
        t_max: b.t_max,
        tol: b.tol,
    };
    let map = basin_map_2d(
        |x| {
            let d = rhs(&x)?;
            Ok([d[0], d[1]])
        },
        b.resolution,
        opts,
        exec,
    )?;
    let mut table = Table::new(["Q1_start", "Q2_start", "label", "converged_at", "Q1_end", "Q2_end"]);
    for c in &map.cells {
        table.push(vec![
            c.start[0].into(),
            c.start[1].into(),
            Cell::Text(label_name(c.label)),
            c.converged_at.into(),
            c.end[0].into(),
            c.end[1].into(),
        ]);
    }
    let (a1, a2) = (map.area(BasinLabel::Feature(0)), map.area(BasinLabel::Feature(1)));
    let rel = if a1 < a2 {
        "area_1 < area_2"
    } else if a1 > a2 {
        "area_1 > area_2"
    } else {
        "area_1 = area_2"
    };
    let fps: Vec<String> = map
        .fixed_points
        .iter()
        .map(|p| format!("({:.6}, {:.6}) {}", p.location[0], p.location[1], p.stability.as_str()))
        .collect();
    Ok(RunOutput {
        table,
        summary: vec![
            format!(
                "area_1 = {a1:.6}, area_2 = {a2:.6}, origin = {:.6}, unresolved = {:.6}; {rel}",
                map.area(BasinLabel::Origin),
                map.area(BasinLabel::Unresolved)
            ),
            format!("fixed points: {}", fps.join("; ")),
        ],
        ..Default::default()
    })
}

fn sweep(cfg: &ExperimentConfig, exec: Execution) -> Result<RunOutput> {
    if !(cfg.activation == crate::config::ActivationKind::Quadratic
        && cfg.centering == crate::config::CenteringKind::Zero)
    {
        return Err(ConfigError::Invalid {
            key: "activation".into(),
            message: "the noise sweep uses the quadratic closed form; set activation = \"quadratic\" and centering = \"zero\"".into(),
        }
        .into());
    }
    let mode = cfg.sweep.mode.expect("materialized").to_core();
    let mut p = cfg.quadratic_params();
    p.eta = 0.0;
    let s = noise_sweep(mode, &cfg.sweep.grid(), &p, cfg.sweep.resolution, exec)?;
    let mut table = Table::new(["eta", "Q_star"]);
    for pt in &s.points {
        table.push(vec![pt.eta.into(), pt.q_star.into()]);
    }
    Ok(RunOutput {
        table,
        summary: vec![match s.critical_eta {
            Some(e) => format!("recovery state vanishes at eta = {e:.10}"),
            None => "recovery state persists over the whole grid".into(),
        }],
        ..Default::default()
    })
}
