//! Experiment configuration: TOML or JSON, unknown keys rejected, every
//! default materialized before anything runs.

use std::path::Path;

use cldyn_core::activation::{Activation, Prior};
use cldyn_core::data::Moments;
use cldyn_core::expectations::{Centering, MeanFieldParams, QuadratureSpec};
use cldyn_core::ode::{NoiseMode, QuadraticForm, QuadraticParams};
use cldyn_core::{HiddenDistribution, NoiseModel};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Parse(String),
    #[error("`{key}`: {message}")]
    Invalid { key: String, message: String },
}

fn invalid(key: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Simulate,
    Ode,
    Pde,
    FixedPoints,
    Basins,
    NoiseSweep,
    Compare,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Simulate => "simulate",
            Mode::Ode => "ode",
            Mode::Pde => "pde",
            Mode::FixedPoints => "fixed-points",
            Mode::Basins => "basins",
            Mode::NoiseSweep => "noise-sweep",
            Mode::Compare => "compare",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Jsonl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActivationKind {
    #[default]
    Quadratic,
    Relu,
}

impl ActivationKind {
    pub fn to_core(self) -> Activation {
        match self {
            ActivationKind::Quadratic => Activation::Quadratic,
            ActivationKind::Relu => Activation::Relu,
        }
    }
}

/// One `(m₂, m₄, m₆)` triple or one per feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MomentsSpec {
    One([f64; 3]),
    Many(Vec<[f64; 3]>),
}

impl MomentsSpec {
    fn triples(&self) -> Vec<[f64; 3]> {
        match self {
            MomentsSpec::One(t) => vec![*t],
            MomentsSpec::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum HiddenSpec {
    Gaussian {
        variance: f64,
    },
    /// Either `m2` + `m4` or `amplitude` + `mass`.
    ThreePoint {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        m2: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        m4: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        amplitude: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mass: Option<f64>,
    },
    Discrete {
        values: Vec<f64>,
        probabilities: Vec<f64>,
    },
}

impl HiddenSpec {
    fn to_core(&self, key: &str) -> Result<HiddenDistribution, ConfigError> {
        let law = match self {
            HiddenSpec::Gaussian { variance } => HiddenDistribution::gaussian(*variance),
            HiddenSpec::ThreePoint {
                m2,
                m4,
                amplitude,
                mass,
            } => match (m2, m4, amplitude, mass) {
                (Some(m2), Some(m4), None, None) => HiddenDistribution::three_point_from_moments(*m2, *m4)
                    .map_err(|e| invalid(key, e.to_string()))?,
                (None, None, Some(a), Some(p)) => HiddenDistribution::three_point(*a, *p),
                (None, Some(_), None, None) => {
                    return Err(invalid(format!("{key}.m2"), "missing field for the three-point law (needs m2 and m4)"))
                }
                (Some(_), None, None, None) => {
                    return Err(invalid(format!("{key}.m4"), "missing field for the three-point law (needs m2 and m4)"))
                }
                (None, None, Some(_), None) => {
                    return Err(invalid(format!("{key}.mass"), "missing field for the three-point law (needs amplitude and mass)"))
                }
                (None, None, None, Some(_)) => {
                    return Err(invalid(
                        format!("{key}.amplitude"),
                        "missing field for the three-point law (needs amplitude and mass)",
                    ))
                }
                (None, None, None, None) => {
                    return Err(invalid(
                        format!("{key}.m2"),
                        "missing field for the three-point law (give m2 and m4, or amplitude and mass)",
                    ))
                }
                _ => return Err(invalid(key, "give either m2 and m4, or amplitude and mass, not both")),
            },
            HiddenSpec::Discrete { values, probabilities } => HiddenDistribution::Discrete {
                values: values.clone(),
                probabilities: probabilities.clone(),
            },
        };
        law.validate().map_err(|e| invalid(key, e.to_string()))?;
        Ok(law)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase", deny_unknown_fields)]
pub enum NoiseSpec {
    #[default]
    None,
    Independent {
        eta: f64,
    },
    Anticorrelated {
        eta: f64,
    },
    Correlated {
        eta: f64,
        rho: f64,
    },
}

impl NoiseSpec {
    pub fn to_core(self) -> NoiseModel {
        match self {
            NoiseSpec::None => NoiseModel::None,
            NoiseSpec::Independent { eta } => NoiseModel::Independent { eta },
            NoiseSpec::Anticorrelated { eta } => NoiseModel::AntiCorrelated { eta },
            NoiseSpec::Correlated { eta, rho } => NoiseModel::Correlated { eta, rho },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CenteringKind {
    #[default]
    Zero,
    Population,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum PriorSpec {
    #[default]
    Zero,
    Linear {
        slope: f64,
    },
}

impl PriorSpec {
    pub fn to_core(self) -> Prior {
        match self {
            PriorSpec::Zero => Prior::Zero,
            PriorSpec::Linear { slope } => Prior::Linear { slope },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FormKind {
    #[default]
    Exact,
    DroppedFactor,
}

/// Which right-hand side drives `ode`, `fixed-points`, `basins` and the ODE
/// half of `compare`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RhsKind {
    /// Closed form when available, quadrature otherwise.
    #[default]
    Auto,
    ClosedForm,
    General,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerKind {
    #[default]
    Explicit,
    Reduced,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitKind {
    Random,
    Directed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SweepMode {
    Independent,
    Anticorrelated,
}

impl SweepMode {
    pub fn to_core(self) -> NoiseMode {
        match self {
            SweepMode::Independent => NoiseMode::Independent,
            SweepMode::Anticorrelated => NoiseMode::AntiCorrelated,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadSection {
    pub n_e: usize,
    pub n_gamma: usize,
    pub n_c: usize,
}

impl Default for QuadSection {
    fn default() -> Self {
        let q = QuadratureSpec::default();
        QuadSection {
            n_e: q.n_e,
            n_gamma: q.n_gamma,
            n_c: q.n_c,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateSection {
    pub n: usize,
    pub sampler: SamplerKind,
    /// Filled from `q0`: directed when given, random otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init: Option<InitKind>,
}

impl Default for SimulateSection {
    fn default() -> Self {
        SimulateSection {
            n: 4000,
            sampler: SamplerKind::Explicit,
            init: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PdeSection {
    pub w_max: f64,
    pub n_w: usize,
    pub u_nodes: usize,
    /// Automatic from the stability bound when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    /// Where to write the final density, if anywhere.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density_out: Option<String>,
}

impl Default for PdeSection {
    fn default() -> Self {
        PdeSection {
            w_max: 6.0,
            n_w: 512,
            u_nodes: 15,
            dt: None,
            density_out: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FixedPointSection {
    pub resolution: usize,
}

impl Default for FixedPointSection {
    fn default() -> Self {
        FixedPointSection { resolution: 10_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BasinSection {
    pub resolution: usize,
    pub t_max: f64,
    pub dt: f64,
    pub tol: f64,
}

impl Default for BasinSection {
    fn default() -> Self {
        BasinSection {
            resolution: 100,
            t_max: 200.0,
            dt: 1e-2,
            tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<SweepMode>,
    /// Explicit grid; otherwise `count` points on `[0, eta_max]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub etas: Option<Vec<f64>>,
    pub eta_max: f64,
    pub count: usize,
    pub resolution: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            mode: None,
            etas: None,
            eta_max: 1.0,
            count: 201,
            resolution: 10_000,
        }
    }
}

impl SweepSection {
    pub fn grid(&self) -> Vec<f64> {
        match &self.etas {
            Some(e) => e.clone(),
            None if self.count < 2 => vec![0.0],
            None => (0..self.count)
                .map(|k| self.eta_max * k as f64 / (self.count - 1) as f64)
                .collect(),
        }
    }
}

fn default_t() -> f64 {
    20.0
}

fn default_dt() -> f64 {
    1e-3
}

fn default_record_every() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    #[serde(default)]
    pub activation: ActivationKind,
    /// Moment triples; filled from `hidden` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub moments: Option<MomentsSpec>,
    /// Feature laws; filled from `moments` (three-point) when absent.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub hidden: Vec<HiddenSpec>,
    pub tau: f64,
    pub m: usize,
    #[serde(rename = "T", default = "default_t")]
    pub t_final: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    /// Time between output rows.
    #[serde(default = "default_record_every")]
    pub record_every: f64,
    /// Initial squared overlaps, one per feature.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q0: Option<Vec<f64>>,
    #[serde(default)]
    pub noise: NoiseSpec,
    #[serde(default)]
    pub centering: CenteringKind,
    #[serde(default)]
    pub prior: PriorSpec,
    #[serde(default)]
    pub form: FormKind,
    #[serde(default)]
    pub rhs: RhsKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub seeds: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    #[serde(default)]
    pub quadrature: QuadSection,
    #[serde(default)]
    pub simulate: SimulateSection,
    #[serde(default)]
    pub pde: PdeSection,
    #[serde(default)]
    pub fixed_points: FixedPointSection,
    #[serde(default)]
    pub basins: BasinSection,
    #[serde(default)]
    pub sweep: SweepSection,
}

/// Flags that override or complete the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub mode: Option<Mode>,
    pub seeds: Vec<u64>,
    pub out: Option<String>,
    pub format: Option<Format>,
    pub sweep_mode: Option<SweepMode>,
}

pub fn parse_str(text: &str, json: bool) -> Result<ExperimentConfig, ConfigError> {
    if json {
        serde_json::from_str(text).map_err(|e| ConfigError::Parse(format!("invalid JSON config: {e}")))
    } else {
        toml::from_str(text).map_err(|e| ConfigError::Parse(format!("invalid TOML config: {e}")))
    }
}

/// Reads `path` (JSON if it ends in `.json`, TOML otherwise), applies the
/// overrides and materializes every default.
pub fn parse_config(path: &Path, overrides: &Overrides) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let mut cfg = parse_str(&text, json)?;
    cfg.apply(overrides)?;
    cfg.materialize()?;
    Ok(cfg)
}

fn check(ok: bool, key: &str, message: impl FnOnce() -> String) -> Result<(), ConfigError> {
    if ok {
        Ok(())
    } else {
        Err(invalid(key, message()))
    }
}

impl ExperimentConfig {
    pub fn apply(&mut self, o: &Overrides) -> Result<(), ConfigError> {
        if let Some(mode) = o.mode {
            if let Some(file_mode) = self.mode {
                check(file_mode == mode, "mode", || {
                    format!("config says `{}` but the command is `{}`", file_mode.as_str(), mode.as_str())
                })?;
            }
            self.mode = Some(mode);
        }
        if !o.seeds.is_empty() {
            self.seeds = o.seeds.clone();
        }
        if o.out.is_some() {
            self.out = o.out.clone();
        }
        if o.format.is_some() {
            self.format = o.format;
        }
        if o.sweep_mode.is_some() {
            self.sweep.mode = o.sweep_mode;
        }
        Ok(())
    }

    pub fn mode(&self) -> Mode {
        self.mode.expect("materialized config has a mode")
    }

    pub fn d1(&self) -> usize {
        self.hidden.len()
    }

    /// Fills every optional field and validates ranges.
    pub fn materialize(&mut self) -> Result<(), ConfigError> {
        let mode = self.mode.ok_or_else(|| invalid("mode", "no mode given (use a subcommand or `mode = ...`)"))?;
        match (&self.moments, self.hidden.is_empty()) {
            (None, true) => return Err(invalid("moments", "give `moments` or `hidden`")),
            (Some(m), true) => {
                self.hidden = m
                    .triples()
                    .iter()
                    .enumerate()
                    .map(|(i, t)| three_point_spec(*t, &format!("moments[{i}]")))
                    .collect::<Result<_, _>>()?;
            }
            (None, false) => {}
            (Some(_), false) => {
                // both given: they must agree
                let from_hidden = self.hidden_moments()?;
                let given = self.moments.as_ref().expect("checked").triples();
                check(given.len() == from_hidden.len(), "moments", || {
                    format!("{} triples for {} hidden laws", given.len(), from_hidden.len())
                })?;
                for (i, (g, h)) in given.iter().zip(&from_hidden).enumerate() {
                    let close = g.iter().zip(h).all(|(a, b)| (a - b).abs() <= 1e-9 * b.abs().max(1.0));
                    check(close, &format!("moments[{i}]"), || {
                        format!("{g:?} disagrees with hidden[{i}], which has moments {h:?}")
                    })?;
                }
            }
        }
        let laws = self.hidden_moments()?;
        self.moments = Some(MomentsSpec::Many(laws));
        let d1 = self.d1();

        check(self.tau.is_finite() && self.tau >= 0.0, "tau", || {
            format!("must be in [0, inf), got {}", self.tau)
        })?;
        check(self.m >= 1, "m", || "must be >= 1".into())?;
        check(self.t_final.is_finite() && self.t_final > 0.0, "T", || {
            format!("must be in (0, inf), got {}", self.t_final)
        })?;
        check(self.dt.is_finite() && self.dt > 0.0, "dt", || {
            format!("must be in (0, inf), got {}", self.dt)
        })?;
        check(self.record_every.is_finite() && self.record_every > 0.0, "record_every", || {
            format!("must be in (0, inf), got {}", self.record_every)
        })?;
        match self.noise {
            NoiseSpec::None => {}
            NoiseSpec::Independent { eta } | NoiseSpec::Anticorrelated { eta } | NoiseSpec::Correlated { eta, .. } => {
                check(eta.is_finite() && eta >= 0.0, "noise.eta", || format!("must be in [0, inf), got {eta}"))?
            }
        }
        if let NoiseSpec::Correlated { rho, .. } = self.noise {
            check((-1.0..=1.0).contains(&rho), "noise.rho", || format!("must be in [-1, 1], got {rho}"))?;
        }
        let q = self.quadrature;
        QuadratureSpec {
            n_e: q.n_e,
            n_gamma: q.n_gamma,
            n_c: q.n_c,
        }
        .validate()
        .map_err(|e| invalid("quadrature", e.to_string()))?;

        let user_q0 = self.q0.is_some();
        let q0 = self.q0.get_or_insert_with(|| vec![if d1 == 1 { 0.3 } else { 0.2 }; d1]);
        check(q0.len() == d1, "q0", || format!("need {d1} entries (one per feature), got {}", q0.len()))?;
        check(q0.iter().all(|v| (0.0..=1.0).contains(v)), "q0", || {
            format!("entries must be in [0, 1], got {q0:?}")
        })?;
        check(q0.iter().sum::<f64>() <= 1.0, "q0", || format!("entries must sum to at most 1, got {q0:?}"))?;

        if self.seeds.is_empty() {
            self.seeds = vec![0];
        }
        self.format.get_or_insert(Format::Csv);

        let sim = &mut self.simulate;
        check(sim.n >= 2, "simulate.n", || format!("must be >= 2, got {}", sim.n))?;
        check(sim.n > d1, "simulate.n", || format!("must exceed the number of features {d1}"))?;
        if sim.init.is_none() {
            sim.init = Some(if user_q0 { InitKind::Directed } else { InitKind::Random });
        }
        if matches!(mode, Mode::Simulate | Mode::Compare) && sim.init == Some(InitKind::Directed) {
            let nonzero = q0.iter().filter(|v| **v != 0.0).count();
            check(nonzero <= 1, "q0", || {
                "a directed start sets one feature's overlap; give at most one non-zero entry".into()
            })?;
        }

        let p = &self.pde;
        check(p.w_max.is_finite() && p.w_max > 0.0, "pde.w_max", || format!("must be in (0, inf), got {}", p.w_max))?;
        check(p.n_w >= 3, "pde.n_w", || format!("must be >= 3, got {}", p.n_w))?;
        check(p.u_nodes >= 1, "pde.u_nodes", || "must be >= 1".into())?;
        if let Some(dt) = p.dt {
            check(dt.is_finite() && dt > 0.0, "pde.dt", || format!("must be in (0, inf), got {dt}"))?;
        }
        if mode == Mode::Pde {
            check(q0.iter().sum::<f64>() < 1.0, "q0", || "the PDE needs a spread-out start: entries must sum to < 1".into())?;
        }

        check(self.fixed_points.resolution >= 2, "fixed_points.resolution", || "must be >= 2".into())?;
        let b = self.basins;
        check(b.resolution >= 1, "basins.resolution", || "must be >= 1".into())?;
        check(b.t_max > 0.0 && b.dt > 0.0 && b.tol > 0.0, "basins", || {
            "t_max, dt and tol must be in (0, inf)".into()
        })?;
        let s = &self.sweep;
        check(s.resolution >= 2, "sweep.resolution", || "must be >= 2".into())?;
        check(s.eta_max.is_finite() && s.eta_max >= 0.0, "sweep.eta_max", || {
            format!("must be in [0, inf), got {}", s.eta_max)
        })?;
        if let Some(etas) = &s.etas {
            check(!etas.is_empty() && etas.iter().all(|e| e.is_finite() && *e >= 0.0), "sweep.etas", || {
                "need a non-empty list of values in [0, inf)".into()
            })?;
        }

        match mode {
            Mode::Basins => check(d1 == 2, "moments", || format!("basins need exactly two features, got {d1}"))?,
            Mode::FixedPoints => check(d1 <= 2, "moments", || format!("fixed points support one or two features, got {d1}"))?,
            Mode::NoiseSweep => {
                check(d1 == 1, "moments", || format!("the noise sweep needs exactly one feature, got {d1}"))?;
                check(self.sweep.mode.is_some(), "sweep.mode", || {
                    "choose independent or anticorrelated (`--mode` or `sweep.mode`)".into()
                })?;
            }
            _ => {}
        }
        if matches!(mode, Mode::Ode | Mode::FixedPoints | Mode::Basins | Mode::Compare | Mode::NoiseSweep) {
            check(self.prior == PriorSpec::Zero, "prior", || {
                "the order-parameter ODE does not close with a prior; use simulate or pde".into()
            })?;
        }
        if mode != Mode::NoiseSweep && self.rhs == RhsKind::ClosedForm {
            check(self.closed_form_available(), "rhs", || {
                "no closed form for this activation/noise/centering combination; use `general`".into()
            })?;
        }
        Ok(())
    }

    fn hidden_moments(&self) -> Result<Vec<[f64; 3]>, ConfigError> {
        self.hidden
            .iter()
            .enumerate()
            .map(|(i, h)| {
                let m = h.to_core(&format!("hidden[{i}]"))?.moments();
                Ok([m.m2, m.m4, m.m6])
            })
            .collect()
    }

    pub fn hidden_laws(&self) -> Result<Vec<HiddenDistribution>, ConfigError> {
        self.hidden
            .iter()
            .enumerate()
            .map(|(i, h)| h.to_core(&format!("hidden[{i}]")))
            .collect()
    }

    pub fn moment_triples(&self) -> Vec<Moments> {
        self.moments
            .as_ref()
            .map(|m| m.triples().iter().map(|t| Moments::new(t[0], t[1], t[2])).collect())
            .unwrap_or_default()
    }

    /// Whether the quadratic closed forms describe this configuration.
    pub fn closed_form_available(&self) -> bool {
        let d1 = self.d1();
        self.activation == ActivationKind::Quadratic
            && self.centering == CenteringKind::Zero
            && self.prior == PriorSpec::Zero
            && match self.noise {
                NoiseSpec::None => d1 <= 2,
                NoiseSpec::Independent { .. } | NoiseSpec::Anticorrelated { .. } => d1 == 1,
                NoiseSpec::Correlated { .. } => false,
            }
    }

    pub fn use_closed_form(&self) -> bool {
        match self.rhs {
            RhsKind::Auto => self.closed_form_available(),
            RhsKind::ClosedForm => true,
            RhsKind::General => false,
        }
    }

    pub fn quadratic_params(&self) -> QuadraticParams {
        let mut p = QuadraticParams::new(self.moment_triples(), self.tau, self.m as f64);
        p.form = match self.form {
            FormKind::Exact => QuadraticForm::Exact,
            FormKind::DroppedFactor => QuadraticForm::DroppedFactor,
        };
        p.eta = self.noise.to_core().eta();
        p
    }

    pub fn mean_field_params(&self) -> Result<MeanFieldParams, ConfigError> {
        Ok(
            MeanFieldParams::new(self.activation.to_core(), self.hidden_laws()?, self.tau, self.m)
                .with_noise(self.noise.to_core())
                .with_centering(match self.centering {
                    CenteringKind::Zero => Centering::Zero,
                    CenteringKind::Population => Centering::Population,
                })
                .with_quadrature(QuadratureSpec {
                    n_e: self.quadrature.n_e,
                    n_gamma: self.quadrature.n_gamma,
                    n_c: self.quadrature.n_c,
                }),
        )
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

/// Symmetric three-point law with the given `(m₂, m₄)`; `m₆` must match.
/// Moments-only input: a Gaussian when the triple is Gaussian, otherwise the
/// symmetric three-point law with the same m2 and m4.
fn three_point_spec(t: [f64; 3], key: &str) -> Result<HiddenSpec, ConfigError> {
    let [m2, m4, m6] = t;
    let rel = |a: f64, b: f64| (a - b).abs() <= 1e-9 * b.abs().max(1.0);
    if m2 > 0.0 && rel(m4, 3.0 * m2 * m2) && rel(m6, 15.0 * m2 * m2 * m2) {
        return Ok(HiddenSpec::Gaussian { variance: m2 });
    }
    let law = HiddenDistribution::three_point_from_moments(t[0], t[1]).map_err(|e| invalid(key, e.to_string()))?;
    let m6 = law.moments().m6;
    check((m6 - t[2]).abs() <= 1e-9 * m6.abs().max(1.0), key, || {
        format!(
            "m6 = {} is not reachable by a symmetric three-point law with m2 = {}, m4 = {} (it would be {m6}); give `hidden` explicitly",
            t[2], t[0], t[1]
        )
    })?;
    Ok(HiddenSpec::ThreePoint {
        m2: Some(t[0]),
        m4: Some(t[1]),
        amplitude: None,
        mass: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ode_overrides() -> Overrides {
        Overrides {
            mode: Some(Mode::Ode),
            ..Default::default()
        }
    }

    fn load(text: &str) -> Result<ExperimentConfig, ConfigError> {
        let mut cfg = parse_str(text, false)?;
        cfg.apply(&ode_overrides())?;
        cfg.materialize()?;
        Ok(cfg)
    }

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = load("activation = \"quadratic\"\nmoments = [1.1, 6.05, 33.275]\ntau = 0.1\nm = 10\n").unwrap();
        assert_eq!(cfg.dt, 1e-3);
        assert_eq!(cfg.t_final, 20.0);
        assert_eq!(cfg.q0, Some(vec![0.3]));
        assert_eq!(cfg.seeds, vec![0]);
        assert_eq!(cfg.format, Some(Format::Csv));
        assert_eq!(cfg.d1(), 1);
        assert!(cfg.use_closed_form());
        let json = cfg.to_json();
        for key in ["\"dt\":0.001", "\"T\":20.0", "\"record_every\"", "\"basins\"", "\"sweep\"", "\"n_e\""] {
            assert!(json.contains(key), "{key} missing from {json}");
        }
    }

    #[test]
    fn round_trip_is_identity() {
        let cfg = load(
            "moments = [[1.2, 4.32, 25.92], [1.1, 6.05, 33.275]]\ntau = 0.1\nm = 10\nseeds = [3, 4]\n[noise]\nmode = \"none\"\n",
        )
        .unwrap();
        let again = parse_str(&cfg.to_toml(), false).unwrap();
        assert_eq!(again, cfg);
        let again = parse_str(&cfg.to_json(), true).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn hidden_laws_fill_moments() {
        let cfg = load(
            "tau = 0.1\nm = 10\n[[hidden]]\nkind = \"gaussian\"\nvariance = 1.2\n[[hidden]]\nkind = \"three-point\"\namplitude = 5.5\nmass = 0.2\n",
        )
        .unwrap();
        let m = cfg.moment_triples();
        assert!((m[0].m6 - 25.92).abs() < 1e-12);
        assert!((m[1].m4 - 6.05).abs() < 1e-12);
    }

    #[test]
    fn missing_three_point_field_is_named() {
        let err = load("tau = 0.1\nm = 10\n[[hidden]]\nkind = \"three-point\"\nm4 = 6.05\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("hidden[0].m2"), "{msg}");
        assert!(msg.contains("missing"), "{msg}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = load("moments = [1.1, 6.05, 33.275]\ntau = 0.1\nm = 10\nlearning_rate = 3\n").unwrap_err();
        assert!(err.to_string().contains("learning_rate"), "{err}");
        let err = load("moments = [1.1, 6.05, 33.275]\ntau = 0.1\nm = 10\n[basins]\nresolutoin = 3\n").unwrap_err();
        assert!(err.to_string().contains("resolutoin"), "{err}");
        let err = load("tau = 0.1\nm = 10\n[[hidden]]\nkind = \"gaussian\"\nvariance = 1\nmean = 2\n").unwrap_err();
        assert!(err.to_string().contains("mean"), "{err}");
    }

    #[test]
    fn partial_sections_keep_defaults() {
        let cfg = load("moments = [1.1, 6.05, 33.275]\ntau = 0.1\nm = 10\n[basins]\nresolution = 40\n[sweep]\ncount = 11\n").unwrap();
        assert_eq!(cfg.basins.resolution, 40);
        assert_eq!(cfg.basins.t_max, 200.0);
        assert_eq!(cfg.sweep.count, 11);
        assert_eq!(cfg.sweep.resolution, 10_000);
    }

    #[test]
    fn ranges_are_reported() {
        let err = load("moments = [1.1, 6.05, 33.275]\ntau = -0.1\nm = 10\n").unwrap_err();
        assert!(err.to_string().contains("`tau`") && err.to_string().contains("[0, inf)"), "{err}");
        let err = load("moments = [1.1, 6.05, 33.275]\ntau = 0.1\nm = 10\nq0 = [1.5]\n").unwrap_err();
        assert!(err.to_string().contains("`q0`"), "{err}");
        let err = load("moments = [1.1, 6.05, 30.0]\ntau = 0.1\nm = 10\n").unwrap_err();
        assert!(err.to_string().contains("m6"), "{err}");
        let err = load("moments = [1.1, 6.05, 33.275]\ntau = 0.1\nm = 10\n[noise]\nmode = \"correlated\"\neta = 0.1\nrho = 2.0\n")
            .unwrap_err();
        assert!(err.to_string().contains("noise.rho"), "{err}");
    }

    #[test]
    fn mode_conflicts_and_requirements() {
        let mut cfg = parse_str("mode = \"pde\"\nmoments = [1.1, 6.05, 33.275]\ntau = 0.1\nm = 10\n", false).unwrap();
        assert!(cfg.apply(&ode_overrides()).is_err());
        let mut cfg = parse_str("moments = [1.1, 6.05, 33.275]\ntau = 0.1\nm = 10\n", false).unwrap();
        cfg.apply(&Overrides {
            mode: Some(Mode::Basins),
            ..Default::default()
        })
        .unwrap();
        assert!(cfg.materialize().unwrap_err().to_string().contains("two features"));
        let mut cfg = parse_str("moments = [1.1, 6.05, 33.275]\ntau = 0.1\nm = 10\n", false).unwrap();
        cfg.apply(&Overrides {
            mode: Some(Mode::NoiseSweep),
            ..Default::default()
        })
        .unwrap();
        assert!(cfg.materialize().unwrap_err().to_string().contains("sweep.mode"));
    }

    #[test]
    fn closed_form_availability() {
        let cfg = load("activation = \"relu\"\nmoments = [1.1, 6.05, 33.275]\ntau = 0.1\nm = 10\n").unwrap();
        assert!(!cfg.use_closed_form());
        assert!(load("activation = \"relu\"\nrhs = \"closed-form\"\nmoments = [1.1, 6.05, 33.275]\ntau = 0.1\nm = 10\n").is_err());
    }

    #[test]
    fn json_configs_parse() {
        let mut cfg = parse_str(r#"{"moments": [1.0, 5.0, 25.0], "tau": 0.1, "m": 10, "noise": {"mode": "anticorrelated", "eta": 0.2}}"#, true)
            .unwrap();
        cfg.apply(&ode_overrides()).unwrap();
        cfg.materialize().unwrap();
        assert_eq!(cfg.noise, NoiseSpec::Anticorrelated { eta: 0.2 });
    }

    #[test]
    fn sweep_grid() {
        let s = SweepSection {
            count: 5,
            eta_max: 0.4,
            ..Default::default()
        };
        assert_eq!(s.grid(), vec![0.0, 0.1, 0.2, 0.30000000000000004, 0.4]);
    }
}
