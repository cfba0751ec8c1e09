use std::path::PathBuf;
use std::sync::Arc;

use serde::Deserialize;
use serde_json::Value;

use crate::coefficients::{CoefficientLaw, CoefficientModel};
use crate::error::{Error, Result};
use crate::mesh::Side;
use crate::oracles::{MmsProblem, MMS_GAMMA1};
use crate::solver::{ConstantsSource, ProblemData, ReRaConstants, SolverConfig};

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mesh: MeshConfig,
    pub coefficients: CoefficientsConfig,
    #[serde(default)]
    pub physics: PhysicsConfig,
    pub data: DataKind,
    pub time: TimeConfig,
    #[serde(default)]
    pub solver: SolverSection,
    pub output: OutputConfig,
    #[serde(default)]
    pub study: StudyConfig,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    pub nx: usize,
    pub ny: usize,
    pub gamma1_sides: Vec<Side>,
    #[serde(default)]
    pub refinements: usize,
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LawConfig {
    Constant { value: f64 },
    ClampedAffine { intercept: f64, slope: f64, lower: f64, upper: f64 },
    Tanh { low: f64, high: f64 },
}

impl LawConfig {
    fn law(self) -> CoefficientLaw<f64> {
        match self {
            LawConfig::Constant { value } => CoefficientLaw::Constant { value },
            LawConfig::ClampedAffine { intercept, slope, lower, upper } => {
                CoefficientLaw::ClampedAffine { intercept, slope, lower, upper }
            }
            LawConfig::Tanh { low, high } => CoefficientLaw::TanhBlend { low, high },
        }
    }
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsConfig {
    pub gamma: [f64; 2],
    pub k: [f64; 2],
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LipschitzConfig {
    pub l1: f64,
    pub l2: f64,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientsConfig {
    pub viscosity: LawConfig,
    pub conductivity: LawConfig,
    pub bounds: Option<BoundsConfig>,
    pub lipschitz: Option<LipschitzConfig>,
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum GravityConfig {
    Vector([f64; 2]),
    Named(GravityName),
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum GravityName {
    ConstantDown,
}

impl GravityConfig {
    pub fn vector(self) -> [f64; 2] {
        match self {
            GravityConfig::Vector(g) => g,
            GravityConfig::Named(GravityName::ConstantDown) => [0.0, -1.0],
        }
    }
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsConfig {
    #[serde(default)]
    pub beta: f64,
    #[serde(default = "default_gravity")]
    pub gravity: GravityConfig,
    /// `+1` puts the buoyancy term on the left of the momentum equation.
    #[serde(default = "one")]
    pub buoyancy_sign: f64,
}

impl Default for PhysicsConfig {
    fn default() -> Self {
        PhysicsConfig { beta: 0.0, gravity: default_gravity(), buoyancy_sign: 1.0 }
    }
}

fn default_gravity() -> GravityConfig {
    GravityConfig::Named(GravityName::ConstantDown)
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum DataKind {
    Mms,
    Zero,
    CavityConvection,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub dt: f64,
    pub t_end: f64,
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum ConstantsConfig {
    Values { c1: f64, c1_prime: f64, d: f64 },
    Named(ConstantsName),
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum ConstantsName {
    Estimate,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default = "default_picard_max")]
    pub picard_max: usize,
    #[serde(default = "default_picard_tol")]
    pub picard_tol: f64,
    #[serde(default = "yes")]
    pub picard: bool,
    pub constants: Option<ConstantsConfig>,
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection { picard_max: default_picard_max(), picard_tol: default_picard_tol(), picard: true, constants: None }
    }
}

fn default_picard_max() -> usize {
    25
}

fn default_picard_tol() -> f64 {
    1e-10
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: PathBuf,
    #[serde(default)]
    pub vtk_every: usize,
    #[serde(default = "default_csv_name")]
    pub csv_name: String,
}

fn default_csv_name() -> String {
    "diagnostics.csv".into()
}

/// Settings of the verification subcommands.
#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    #[serde(default = "default_levels")]
    pub levels: usize,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_trials")]
    pub trials: usize,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig { levels: default_levels(), delta: default_delta(), trials: default_trials() }
    }
}

fn default_levels() -> usize {
    3
}

fn default_delta() -> f64 {
    1e-3
}

fn default_trials() -> usize {
    100
}

/// Allowed keys of every object in the schema, by path.
const SCHEMA: &[(&str, &[&str])] = &[
    ("", &["mesh", "coefficients", "physics", "data", "time", "solver", "output", "study"]),
    ("mesh", &["nx", "ny", "gamma1_sides", "refinements"]),
    ("coefficients", &["viscosity", "conductivity", "bounds", "lipschitz"]),
    ("coefficients.bounds", &["gamma", "k"]),
    ("coefficients.lipschitz", &["l1", "l2"]),
    ("physics", &["beta", "gravity", "buoyancy_sign"]),
    ("time", &["dt", "t_end"]),
    ("solver", &["picard_max", "picard_tol", "picard", "constants"]),
    ("solver.constants", &["c1", "c1_prime", "d"]),
    ("output", &["directory", "vtk_every", "csv_name"]),
    ("study", &["levels", "delta", "trials"]),
];

const REQUIRED: &[(&str, &[&str])] = &[
    ("", &["mesh", "coefficients", "data", "time", "output"]),
    ("mesh", &["nx", "ny", "gamma1_sides"]),
    ("coefficients", &["viscosity", "conductivity"]),
    ("time", &["dt", "t_end"]),
    ("output", &["directory"]),
];

const LAW_KEYS: &[(&str, &[&str])] = &[
    ("constant", &["kind", "value"]),
    ("clamped_affine", &["kind", "intercept", "slope", "lower", "upper"]),
    ("tanh", &["kind", "low", "high"]),
];

fn walk(value: &Value, path: &str, problems: &mut Vec<String>) {
    let Value::Object(map) = value else {
        return;
    };
    let shown = if path.is_empty() { "top level" } else { path };
    if path == "coefficients.viscosity" || path == "coefficients.conductivity" {
        match map.get("kind").and_then(Value::as_str) {
            Some(kind) => match LAW_KEYS.iter().find(|(k, _)| *k == kind) {
                Some((_, keys)) => {
                    for key in map.keys().filter(|k| !keys.contains(&k.as_str())) {
                        problems.push(format!("{path}: unknown key \"{key}\" for kind \"{kind}\""));
                    }
                    for key in keys.iter().filter(|k| !map.contains_key(**k)) {
                        problems.push(format!("{path}: missing key \"{key}\""));
                    }
                }
                None => problems.push(format!(
                    "{path}.kind: \"{kind}\" is not one of \"constant\", \"clamped_affine\", \"tanh\""
                )),
            },
            None => problems.push(format!("{path}: missing string key \"kind\"")),
        }
        return;
    }
    if let Some((_, keys)) = SCHEMA.iter().find(|(p, _)| *p == path) {
        for key in map.keys().filter(|k| !keys.contains(&k.as_str())) {
            problems.push(format!("{shown}: unknown key \"{key}\""));
        }
    }
    if let Some((_, keys)) = REQUIRED.iter().find(|(p, _)| *p == path) {
        for key in keys.iter().filter(|k| !map.contains_key(**k)) {
            problems.push(format!("{shown}: missing key \"{key}\""));
        }
    }
    for (key, child) in map {
        let child_path = if path.is_empty() { key.clone() } else { format!("{path}.{key}") };
        walk(child, &child_path, problems);
    }
}

fn finite_positive(problems: &mut Vec<String>, name: &str, v: f64) {
    if !(v.is_finite() && v > 0.0) {
        problems.push(format!("{name} must be finite and positive, got {v}"));
    }
}

impl RunConfig {
    /// Parses and validates a configuration, reporting every violation.
    pub fn parse(text: &str) -> Result<Self> {
        let value: Value =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid JSON: {e}")))?;
        if !value.is_object() {
            return Err(Error::Config("configuration must be a JSON object".into()));
        }
        let mut problems = Vec::new();
        walk(&value, "", &mut problems);
        if !problems.is_empty() {
            return Err(Error::Config(problems.join("; ")));
        }
        let config: RunConfig = serde_json::from_value(value).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let mut p = Vec::new();
        let m = &self.mesh;
        if m.nx == 0 || m.ny == 0 || m.nx > 4096 || m.ny > 4096 {
            p.push(format!("mesh.nx and mesh.ny must lie in 1..=4096, got {} x {}", m.nx, m.ny));
        }
        if m.refinements > 6 {
            p.push(format!("mesh.refinements must be at most 6, got {}", m.refinements));
        }
        for (i, s) in m.gamma1_sides.iter().enumerate() {
            if m.gamma1_sides[..i].contains(s) {
                p.push(format!("mesh.gamma1_sides lists {s:?} twice"));
            }
        }
        if self.data == DataKind::Mms && m.gamma1_sides != MMS_GAMMA1 {
            p.push("data \"mms\" requires mesh.gamma1_sides = [\"left\"]".into());
        }
        if let Err(e) = self.model() {
            p.push(e.to_string());
        }
        let ph = &self.physics;
        if !(ph.beta.is_finite() && ph.beta >= 0.0) {
            p.push(format!("physics.beta must be finite and nonnegative, got {}", ph.beta));
        }
        if !ph.gravity.vector().iter().all(|g| g.is_finite()) {
            p.push("physics.gravity must be finite".into());
        }
        if ph.buoyancy_sign != 1.0 && ph.buoyancy_sign != -1.0 {
            p.push(format!("physics.buoyancy_sign must be 1 or -1, got {}", ph.buoyancy_sign));
        }
        finite_positive(&mut p, "time.dt", self.time.dt);
        finite_positive(&mut p, "time.t_end", self.time.t_end);
        if self.time.dt.is_finite() && self.time.t_end.is_finite() && self.time.dt > self.time.t_end {
            p.push(format!("time.dt = {} exceeds time.t_end = {}", self.time.dt, self.time.t_end));
        }
        if self.time.dt > 0.0 && self.time.t_end / self.time.dt > 1e6 {
            p.push("more than 10^6 time steps requested".into());
        }
        let s = &self.solver;
        if s.picard_max == 0 {
            p.push("solver.picard_max must be at least 1".into());
        }
        finite_positive(&mut p, "solver.picard_tol", s.picard_tol);
        if let Some(ConstantsConfig::Values { c1, c1_prime, d }) = s.constants {
            finite_positive(&mut p, "solver.constants.c1", c1);
            finite_positive(&mut p, "solver.constants.c1_prime", c1_prime);
            finite_positive(&mut p, "solver.constants.d", d);
        }
        if self.output.csv_name.is_empty() || self.output.csv_name.contains(['/', '\\']) {
            p.push(format!("output.csv_name must be a plain file name, got \"{}\"", self.output.csv_name));
        }
        if self.study.levels < 3 {
            p.push(format!("study.levels must be at least 3 for a refinement study, got {}", self.study.levels));
        }
        if self.study.levels > 7 {
            p.push(format!("study.levels must be at most 7, got {}", self.study.levels));
        }
        if !(self.study.delta.is_finite() && self.study.delta >= 0.0) {
            p.push(format!("study.delta must be finite and nonnegative, got {}", self.study.delta));
        }
        if p.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(p.join("; ")))
        }
    }

    pub fn model(&self) -> Result<CoefficientModel<f64>> {
        let c = &self.coefficients;
        let mut model = CoefficientModel::new(c.viscosity.law(), c.conductivity.law())?;
        if c.bounds.is_some() || c.lipschitz.is_some() {
            let b = c.bounds.unwrap_or(BoundsConfig {
                gamma: [model.gamma0, model.gamma1],
                k: [model.k0, model.k1],
            });
            let l = c.lipschitz.unwrap_or(LipschitzConfig { l1: model.l1, l2: model.l2 });
            model = model.with_declared((b.gamma[0], b.gamma[1]), (b.k[0], b.k[1]), l.l1, l.l2)?;
        }
        Ok(model)
    }

    pub fn gravity(&self) -> [f64; 2] {
        self.physics.gravity.vector()
    }

    /// Problem data of the configured built-in case.
    pub fn problem(&self) -> Result<ProblemData<f64>> {
        let model = self.model()?;
        let g = self.gravity();
        let mut data = match self.data {
            DataKind::Mms => {
                let mut mms = MmsProblem::new(&model, self.physics.beta, g);
                mms.buoyancy_sign = self.physics.buoyancy_sign;
                mms.problem_data(&model)
            }
            DataKind::Zero => ProblemData::zero(model),
            DataKind::CavityConvection => {
                let mut d = ProblemData::zero(model);
                d.v2 = Arc::new(|p, _| if p[0] >= 1.0 - 1e-12 { 1.0 } else { 0.0 });
                d
            }
        };
        data.beta = self.physics.beta;
        data.buoyancy_sign = self.physics.buoyancy_sign;
        data.gravity = Arc::new(move |_| g);
        Ok(data)
    }

    /// Solver settings; `estimated` supplies the constants when requested.
    pub fn solver_config(&self, estimated: Option<ReRaConstants<f64>>) -> Result<SolverConfig<f64>> {
        let mut c = SolverConfig::new(self.time.dt, self.time.t_end)?;
        c.picard_max = self.solver.picard_max;
        c.picard_tol = self.solver.picard_tol;
        c.picard_enabled = self.solver.picard;
        c.constants = match (self.solver.constants, estimated) {
            (Some(ConstantsConfig::Values { c1, c1_prime, d }), _) => {
                ReRaConstants { c1, c1_prime, d, source: ConstantsSource::Configured }
            }
            (Some(ConstantsConfig::Named(ConstantsName::Estimate)), Some(k)) => k,
            (Some(ConstantsConfig::Named(ConstantsName::Estimate)), None) => {
                return Err(Error::Config("constants requested by estimation were not supplied".into()))
            }
            (None, _) => ReRaConstants::default(),
        };
        c.validate()?;
        Ok(c)
    }

    pub fn wants_estimate(&self) -> bool {
        self.solver.constants == Some(ConstantsConfig::Named(ConstantsName::Estimate))
    }
}
