//! Scenario files: a TOML description of one problem instance plus solver
//! settings. Overrides are dotted `key=value` pairs applied to the parsed
//! document before it is validated.

use std::fmt;
use std::sync::Arc;

use memincl::diagnostics::{manufactured_forcing_at, manufactured_profile};
use memincl::operators::BKind;
use memincl::setvalued::{FieldKind, GrowthEnvelope, ScalarMap, VectorMap};
use memincl::{Grid, OperatorA, OperatorB, ProblemData, SelectionRule, SetField, SolverOptions, StateVector, TimeMesh};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Why a scenario could not be turned into a problem.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioError(pub String);

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ScenarioError {}

fn bad(msg: impl Into<String>) -> ScenarioError {
    ScenarioError(msg.into())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub seed: u64,
    pub grid: GridSpec,
    pub time: TimeSpec,
    pub memory: MemorySpec,
    pub initial: InitialSpec,
    pub operator_a: ASpec,
    pub operator_b: BSpec,
    pub field: FieldSpec,
    pub envelope: EnvelopeSpec,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub certificate: CertificateSpec,
    #[serde(default)]
    pub reference: ReferenceSpec,
    #[serde(default)]
    pub outputs: OutputSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub nodes: usize,
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSpec {
    pub final_time: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MemorySpec {
    pub lambda_per_time: f64,
    #[serde(default)]
    pub u0: Profile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSpec {
    pub v0: Profile,
}

/// Spatial profile sampled at the interior nodes.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum Profile {
    #[default]
    Zero,
    Constant {
        value: f64,
    },
    Sine {
        amplitude: f64,
        #[serde(default = "one")]
        mode: u32,
    },
    Tent {
        amplitude: f64,
    },
    Linear {
        slope: f64,
        #[serde(default)]
        intercept: f64,
    },
    Gaussian {
        amplitude: f64,
        center: f64,
        width: f64,
    },
    Values {
        values: Vec<f64>,
    },
}

fn one() -> u32 {
    1
}

impl Profile {
    pub fn sample(&self, grid: &Grid) -> Result<StateVector, ScenarioError> {
        let l = grid.length();
        let pi = std::f64::consts::PI;
        Ok(match self {
            Profile::Zero => grid.zeros(),
            Profile::Constant { value } => StateVector::from_element(grid.n(), *value),
            Profile::Sine { amplitude, mode } => grid.sample(|x| amplitude * (*mode as f64 * pi * x / l).sin()),
            Profile::Tent { amplitude } => grid.sample(|x| amplitude * (1.0 - (2.0 * x / l - 1.0).abs())),
            Profile::Linear { slope, intercept } => grid.sample(|x| slope * x + intercept),
            Profile::Gaussian { amplitude, center, width } => {
                if !(*width > 0.0) {
                    return Err(bad("gaussian profile needs width > 0"));
                }
                grid.sample(|x| amplitude * (-((x - center) / width).powi(2)).exp())
            }
            Profile::Values { values } => {
                if values.len() != grid.n() {
                    return Err(bad(format!(
                        "profile lists {} values but the grid has {} nodes",
                        values.len(),
                        grid.n()
                    )));
                }
                StateVector::from_column_slice(values)
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AKindSpec {
    PLaplacian,
    Identity,
    LaplacianPlusIdentity,
    Zero,
    /// Non-monotone test instance.
    NegatedLaplacian,
    /// Super-polynomial test instance.
    ExpEntrywise,
    /// Discontinuous test instance.
    SignSwitch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ASpec {
    pub kind: AKindSpec,
    #[serde(default = "two")]
    pub p: f64,
    #[serde(default = "unit")]
    pub scale: f64,
}

fn two() -> f64 {
    2.0
}

fn unit() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BKindSpec {
    Laplacian,
    FractionalLaplacian,
    IdentityScaled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BSpec {
    pub kind: BKindSpec,
    #[serde(default)]
    pub s: Option<f64>,
    #[serde(default)]
    pub c: Option<f64>,
    /// Perturbation of entry (0, 1) only; makes `B` non-symmetric.
    #[serde(default)]
    pub asymmetry: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKindSpec {
    Singleton,
    Ball,
    Box,
    Polytope,
    /// Singleton forcing of the manufactured solution `e^{-t} sin(πx/L)`.
    Manufactured,
}

/// Scalar time modulation of the field offset.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TimeFactor {
    #[default]
    Constant,
    Cos {
        omega: f64,
    },
    /// `e^{-rate·t}`.
    Exp {
        rate: f64,
    },
}

impl TimeFactor {
    pub fn at(&self, t: f64) -> f64 {
        match self {
            TimeFactor::Constant => 1.0,
            TimeFactor::Cos { omega } => (omega * t).cos(),
            TimeFactor::Exp { rate } => (-rate * t).exp(),
        }
    }
}

/// `F(t, v)` built from `gain·v + time(t)·offset` plus kind specific data:
/// ball radius, box corner profiles, or polytope vertex profiles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    pub kind: FieldKindSpec,
    #[serde(default)]
    pub gain: f64,
    #[serde(default)]
    pub offset: Profile,
    #[serde(default)]
    pub time: TimeFactor,
    #[serde(default)]
    pub radius: f64,
    #[serde(default)]
    pub lower: Profile,
    #[serde(default)]
    pub upper: Profile,
    #[serde(default)]
    pub vertices: Vec<Profile>,
}

/// `|F(t, v)| ≤ a + b‖v‖^{2/q}` with constant `a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvelopeSpec {
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    #[default]
    Marching,
    FixedPoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleSpec {
    MinimalNorm,
    #[default]
    ProjectPrevious,
    Extremal,
    ConstantCenter,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    #[serde(default)]
    pub strategy: Strategy,
    #[serde(default)]
    pub rule: RuleSpec,
    /// Direction for the extremal rule.
    #[serde(default)]
    pub direction: Profile,
    #[serde(default = "default_tol_newton")]
    pub tol_newton: f64,
    #[serde(default = "default_max_newton")]
    pub max_newton: usize,
    #[serde(default = "default_tol_fp")]
    pub tol_fp: f64,
    #[serde(default = "default_k_max")]
    pub k_max: usize,
}

fn default_tol_newton() -> f64 {
    1e-12
}

fn default_max_newton() -> usize {
    60
}

fn default_tol_fp() -> f64 {
    1e-11
}

fn default_k_max() -> usize {
    100
}

impl Default for SolverSpec {
    fn default() -> Self {
        Self {
            strategy: Strategy::default(),
            rule: RuleSpec::default(),
            direction: Profile::Zero,
            tol_newton: default_tol_newton(),
            max_newton: default_max_newton(),
            tol_fp: default_tol_fp(),
            k_max: default_k_max(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateSpec {
    #[serde(default = "default_tol_set")]
    pub tol_set: f64,
    #[serde(default = "default_tol_eq")]
    pub tol_eq: f64,
}

fn default_tol_set() -> f64 {
    1e-9
}

fn default_tol_eq() -> f64 {
    1e-8
}

impl Default for CertificateSpec {
    fn default() -> Self {
        Self {
            tol_set: default_tol_set(),
            tol_eq: default_tol_eq(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceKind {
    #[default]
    None,
    /// Closed form for `A = αI`, `B = βI`, `u0 = 0`, `F = {0}`: each node
    /// follows `(v, w)' = [[-α, -β], [λ, -λ]] (v, w)`.
    LinearMemory,
    /// `v*(t) = e^{-t} sin(πx/L)`; requires the manufactured field.
    Manufactured,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceSpec {
    #[serde(default)]
    pub kind: ReferenceKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "yes")]
    pub trajectory: bool,
    #[serde(default = "yes")]
    pub ledger: bool,
    #[serde(default = "yes")]
    pub report: bool,
}

fn yes() -> bool {
    true
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            trajectory: true,
            ledger: true,
            report: true,
        }
    }
}

/// A scenario after overrides, with the hash of its effective content.
#[derive(Debug, Clone)]
pub struct LoadedScenario {
    pub scenario: Scenario,
    pub hash: String,
}

/// Parses scenario text, applies `key=value` overrides and validates the
/// result. Errors carry the TOML location or the offending key.
pub fn parse_scenario(text: &str, overrides: &[String]) -> Result<LoadedScenario, ScenarioError> {
    let mut doc: toml::Table = toml::from_str(text).map_err(|e| bad(format!("scenario parse error: {e}")))?;
    for ov in overrides {
        apply_override(&mut doc, ov)?;
    }
    let scenario: Scenario = doc
        .clone()
        .try_into()
        .map_err(|e: toml::de::Error| bad(format!("scenario field error: {e}")))?;
    validate(&scenario)?;
    let canonical = toml::to_string(&scenario).map_err(|e| bad(format!("cannot serialize scenario: {e}")))?;
    let hash = hex::encode(Sha256::digest(canonical.as_bytes()));
    Ok(LoadedScenario { scenario, hash })
}

/// `a.b.c=value`, where value is any TOML value; bare words become strings.
pub fn apply_override(doc: &mut toml::Table, ov: &str) -> Result<(), ScenarioError> {
    let (key, raw) = ov
        .split_once('=')
        .ok_or_else(|| bad(format!("override `{ov}` is not of the form key=value")))?;
    let key = key.trim();
    let raw = raw.trim();
    let value = match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").expect("key v was just parsed"),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(bad(format!("override key `{key}` is malformed")));
    }
    let mut table = doc;
    for part in &parts[..parts.len() - 1] {
        let entry = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| bad(format!("override `{key}`: `{part}` is not a table")))?;
    }
    table.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

fn validate(s: &Scenario) -> Result<(), ScenarioError> {
    let positive = |name: &str, x: f64| {
        if x > 0.0 && x.is_finite() {
            Ok(())
        } else {
            Err(bad(format!("{name} must be positive, got {x}")))
        }
    };
    positive("grid.length", s.grid.length)?;
    positive("time.final_time", s.time.final_time)?;
    positive("memory.lambda_per_time", s.memory.lambda_per_time)?;
    positive("solver.tol_newton", s.solver.tol_newton)?;
    positive("solver.tol_fp", s.solver.tol_fp)?;
    positive("certificate.tol_set", s.certificate.tol_set)?;
    positive("certificate.tol_eq", s.certificate.tol_eq)?;
    positive("envelope.b", s.envelope.b)?;
    if s.grid.nodes == 0 || s.time.steps == 0 {
        return Err(bad("grid.nodes and time.steps must be at least 1"));
    }
    if !(s.envelope.a >= 0.0) {
        return Err(bad(format!("envelope.a must be >= 0, got {}", s.envelope.a)));
    }
    if !(s.field.radius >= 0.0) {
        return Err(bad(format!("field.radius must be >= 0, got {}", s.field.radius)));
    }
    if s.field.kind == FieldKindSpec::Polytope && !(1..=8).contains(&s.field.vertices.len()) {
        return Err(bad("field.vertices must list 1 to 8 profiles for a polytope"));
    }
    match s.reference.kind {
        ReferenceKind::LinearMemory => {
            let ok = s.operator_a.kind == AKindSpec::Identity
                && s.operator_b.kind == BKindSpec::IdentityScaled
                && s.memory.u0 == Profile::Zero
                && s.field.kind == FieldKindSpec::Singleton
                && s.field.gain == 0.0
                && s.field.offset == Profile::Zero;
            if !ok {
                return Err(bad(
                    "reference.kind = linear_memory needs operator_a identity, operator_b identity_scaled, u0 zero and a zero singleton field",
                ));
            }
        }
        ReferenceKind::Manufactured if s.field.kind != FieldKindSpec::Manufactured => {
            return Err(bad("reference.kind = manufactured needs field.kind = manufactured"));
        }
        _ => {}
    }
    Ok(())
}

/// Everything a run needs, built from a validated scenario.
#[derive(Debug, Clone)]
pub struct Instance {
    pub data: ProblemData,
    pub envelope: GrowthEnvelope,
    pub rule: SelectionRule,
    pub options: SolverOptions,
}

fn core_err(e: memincl::Error) -> ScenarioError {
    bad(format!("invalid scenario: {e}"))
}

impl Scenario {
    pub fn build(&self) -> Result<Instance, ScenarioError> {
        let grid = Grid::new(self.grid.nodes, self.grid.length).map_err(core_err)?;
        let mesh = TimeMesh::new(self.time.final_time, self.time.steps).map_err(core_err)?;
        let a = match self.operator_a.kind {
            AKindSpec::PLaplacian => OperatorA::p_laplacian(grid, self.operator_a.p).map_err(core_err)?,
            AKindSpec::Identity => OperatorA::identity(grid, self.operator_a.scale),
            AKindSpec::LaplacianPlusIdentity => OperatorA::laplacian_plus_identity(grid),
            AKindSpec::Zero => OperatorA::zero(grid),
            AKindSpec::NegatedLaplacian => OperatorA::negated_laplacian(grid),
            AKindSpec::ExpEntrywise => OperatorA::exp_entrywise(grid),
            AKindSpec::SignSwitch => OperatorA::sign_switch(grid),
        };
        let bkind = match self.operator_b.kind {
            BKindSpec::Laplacian => BKind::Laplacian,
            BKindSpec::FractionalLaplacian => BKind::FractionalLaplacian(
                self.operator_b
                    .s
                    .ok_or_else(|| bad("operator_b.s is required for fractional_laplacian"))?,
            ),
            BKindSpec::IdentityScaled => BKind::IdentityScaled(self.operator_b.c.unwrap_or(1.0)),
        };
        let mut b = OperatorB::new(bkind, grid).map_err(core_err)?;
        if self.operator_b.asymmetry != 0.0 {
            if grid.n() < 2 {
                return Err(bad("operator_b.asymmetry needs at least two nodes"));
            }
            b = b.with_asymmetry(self.operator_b.asymmetry);
        }
        let u0 = self.memory.u0.sample(&grid)?;
        let mut v0 = self.initial.v0.sample(&grid)?;
        let placeholder = SetField::singleton(memincl::setvalued::constant_map(grid.zeros()));
        let mut data = ProblemData::new(grid, mesh, self.memory.lambda_per_time, u0, v0.clone(), a, b, placeholder)
            .map_err(core_err)?;
        let field = match self.field.kind {
            FieldKindSpec::Manufactured => {
                v0 = manufactured_profile(&data);
                let frozen = data.clone();
                SetField::singleton(Arc::new(move |t, _| manufactured_forcing_at(&frozen, t)))
            }
            _ => self.field_from_profiles(&grid)?,
        };
        data.v0 = v0;
        data.field = field;
        let envelope =
            GrowthEnvelope::constant(self.envelope.a, self.envelope.b, data.exps.q, &data.mesh).map_err(core_err)?;
        let rule = match self.solver.rule {
            RuleSpec::MinimalNorm => SelectionRule::MinimalNorm,
            RuleSpec::ProjectPrevious => SelectionRule::ProjectPrevious,
            RuleSpec::ConstantCenter => SelectionRule::ConstantCenter,
            RuleSpec::Extremal => {
                let d = self.solver.direction.sample(&grid)?;
                if d.amax() == 0.0 {
                    return Err(bad("solver.direction must be nonzero for the extremal rule"));
                }
                SelectionRule::Extremal(d)
            }
        };
        let options = SolverOptions {
            tol_newton: self.solver.tol_newton,
            max_newton: self.solver.max_newton,
            ..SolverOptions::default()
        };
        Ok(Instance {
            data,
            envelope,
            rule,
            options,
        })
    }

    fn field_from_profiles(&self, grid: &Grid) -> Result<SetField, ScenarioError> {
        let spec = &self.field;
        let gain = spec.gain;
        let time = spec.time;
        let offset = spec.offset.sample(grid)?;
        let shifted = |base: StateVector| -> VectorMap {
            let offset = offset.clone();
            Arc::new(move |t, v| v * gain + &offset * time.at(t) + &base)
        };
        let kind = match spec.kind {
            FieldKindSpec::Singleton => FieldKind::Singleton(shifted(grid.zeros())),
            FieldKindSpec::Ball => {
                let r = spec.radius;
                let radius: ScalarMap = Arc::new(move |_, _| r);
                FieldKind::Ball {
                    center: shifted(grid.zeros()),
                    radius,
                }
            }
            FieldKindSpec::Box => {
                let lo = spec.lower.sample(grid)?;
                let hi = spec.upper.sample(grid)?;
                if let Some(i) = (0..grid.n()).find(|&i| lo[i] > hi[i]) {
                    return Err(bad(format!("field.lower exceeds field.upper at node {}", i + 1)));
                }
                FieldKind::Box {
                    lower: shifted(lo),
                    upper: shifted(hi),
                }
            }
            FieldKindSpec::Polytope => FieldKind::Polytope {
                vertices: spec
                    .vertices
                    .iter()
                    .map(|p| p.sample(grid).map(&shifted))
                    .collect::<Result<_, _>>()?,
            },
            FieldKindSpec::Manufactured => unreachable!("handled by the caller"),
        };
        SetField::new(kind).map_err(core_err)
    }
}
