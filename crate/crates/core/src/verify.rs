//! Scenario registry: named checks with tagged expectations, negative
//! controls and deterministic reports.
//!
//! A scenario runs one check, which yields a map of named statistics. Each
//! expectation constrains one statistic. A positive scenario passes when all
//! expectations hold. A negative control lists the expectations of the
//! positive check it must fail, plus `control` expectations describing how
//! far it must fail; it passes only if the positive check fails and every
//! control expectation holds.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::diffgeo::{bergman_metric, curvature_scan, isometry_residual, DerivativeMethod, ScanOptions};
use crate::domain::{substream, uniform_in_ball, DomainDescriptor, QuadratureSpec};
use crate::error::{BergmanError, Result};
use crate::integrate::Engine;
use crate::kernels::{
    ball_constant, ball_kernel, ellipsoid_constant, ellipsoid_kernel, transformation_law_residual, BasisDictionary,
    KernelModel, KernelSpec,
};
use crate::maps::{
    ellipsoid_membership, ellipsoid_normalizer, random_unitary, BallAutomorphism, CollapseMap, FiberedAutomorphism,
    HolomorphicMap, MapSpec, RepresentativeMap,
};
use crate::moments::{
    even_moment_closed_form, even_moment_integral, moment_table, stirling_ratio_sequence, support_reach_estimate,
    table_identity_residual, Density, MomentMeasure,
};
use crate::types::{CMatrix, CheckClass, ComplexPoint, HermitianForm, TolerancePolicy, C64};
use crate::wire::to_json_string;

/// 0x0042_3352_474D_414E spells "B3RGMAN" in ASCII.
pub const DEFAULT_SEED: u64 = 0x0042_3352_474D_414E;

pub const REPORT_SCHEMA: u32 = 1;

/// Where an expected value comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    /// Stated in the published literature.
    Published,
    /// Derived from a closed form or an independent oracle.
    Derived,
    /// Immediate from definitions.
    Elementary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Relation {
    /// |observed − value| ≤ tolerance
    Within,
    /// observed ≤ value + tolerance
    AtMost,
    /// observed ≥ value − tolerance
    AtLeast,
}

impl Relation {
    pub fn as_str(&self) -> &'static str {
        match self {
            Relation::Within => "within",
            Relation::AtMost => "at-most",
            Relation::AtLeast => "at-least",
        }
    }
}

/// A constraint on one named statistic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Expectation {
    pub statistic: String,
    pub relation: Relation,
    pub value: f64,
    #[serde(default)]
    pub tolerance: f64,
    pub provenance: Provenance,
    /// Tolerance class a `--tol` override replaces `tolerance` with.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class: Option<CheckClass>,
}

impl Expectation {
    pub fn within(statistic: &str, value: f64, tolerance: f64, provenance: Provenance) -> Self {
        Self {
            statistic: statistic.into(),
            relation: Relation::Within,
            value,
            tolerance,
            provenance,
            class: None,
        }
    }

    pub fn at_most(statistic: &str, value: f64, provenance: Provenance) -> Self {
        Self {
            statistic: statistic.into(),
            relation: Relation::AtMost,
            value,
            tolerance: 0.0,
            provenance,
            class: None,
        }
    }

    pub fn at_least(statistic: &str, value: f64, provenance: Provenance) -> Self {
        Self {
            statistic: statistic.into(),
            relation: Relation::AtLeast,
            value,
            tolerance: 0.0,
            provenance,
            class: None,
        }
    }

    pub fn class(mut self, class: CheckClass) -> Self {
        self.class = Some(class);
        self
    }

    /// Signed distance to the boundary of the accepted region; ≥ 0 holds.
    pub fn margin(&self, observed: f64, tolerance: f64) -> f64 {
        let m = match self.relation {
            Relation::Within => tolerance - (observed - self.value).abs(),
            Relation::AtMost => self.value + tolerance - observed,
            Relation::AtLeast => observed - (self.value - tolerance),
        };
        if m.is_nan() {
            f64::NEG_INFINITY
        } else {
            m
        }
    }
}

/// Evaluation points for pointwise checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "from", rename_all = "snake_case")]
pub enum PointSource {
    Sample {
        domain: DomainDescriptor,
        count: usize,
        #[serde(default)]
        clearance: f64,
    },
    Explicit {
        points: Vec<ComplexPoint>,
    },
}

impl PointSource {
    pub fn points(&self, seed: u64) -> Result<Vec<ComplexPoint>> {
        match self {
            PointSource::Sample {
                domain,
                count,
                clearance,
            } => {
                domain.validate()?;
                crate::diffgeo::scan_points(domain, *count, seed, *clearance)
            }
            PointSource::Explicit { points } => {
                if points.is_empty() {
                    return Err(BergmanError::Parameter("explicit point list is empty".into()));
                }
                Ok(points.clone())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MomentForm {
    /// The full table against δ_{αβ}/c²_{α,λ} for |α|,|β| ≤ max_degree.
    #[default]
    Table,
    /// ∫Re(z₁)^{2m} against the closed form for m ≤ max_degree.
    EvenMoments,
}

/// Explicit identities between maps and kernels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "identity", rename_all = "kebab-case")]
pub enum MapIdentity {
    /// (1 − |z′|²)ⁿ|T(z′)|² = (1 − |A(z′)|²)ⁿ for random Möbius-type A on
    /// 𝔹ⁿ⁻¹, and the fibered map keeps ball samples in the ball.
    FiberedDeterminant { n: usize, samples: usize },
    /// Φ⁻¹∘Φ = id on the slit ball and Φ∘Φ⁻¹ = id on its image.
    CollapseRoundTrip { n: usize, samples: usize },
    /// K_E(ζ,ζ) = |det L|²·K_𝔹(Lζ,Lζ) for random H and ζ ∈ E_H.
    EllipsoidNormalizer { n: usize, samples: usize },
    /// max ‖a(z) − b(z)‖.
    MapEquality {
        a: MapSpec,
        b: MapSpec,
        points: PointSource,
    },
    /// T_p(p) = 0, dT_p(p) = I and T_p(points) ⊂ E_{g(p)}.
    RepresentativeCoordinates {
        kernel: KernelSpec,
        p: ComplexPoint,
        points: PointSource,
    },
    /// K_src(z,w) = detJ(z)·K_tgt(f(z),f(w))·conj(detJ(w)).
    TransformationLaw {
        map: MapSpec,
        source: KernelSpec,
        target: KernelSpec,
        points: PointSource,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Check {
    CurvatureConstancy {
        kernel: KernelSpec,
        domain: DomainDescriptor,
        samples: usize,
        #[serde(default)]
        method: DerivativeMethod,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        clearance: Option<f64>,
    },
    MomentIdentity {
        measure: MomentMeasure,
        lambda: f64,
        max_degree: u32,
        #[serde(default)]
        form: MomentForm,
    },
    KernelEquality {
        a: KernelSpec,
        b: KernelSpec,
        points: PointSource,
    },
    StirlingLimit {
        mu: f64,
        m: u32,
    },
    Isometry {
        map: MapSpec,
        source: KernelSpec,
        /// Defaults to the ellipsoid kernel of g(p) for representative
        /// coordinates.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        target: Option<KernelSpec>,
        points: PointSource,
    },
    MapIdentity(MapIdentity),
    SupportReach {
        measure: MomentMeasure,
        m_max: u32,
    },
}

impl Check {
    pub fn kind(&self) -> &'static str {
        match self {
            Check::CurvatureConstancy { .. } => "curvature-constancy",
            Check::MomentIdentity { .. } => "moment-identity",
            Check::KernelEquality { .. } => "kernel-equality",
            Check::StirlingLimit { .. } => "stirling-limit",
            Check::Isometry { .. } => "isometry",
            Check::MapIdentity(_) => "map-identity",
            Check::SupportReach { .. } => "support-reach",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    pub check: Check,
    pub expected: Vec<Expectation>,
    /// Present exactly for negative controls.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control: Option<Vec<Expectation>>,
    /// Overrides the seed derived from the master seed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

const REQUIRED_TOP: [&str; 3] = ["name", "check", "expected"];
const REQUIRED_EXPECTATION: [&str; 4] = ["statistic", "relation", "value", "provenance"];

impl Scenario {
    pub fn is_negative_control(&self) -> bool {
        self.control.is_some()
    }

    /// Parses one scenario, listing every missing required field first.
    pub fn from_value(v: &Value) -> Result<Self> {
        let name = v.get("name").and_then(Value::as_str).unwrap_or("<unnamed>").to_string();
        let mut missing = Vec::new();
        let Some(obj) = v.as_object() else {
            return Err(BergmanError::Malformed(format!(
                "scenario `{name}` must be a JSON object"
            )));
        };
        for key in REQUIRED_TOP {
            if !obj.contains_key(key) {
                missing.push(key.to_string());
            }
        }
        if let Some(check) = obj.get("check") {
            if check.get("kind").is_none() {
                missing.push("check.kind".into());
            }
        }
        for list in ["expected", "control"] {
            match obj.get(list) {
                Some(Value::Array(items)) => {
                    if items.is_empty() {
                        missing.push(format!("{list}[0]"));
                    }
                    for (i, e) in items.iter().enumerate() {
                        for key in REQUIRED_EXPECTATION {
                            if e.get(key).is_none() {
                                missing.push(format!("{list}[{i}].{key}"));
                            }
                        }
                    }
                }
                Some(_) => {
                    return Err(BergmanError::Malformed(format!(
                        "scenario `{name}`: `{list}` must be an array"
                    )))
                }
                None => {}
            }
        }
        if !missing.is_empty() {
            return Err(BergmanError::Validation { name, missing });
        }
        serde_json::from_value(v.clone()).map_err(|e| BergmanError::Malformed(format!("scenario `{name}`: {e}")))
    }

    pub fn validate(&self) -> Result<()> {
        let mut missing = Vec::new();
        if self.name.is_empty() {
            missing.push("name".into());
        }
        if self.expected.is_empty() {
            missing.push("expected[0]".into());
        }
        if matches!(&self.control, Some(c) if c.is_empty()) {
            missing.push("control[0]".into());
        }
        if missing.is_empty() {
            Ok(())
        } else {
            Err(BergmanError::Validation {
                name: self.name.clone(),
                missing,
            })
        }
    }
}

/// Loads scenarios from a JSON file holding one scenario, an array of them,
/// or `{"scenarios": [...]}`.
pub fn load_scenarios(path: &Path) -> Result<Vec<Scenario>> {
    let text = std::fs::read_to_string(path)?;
    parse_scenarios(&text)
}

pub fn parse_scenarios(text: &str) -> Result<Vec<Scenario>> {
    let v: Value = serde_json::from_str(text)?;
    let items = match &v {
        Value::Array(a) => a.clone(),
        Value::Object(o) if o.contains_key("scenarios") => match &o["scenarios"] {
            Value::Array(a) => a.clone(),
            _ => return Err(BergmanError::Malformed("`scenarios` must be an array".into())),
        },
        Value::Object(_) => vec![v.clone()],
        _ => return Err(BergmanError::Malformed("expected a scenario object or array".into())),
    };
    let scenarios: Vec<Scenario> = items.iter().map(Scenario::from_value).collect::<Result<_>>()?;
    let mut seen = std::collections::BTreeSet::new();
    for s in &scenarios {
        s.validate()?;
        if !seen.insert(s.name.as_str()) {
            return Err(BergmanError::Malformed(format!("duplicate scenario name `{}`", s.name)));
        }
    }
    Ok(scenarios)
}

/// First eight bytes of SHA-256(master seed ‖ name), little-endian.
pub fn scenario_seed(master: u64, name: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update(name.as_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("32-byte digest"))
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunOptions {
    pub master_seed: u64,
    pub policy: TolerancePolicy,
    /// Per-class tolerances replacing those of tagged expectations.
    pub overrides: BTreeMap<CheckClass, f64>,
}

impl RunOptions {
    pub fn with_seed(master_seed: u64) -> Self {
        Self {
            master_seed,
            ..Self::default()
        }
    }

    /// Applies `class=value`; monte-carlo classes also update the policy.
    pub fn apply_override(&mut self, spec: &str) -> Result<()> {
        self.policy.apply_override(spec)?;
        let (key, _) = spec.split_once('=').expect("checked by the policy");
        match key.trim() {
            "closed-form" => {
                self.overrides.insert(CheckClass::ClosedForm, self.policy.closed_form);
            }
            "finite-difference" => {
                self.overrides
                    .insert(CheckClass::FiniteDifference, self.policy.finite_difference);
            }
            "monte-carlo-relative" => {
                self.overrides
                    .insert(CheckClass::MonteCarlo, self.policy.monte_carlo_relative);
            }
            _ => {}
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub statistic: String,
    pub relation: Relation,
    pub expected: f64,
    pub tolerance: f64,
    pub provenance: Provenance,
    pub observed: Option<f64>,
    pub margin: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    Positive,
    NegativeControl,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub name: String,
    pub check: String,
    pub role: Role,
    pub seed: u64,
    pub engine: String,
    pub observed: BTreeMap<String, f64>,
    pub expected: Vec<Outcome>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub control: Vec<Outcome>,
    /// Whether the positive check holds; a negative control needs `false`.
    pub positive_check: bool,
    /// Smallest margin of the deciding expectations.
    pub margin: f64,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_clock_seconds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub schema: u32,
    pub master_seed: u64,
    pub scenarios: Vec<ScenarioReport>,
    pub passed: usize,
    pub failed: usize,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_clock_seconds: Option<f64>,
}

impl VerificationReport {
    /// Drops every wall-clock field.
    pub fn without_timing(&self) -> Self {
        let mut r = self.clone();
        r.wall_clock_seconds = None;
        for s in &mut r.scenarios {
            s.wall_clock_seconds = None;
        }
        r
    }

    pub fn to_json(&self) -> Result<String> {
        to_json_string(self, true)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "scenario",
            "role",
            "statistic",
            "observed",
            "relation",
            "expected",
            "tolerance",
            "margin",
            "holds",
            "pass",
        ])?;
        for s in &self.scenarios {
            let role = match s.role {
                Role::Positive => "positive",
                Role::NegativeControl => "negative-control",
            };
            for o in s.expected.iter().chain(&s.control) {
                w.write_record([
                    s.name.clone(),
                    role.into(),
                    o.statistic.clone(),
                    o.observed.map(crate::wire::fmt17).unwrap_or_default(),
                    o.relation.as_str().into(),
                    crate::wire::fmt17(o.expected),
                    crate::wire::fmt17(o.tolerance),
                    crate::wire::fmt17(o.margin),
                    o.holds.to_string(),
                    s.pass.to_string(),
                ])?;
            }
        }
        let bytes = w.into_inner().map_err(|e| BergmanError::Malformed(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv writes UTF-8"))
    }

    pub fn to_table(&self) -> String {
        let width = self.scenarios.iter().map(|s| s.name.len()).max().unwrap_or(8).max(8);
        let mut out = format!(
            "{:<width$}  {:<6}  {:<12}  {}\n",
            "scenario", "result", "margin", "detail"
        );
        for s in &self.scenarios {
            let verdict = if s.pass { "PASS" } else { "FAIL" };
            let detail = match (&s.error, s.role) {
                (Some(e), _) => format!("error: {e}"),
                (None, Role::NegativeControl) => {
                    format!(
                        "negative control, positive check {}",
                        if s.positive_check { "held" } else { "failed" }
                    )
                }
                (None, Role::Positive) => s
                    .expected
                    .iter()
                    .map(|o| {
                        format!(
                            "{}={}",
                            o.statistic,
                            o.observed.map(|v| format!("{v:.6e}")).unwrap_or("-".into())
                        )
                    })
                    .collect::<Vec<_>>()
                    .join(" "),
            };
            let _ = writeln!(out, "{:<width$}  {verdict:<6}  {:<12.4e}  {detail}", s.name, s.margin);
        }
        let _ = writeln!(
            out,
            "{} passed, {} failed (master seed {:#018x})",
            self.passed, self.failed, self.master_seed
        );
        out
    }
}

/// Computed statistics with the engine that produced them.
struct Observation {
    stats: BTreeMap<String, f64>,
    engine: String,
}

impl Observation {
    fn new(engine: impl Into<String>) -> Self {
        Self {
            stats: BTreeMap::new(),
            engine: engine.into(),
        }
    }

    fn set(mut self, key: &str, value: f64) -> Self {
        self.stats.insert(key.into(), value);
        self
    }
}

fn judge(list: &[Expectation], stats: &BTreeMap<String, f64>, opts: &RunOptions) -> Vec<Outcome> {
    list.iter()
        .map(|e| {
            let tolerance = e
                .class
                .and_then(|c| opts.overrides.get(&c).copied())
                .unwrap_or(e.tolerance);
            let observed = stats.get(&e.statistic).copied();
            let margin = observed.map_or(f64::NEG_INFINITY, |v| e.margin(v, tolerance));
            Outcome {
                statistic: e.statistic.clone(),
                relation: e.relation,
                expected: e.value,
                tolerance,
                provenance: e.provenance,
                observed,
                margin,
                holds: margin >= 0.0,
            }
        })
        .collect()
}

fn min_margin(o: &[Outcome]) -> f64 {
    o.iter().map(|x| x.margin).fold(f64::INFINITY, f64::min)
}

/// Runs one scenario. Failures of the computation are recorded in the
/// report rather than returned.
pub fn run_scenario(s: &Scenario, opts: &RunOptions) -> ScenarioReport {
    let seed = s.seed.unwrap_or_else(|| scenario_seed(opts.master_seed, &s.name));
    let role = if s.is_negative_control() {
        Role::NegativeControl
    } else {
        Role::Positive
    };
    let start = Instant::now();
    let result = s.validate().and_then(|_| observe(&s.check, seed, &opts.policy));
    let elapsed = start.elapsed().as_secs_f64();
    let (observed, engine, error) = match result {
        Ok(o) => (o.stats, o.engine, None),
        Err(e) => (BTreeMap::new(), String::new(), Some(e.to_string())),
    };
    let expected = judge(&s.expected, &observed, opts);
    let control = s
        .control
        .as_deref()
        .map(|c| judge(c, &observed, opts))
        .unwrap_or_default();
    let positive_check = error.is_none() && expected.iter().all(|o| o.holds);
    let (pass, margin) = match role {
        Role::Positive => (positive_check, min_margin(&expected)),
        Role::NegativeControl => {
            let m = min_margin(&control);
            (error.is_none() && !positive_check && control.iter().all(|o| o.holds), m)
        }
    };
    ScenarioReport {
        name: s.name.clone(),
        check: s.check.kind().into(),
        role,
        seed,
        engine,
        observed,
        expected,
        control,
        positive_check,
        margin,
        pass,
        error,
        wall_clock_seconds: Some(elapsed),
    }
}

/// Runs scenarios concurrently and merges the reports in input order.
pub fn run_suite(scenarios: &[Scenario], opts: &RunOptions) -> VerificationReport {
    let start = Instant::now();
    let reports: Vec<ScenarioReport> = scenarios.par_iter().map(|s| run_scenario(s, opts)).collect();
    let passed = reports.iter().filter(|r| r.pass).count();
    VerificationReport {
        schema: REPORT_SCHEMA,
        master_seed: opts.master_seed,
        failed: reports.len() - passed,
        pass: passed == reports.len(),
        passed,
        scenarios: reports,
        wall_clock_seconds: Some(start.elapsed().as_secs_f64()),
    }
}

fn reseed(measure: &MomentMeasure, seed: u64) -> MomentMeasure {
    match measure {
        MomentMeasure::Weighted {
            domain,
            density,
            engine: Engine::MonteCarlo { samples, .. },
        } => MomentMeasure::Weighted {
            domain: domain.clone(),
            density: density.clone(),
            engine: Engine::MonteCarlo {
                samples: *samples,
                seed,
            },
        },
        other => other.clone(),
    }
}

fn observe(check: &Check, seed: u64, policy: &TolerancePolicy) -> Result<Observation> {
    match check {
        Check::CurvatureConstancy {
            kernel,
            domain,
            samples,
            method,
            clearance,
        } => {
            domain.validate()?;
            let k = kernel.build()?;
            let mut options = ScanOptions {
                method: *method,
                ..ScanOptions::default()
            };
            if let Some(c) = clearance {
                options.clearance = *c;
            }
            let r = curvature_scan(&k, domain, *samples, seed, &options)?;
            let engine = match method {
                DerivativeMethod::FiniteDifference => "finite-difference",
                DerivativeMethod::Auto if k.quadratic_family().is_some() => "analytic",
                DerivativeMethod::Auto => "finite-difference",
            };
            Ok(Observation::new(engine)
                .set("mean", r.mean)
                .set("min", r.min)
                .set("max", r.max)
                .set("spread", r.spread)
                .set("samples", r.samples.len() as f64))
        }
        Check::MomentIdentity {
            measure,
            lambda,
            max_degree,
            form,
        } => {
            let measure = reseed(measure, seed);
            measure.validate()?;
            match form {
                MomentForm::Table => {
                    let table = moment_table(&measure, *max_degree)?;
                    let r = table_identity_residual(&table, *lambda, policy)?;
                    Ok(Observation::new(measure.engine_tag())
                        .set("excess", r.excess)
                        .set("sigmas", r.sigmas)
                        .set("normalized", r.normalized)
                        .set("hermitian_defect", table.hermitian_defect())
                        .set("cells", r.cells as f64))
                }
                MomentForm::EvenMoments => {
                    let mut worst: f64 = 0.0;
                    for m in 0..=*max_degree {
                        let est = even_moment_integral(&measure, m)?;
                        let exact = even_moment_closed_form(m, *lambda, measure.dim())?;
                        worst = worst.max((est.value.re - exact).abs() / exact);
                    }
                    Ok(Observation::new(measure.engine_tag()).set("relative", worst))
                }
            }
        }
        Check::KernelEquality { a, b, points } => {
            let ka = a.build()?;
            let kb = b.build()?;
            let pts = points.points(seed)?;
            let gap = kernel_equality_check(&ka, &kb, &pts)?;
            Ok(Observation::new(format!("{} vs {}", ka.label(), kb.label()))
                .set("max_gap", gap)
                .set("points", pts.len() as f64))
        }
        Check::StirlingLimit { mu, m } => {
            let seq = stirling_ratio_sequence(*mu, *m)?;
            let ratio = *seq.last().expect("m ≥ 1");
            let limit = (-mu).exp();
            Ok(Observation::new("exact")
                .set("ratio", ratio)
                .set("limit", limit)
                .set("gap", (ratio - limit).abs()))
        }
        Check::Isometry {
            map,
            source,
            target,
            points,
        } => {
            let f = map.build()?;
            let src = source.build()?;
            let tgt = match (target, map) {
                (Some(t), _) => t.build()?,
                (None, MapSpec::RepCoords { p, kernel }) => {
                    KernelModel::ellipsoid(bergman_metric(&kernel.build()?, p)?.g)?
                }
                (None, _) => return Err(BergmanError::Parameter("isometry check needs a target kernel".into())),
            };
            let pts = points.points(seed)?;
            let residuals: Vec<f64> = pts
                .par_iter()
                .map(|z| isometry_residual(f.as_ref(), &src, &tgt, z))
                .collect::<Result<_>>()?;
            Ok(Observation::new(f.name())
                .set("max_residual", residuals.iter().copied().fold(0.0, f64::max))
                .set("points", pts.len() as f64))
        }
        Check::MapIdentity(identity) => observe_map_identity(identity, seed),
        Check::SupportReach { measure, m_max } => {
            let measure = reseed(measure, seed);
            measure.validate()?;
            let est = support_reach_estimate(&measure, *m_max)?;
            Ok(Observation::new(measure.engine_tag()).set("estimate", est))
        }
    }
}

fn random_ball_point<R: Rng>(rng: &mut R, n: usize, radius: f64) -> ComplexPoint {
    uniform_in_ball(rng, &ComplexPoint::zeros(n), radius)
}

/// A random positive-definite H with eigenvalues in roughly [0.2, 5].
fn random_positive_form<R: Rng>(rng: &mut R, n: usize) -> Result<HermitianForm> {
    let u = random_unitary(n, rng);
    let d = CMatrix::from_diagonal(&nalgebra::DVector::from_fn(n, |_, _| {
        C64::new(rng.gen_range(0.2..5.0), 0.0)
    }));
    Ok(HermitianForm::from_nearly_hermitian(&(&u * d * u.adjoint())))
}

fn observe_map_identity(identity: &MapIdentity, seed: u64) -> Result<Observation> {
    match identity {
        MapIdentity::FiberedDeterminant { n, samples } => {
            if *n < 2 {
                return Err(BergmanError::Parameter("fibered maps need n ≥ 2".into()));
            }
            let mut rng = substream(seed, 0);
            let mut residual: f64 = 0.0;
            let mut escaped = 0usize;
            for _ in 0..*samples {
                let a = random_ball_point(&mut rng, n - 1, 0.95);
                let u = random_unitary(n - 1, &mut rng);
                let phi = FiberedAutomorphism::new(BallAutomorphism::new(a, u)?)?;
                let zp = random_ball_point(&mut rng, n - 1, 1.0);
                residual = residual.max(phi.determinant_identity_residual(&zp)?);
                let z = random_ball_point(&mut rng, *n, 1.0);
                if phi.apply(&z)?.norm_sqr() >= 1.0 {
                    escaped += 1;
                }
            }
            Ok(Observation::new("closed-form")
                .set("residual", residual)
                .set("escaped", escaped as f64))
        }
        MapIdentity::CollapseRoundTrip { n, samples } => {
            let phi = CollapseMap::new(*n)?;
            let inv = phi.inverse();
            let d1 = DomainDescriptor::slit_ball(*n)?;
            let d2 = DomainDescriptor::collapsed_slit_ball(*n)?;
            let mut forward: f64 = 0.0;
            let mut escaped = 0usize;
            for z in d1.sample(*samples, seed)? {
                let w = phi.apply(&z)?;
                if !d2.contains(&w) {
                    escaped += 1;
                }
                forward = forward.max(inv.apply(&w)?.sub(&z).norm());
            }
            let mut backward: f64 = 0.0;
            for w in d2.sample(*samples, seed ^ 1)? {
                backward = backward.max(phi.apply(&inv.apply(&w)?)?.sub(&w).norm());
            }
            Ok(Observation::new("closed-form")
                .set("residual", forward.max(backward))
                .set("escaped", escaped as f64))
        }
        MapIdentity::EllipsoidNormalizer { n, samples } => {
            let mut rng = substream(seed, 0);
            let mut residual: f64 = 0.0;
            let mut constant: f64 = 0.0;
            let nf = (*n + 1) as f64;
            for _ in 0..*samples {
                let h = random_positive_form(&mut rng, *n)?;
                let l = ellipsoid_normalizer(&h)?;
                let det2 = l.matrix().determinant().norm_sqr();
                // ζ = L⁻¹u for u uniform in 𝔹ⁿ lies in E_H
                let u = random_ball_point(&mut rng, *n, 0.95);
                let l_inv = l
                    .matrix()
                    .clone()
                    .try_inverse()
                    .ok_or_else(|| BergmanError::Parameter("singular L".into()))?;
                let zeta = ComplexPoint::from_vector(&(l_inv * u.to_vector()));
                if !ellipsoid_membership(&h, &zeta) {
                    return Err(BergmanError::Domain(format!("{zeta} not in E_H")));
                }
                let lhs = ellipsoid_kernel(&h, &zeta)?;
                let lz = l.apply(&zeta)?;
                let rhs = det2 * ball_kernel(*n, &lz, &lz)?.re;
                residual = residual.max((lhs - rhs).abs() / lhs);
                let c = ball_constant(*n) * h.determinant() / nf.powi(*n as i32);
                constant = constant.max((ellipsoid_constant(&h) - c).abs() / c);
                constant = constant.max((det2 * ball_constant(*n) - c).abs() / c);
            }
            Ok(Observation::new("closed-form")
                .set("residual", residual)
                .set("constant", constant))
        }
        MapIdentity::MapEquality { a, b, points } => {
            let fa = a.build()?;
            let fb = b.build()?;
            let pts = points.points(seed)?;
            let gaps: Vec<f64> = pts
                .par_iter()
                .map(|z| Ok(fa.apply(z)?.sub(&fb.apply(z)?).norm()))
                .collect::<Result<_>>()?;
            Ok(Observation::new(format!("{} vs {}", fa.name(), fb.name()))
                .set("residual", gaps.iter().copied().fold(0.0, f64::max)))
        }
        MapIdentity::RepresentativeCoordinates { kernel, p, points } => {
            let t = RepresentativeMap::new(kernel.build()?, p.clone())?;
            let n = p.dim();
            let at_p = t.apply(p)?.norm();
            let jac = t.jacobian(p)? - CMatrix::identity(n, n);
            let jac_gap = jac.iter().map(|x| x.norm()).fold(0.0, f64::max);
            let g = t.metric().clone();
            let pts = points.points(seed)?;
            let forms: Vec<f64> = pts
                .par_iter()
                .map(|z| Ok(g.quadratic(&t.apply(z)?) / (n + 1) as f64))
                .collect::<Result<_>>()?;
            let outside = forms.iter().filter(|&&f| f >= 1.0).count();
            Ok(Observation::new(t.name())
                .set("value_at_p", at_p)
                .set("jacobian_at_p", jac_gap)
                .set("max_form", forms.iter().copied().fold(0.0, f64::max))
                .set("outside", outside as f64))
        }
        MapIdentity::TransformationLaw {
            map,
            source,
            target,
            points,
        } => {
            let f = map.build()?;
            let src = source.build()?;
            let tgt = target.build()?;
            let pts = points.points(seed)?;
            let mut worst: f64 = 0.0;
            for z in &pts {
                for w in &pts {
                    worst = worst.max(transformation_law_residual(f.as_ref(), &src, &tgt, z, w)?);
                }
            }
            Ok(Observation::new(f.name()).set("residual", worst))
        }
    }
}

/// max over `points` of |K_a(z,z) − K_b(z,z)|/(1 + |K_b(z,z)|).
pub fn kernel_equality_check(a: &KernelModel, b: &KernelModel, points: &[ComplexPoint]) -> Result<f64> {
    let gaps: Vec<f64> = points
        .par_iter()
        .map(|z| {
            let kb = b.eval(z, z)?;
            Ok((a.eval(z, z)? - kb).norm() / (1.0 + kb.norm()))
        })
        .collect::<Result<_>>()?;
    Ok(gaps.into_iter().fold(0.0, f64::max))
}

fn quad(order: usize, angular: usize) -> Engine {
    Engine::Quadrature(QuadratureSpec::with_angular(order, angular))
}

fn monte_carlo(samples: usize) -> Engine {
    Engine::MonteCarlo { samples, seed: 0 }
}

fn scenario(name: &str, description: &str, check: Check, expected: Vec<Expectation>) -> Scenario {
    Scenario {
        name: name.into(),
        description: description.into(),
        check,
        expected,
        control: None,
        seed: None,
    }
}

fn negative(
    name: &str,
    description: &str,
    check: Check,
    expected: Vec<Expectation>,
    control: Vec<Expectation>,
) -> Scenario {
    Scenario {
        control: Some(control),
        ..scenario(name, description, check, expected)
    }
}

fn sampled(domain: DomainDescriptor, count: usize) -> PointSource {
    PointSource::Sample {
        domain,
        count,
        clearance: 0.0,
    }
}

fn ball_curvature(n: usize, method: DerivativeMethod, tol: f64) -> Scenario {
    let suffix = if method == DerivativeMethod::FiniteDifference {
        "-fd"
    } else {
        ""
    };
    let class = if method == DerivativeMethod::FiniteDifference {
        CheckClass::FiniteDifference
    } else {
        CheckClass::ClosedForm
    };
    let target = -2.0 / (n + 1) as f64;
    scenario(
        &format!("ball-curvature{suffix}-n{n}"),
        "holomorphic sectional curvature of the unit ball is -2/(n+1)",
        Check::CurvatureConstancy {
            kernel: KernelSpec::Ball { n },
            domain: DomainDescriptor::scaled_ball(n, 0.7).expect("valid radius"),
            samples: 50,
            method,
            clearance: Some(0.0),
        },
        vec![
            Expectation::within("min", target, tol, Provenance::Published).class(class),
            Expectation::within("max", target, tol, Provenance::Published).class(class),
        ],
    )
}

fn moment_identity(name: &str, domain: DomainDescriptor, lambda: f64) -> Scenario {
    let density = if lambda == 1.0 {
        Density::Uniform
    } else {
        Density::Radial { lambda }
    };
    scenario(
        name,
        "Monte Carlo moment table matches delta/c_alpha^2 within the Monte Carlo bound",
        Check::MomentIdentity {
            measure: MomentMeasure::weighted(domain, density, monte_carlo(1_000_000)),
            lambda,
            max_degree: 4,
            form: MomentForm::Table,
        },
        vec![Expectation::at_most("excess", 1.0, Provenance::Derived)],
    )
}

fn stirling(mu: f64) -> Scenario {
    scenario(
        &format!("stirling-mu{mu}"),
        "(m/(mu+m))^m approaches exp(-mu)",
        Check::StirlingLimit { mu, m: 200 },
        vec![Expectation::at_most("gap", 0.02, Provenance::Published)],
    )
}

fn repcoords_point(n: usize) -> ComplexPoint {
    ComplexPoint::new(
        (0..n)
            .map(|j| C64::new(0.3 - 0.1 * j as f64, 0.1 + 0.05 * j as f64))
            .collect(),
    )
}

/// The registry. Names are stable; new scenarios are appended.
pub fn built_in_suite() -> Vec<Scenario> {
    use DerivativeMethod::{Auto, FiniteDifference};
    let ball2 = DomainDescriptor::unit_ball(2);
    let slit2 = DomainDescriptor::slit_ball(2).expect("n = 2");
    let mut s = vec![
        ball_curvature(1, Auto, 1e-6),
        ball_curvature(2, Auto, 1e-6),
        ball_curvature(3, Auto, 1e-6),
        ball_curvature(1, FiniteDifference, 1e-5),
        ball_curvature(2, FiniteDifference, 1e-5),
        ball_curvature(3, FiniteDifference, 1e-5),
        scenario(
            "slit-ball-curvature",
            "restricted ball kernel on the slit ball has constant curvature -2/3",
            Check::CurvatureConstancy {
                kernel: KernelSpec::Restricted {
                    base: Box::new(KernelSpec::Ball { n: 2 }),
                    domain: slit2.clone(),
                },
                domain: slit2.clone(),
                samples: 50,
                method: Auto,
                clearance: Some(0.05),
            },
            vec![
                Expectation::within("mean", -2.0 / 3.0, 1e-6, Provenance::Published),
                Expectation::at_most("spread", 1e-6, Provenance::Published),
            ],
        ),
        scenario(
            "collapsed-slit-curvature",
            "pullback of the slit-ball kernel through the collapse inverse has curvature -2/3",
            Check::CurvatureConstancy {
                kernel: KernelSpec::Pullback {
                    base: Box::new(KernelSpec::Restricted {
                        base: Box::new(KernelSpec::Ball { n: 2 }),
                        domain: slit2.clone(),
                    }),
                    map: MapSpec::CollapseInverse { n: 2 },
                    source: DomainDescriptor::collapsed_slit_ball(2).expect("n = 2"),
                },
                domain: DomainDescriptor::collapsed_slit_ball(2).expect("n = 2"),
                samples: 50,
                method: Auto,
                clearance: Some(0.02),
            },
            vec![
                Expectation::within("min", -2.0 / 3.0, 1e-5, Provenance::Published).class(CheckClass::FiniteDifference),
                Expectation::within("max", -2.0 / 3.0, 1e-5, Provenance::Published).class(CheckClass::FiniteDifference),
            ],
        ),
        scenario(
            "collapse-round-trip",
            "the collapse map and its inverse compose to the identity",
            Check::MapIdentity(MapIdentity::CollapseRoundTrip { n: 2, samples: 1000 }),
            vec![
                Expectation::at_most("residual", 1e-14, Provenance::Elementary),
                Expectation::at_most("escaped", 0.0, Provenance::Elementary),
            ],
        ),
        scenario(
            "fibered-identity-n2",
            "determinant identity of the fibered automorphisms",
            Check::MapIdentity(MapIdentity::FiberedDeterminant { n: 2, samples: 200 }),
            vec![
                Expectation::at_most("residual", 1e-10, Provenance::Published),
                Expectation::at_most("escaped", 0.0, Provenance::Published),
            ],
        ),
        scenario(
            "fibered-identity-n3",
            "determinant identity of the fibered automorphisms",
            Check::MapIdentity(MapIdentity::FiberedDeterminant { n: 3, samples: 200 }),
            vec![
                Expectation::at_most("residual", 1e-10, Provenance::Published),
                Expectation::at_most("escaped", 0.0, Provenance::Published),
            ],
        ),
        scenario(
            "fibered-into-ball",
            "fibered automorphisms keep ball samples in the ball",
            Check::MapIdentity(MapIdentity::FiberedDeterminant { n: 2, samples: 1000 }),
            vec![Expectation::at_most("escaped", 0.0, Provenance::Published)],
        ),
        moment_identity("moment-identity-ball-n1", DomainDescriptor::unit_ball(1), 1.0),
        moment_identity("moment-identity-ball-n2", ball2.clone(), 1.0),
        moment_identity("moment-identity-radial-n1", DomainDescriptor::unit_ball(1), 2.0),
        moment_identity("moment-identity-radial-n2", ball2.clone(), 2.0),
        moment_identity("moment-identity-slit-n2", slit2.clone(), 1.0),
        scenario(
            "even-moments-disk",
            "quadrature even moments of Re z1 on the disk match the closed form",
            Check::MomentIdentity {
                measure: MomentMeasure::lebesgue(DomainDescriptor::unit_ball(1), quad(12, 24)),
                lambda: 1.0,
                max_degree: 5,
                form: MomentForm::EvenMoments,
            },
            vec![Expectation::at_most("relative", 1e-6, Provenance::Derived)],
        ),
        stirling(2.0),
        stirling(3.0),
        stirling(4.0),
        scenario(
            "support-reach-ball",
            "root test of even moments reaches the ball boundary",
            Check::SupportReach {
                measure: MomentMeasure::lebesgue(DomainDescriptor::unit_ball(1), quad(8, 16)),
                m_max: 200,
            },
            vec![Expectation::at_least("estimate", 0.95, Provenance::Derived)],
        ),
        scenario(
            "support-reach-shrunken",
            "root test of even moments stays inside the shrunken disk",
            Check::SupportReach {
                measure: MomentMeasure::lebesgue(
                    DomainDescriptor::scaled_ball(1, 0.8).expect("valid radius"),
                    quad(8, 16),
                ),
                m_max: 200,
            },
            vec![Expectation::at_most("estimate", 0.82, Provenance::Derived)],
        ),
        scenario(
            "hartogs-kernel-equality",
            "monomial Gram kernel of the ball minus a Hartogs-removable set equals the ball kernel",
            Check::KernelEquality {
                a: KernelSpec::Gram {
                    domain: DomainDescriptor::hartogs_complement(2, 0.01).expect("valid epsilon"),
                    dictionary: BasisDictionary::monomials(2, 10),
                    engine: quad(12, 24),
                },
                b: KernelSpec::Ball { n: 2 },
                points: sampled(DomainDescriptor::scaled_ball(2, 0.25).expect("valid radius"), 100),
            },
            vec![Expectation::at_most("max_gap", 1e-8, Provenance::Published)],
        ),
        scenario(
            "slit-kernel-equality",
            "restricted ball kernel on the slit ball equals the ball kernel",
            Check::KernelEquality {
                a: KernelSpec::Restricted {
                    base: Box::new(KernelSpec::Ball { n: 2 }),
                    domain: slit2.clone(),
                },
                b: KernelSpec::Ball { n: 2 },
                points: sampled(slit2.clone(), 100),
            },
            vec![Expectation::at_most("max_gap", 0.0, Provenance::Published)],
        ),
        negative(
            "annulus-curvature",
            "negative control: annulus curvature must not be constant",
            Check::CurvatureConstancy {
                kernel: KernelSpec::Annulus { inner: 0.5 },
                domain: DomainDescriptor::annulus(0.5).expect("valid radius"),
                samples: 40,
                method: Auto,
                clearance: None,
            },
            vec![Expectation::at_most("spread", 1e-6, Provenance::Derived)],
            vec![Expectation::at_least("spread", 0.1, Provenance::Derived)],
        ),
        negative(
            "annulus-gram-vs-disk",
            "negative control: the annulus kernel differs from the disk kernel",
            Check::KernelEquality {
                a: KernelSpec::Gram {
                    domain: DomainDescriptor::annulus(0.5).expect("valid radius"),
                    dictionary: BasisDictionary::laurent(-10, 10),
                    engine: quad(16, 48),
                },
                b: KernelSpec::Ball { n: 1 },
                points: PointSource::Explicit {
                    points: (0..8)
                        .map(|k| ComplexPoint::new(vec![C64::from_polar(0.6, PI * k as f64 / 4.0)]))
                        .collect(),
                },
            },
            vec![Expectation::at_most("max_gap", 1e-8, Provenance::Derived)],
            vec![Expectation::at_least("max_gap", 0.05, Provenance::Derived)],
        ),
        negative(
            "moment-identity-shrunken-ball",
            "negative control: uniform moments of 0.9 times the ball miss the ball targets",
            Check::MomentIdentity {
                measure: MomentMeasure::lebesgue(
                    DomainDescriptor::scaled_ball(2, 0.9).expect("valid radius"),
                    monte_carlo(1_000_000),
                ),
                lambda: 1.0,
                max_degree: 4,
                form: MomentForm::Table,
            },
            vec![Expectation::at_most("excess", 1.0, Provenance::Derived)],
            vec![Expectation::at_least("sigmas", 3.0, Provenance::Derived)],
        ),
        negative(
            "moment-identity-uniform-lambda2",
            "negative control: the uniform measure does not realize the lambda = 2 moments",
            Check::MomentIdentity {
                measure: MomentMeasure::lebesgue(ball2.clone(), monte_carlo(1_000_000)),
                lambda: 2.0,
                max_degree: 4,
                form: MomentForm::Table,
            },
            vec![Expectation::at_most("excess", 1.0, Provenance::Derived)],
            vec![Expectation::at_least("sigmas", 3.0, Provenance::Derived)],
        ),
    ];
    for n in 1..=3 {
        s.push(scenario(
            &format!("ellipsoid-consistency-n{n}"),
            "ellipsoid kernel equals the ball kernel pulled back by the normalizer",
            Check::MapIdentity(MapIdentity::EllipsoidNormalizer { n, samples: 200 }),
            vec![
                Expectation::at_most("residual", 1e-12, Provenance::Published).class(CheckClass::ClosedForm),
                Expectation::at_most("constant", 1e-12, Provenance::Published).class(CheckClass::ClosedForm),
            ],
        ));
    }
    let p = repcoords_point(2);
    let ball_spec = KernelSpec::Ball { n: 2 };
    s.extend([
        scenario(
            "repcoords-identity-ball",
            "representative coordinates at the origin of the ball are the identity",
            Check::MapIdentity(MapIdentity::MapEquality {
                a: MapSpec::RepCoords {
                    p: ComplexPoint::zeros(2),
                    kernel: Box::new(ball_spec.clone()),
                },
                b: MapSpec::Identity { n: 2 },
                points: sampled(DomainDescriptor::scaled_ball(2, 0.9).expect("valid radius"), 200),
            }),
            vec![Expectation::at_most("residual", 1e-8, Provenance::Derived)],
        ),
        scenario(
            "repcoords-image-ball",
            "representative coordinates vanish at p, have unit derivative there and map into the metric ellipsoid",
            Check::MapIdentity(MapIdentity::RepresentativeCoordinates {
                kernel: ball_spec.clone(),
                p: p.clone(),
                points: sampled(ball2.clone(), 1000),
            }),
            vec![
                Expectation::at_most("value_at_p", 0.0, Provenance::Elementary),
                Expectation::at_most("jacobian_at_p", 1e-8, Provenance::Elementary),
                Expectation::at_most("outside", 0.0, Provenance::Published),
            ],
        ),
        scenario(
            "repcoords-isometry-ball",
            "representative coordinates are an isometry onto the metric ellipsoid",
            Check::Isometry {
                map: MapSpec::RepCoords {
                    p: p.clone(),
                    kernel: Box::new(ball_spec.clone()),
                },
                source: ball_spec.clone(),
                target: None,
                points: sampled(DomainDescriptor::scaled_ball(2, 0.7).expect("valid radius"), 50),
            },
            vec![Expectation::at_most("max_residual", 1e-6, Provenance::Published)],
        ),
        scenario(
            "mobius-transformation-law",
            "slit-ball automorphisms satisfy the kernel transformation law",
            Check::MapIdentity(MapIdentity::TransformationLaw {
                map: MapSpec::SlitBallAutomorphism { a: C64::new(0.4, -0.3) },
                source: KernelSpec::Ball { n: 2 },
                target: KernelSpec::Ball { n: 2 },
                points: sampled(DomainDescriptor::scaled_ball(2, 0.8).expect("valid radius"), 20),
            }),
            vec![Expectation::at_most("residual", 1e-12, Provenance::Elementary).class(CheckClass::ClosedForm)],
        ),
    ]);
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_names_are_unique_and_stable() {
        let suite = built_in_suite();
        assert!(suite.len() >= 12);
        let names: Vec<&str> = suite.iter().map(|s| s.name.as_str()).collect();
        for want in [
            "ball-curvature-n1",
            "moment-identity-ball-n2",
            "repcoords-isometry-ball",
            "annulus-curvature",
            "stirling-mu2",
        ] {
            assert!(names.contains(&want), "{want}");
        }
        let mut sorted = names.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), names.len());
    }

    #[test]
    fn scenario_seeds_depend_only_on_master_and_name() {
        let a = scenario_seed(DEFAULT_SEED, "ball-curvature-n1");
        assert_eq!(a, scenario_seed(DEFAULT_SEED, "ball-curvature-n1"));
        assert_ne!(a, scenario_seed(DEFAULT_SEED, "ball-curvature-n2"));
        assert_ne!(a, scenario_seed(7, "ball-curvature-n1"));
        assert_eq!(DEFAULT_SEED.to_be_bytes()[1..], *b"B3RGMAN");
    }

    #[test]
    fn untagged_expectation_fails_to_load() {
        let text = r#"{"name":"x","check":{"kind":"stirling-limit","mu":2.0,"m":200},
            "expected":[{"statistic":"gap","relation":"at-most","value":0.02}]}"#;
        match parse_scenarios(text) {
            Err(BergmanError::Validation { name, missing }) => {
                assert_eq!(name, "x");
                assert_eq!(missing, vec!["expected[0].provenance".to_string()]);
            }
            other => panic!("{other:?}"),
        }
        let text = r#"{"check":{"mu":2.0}}"#;
        match parse_scenarios(text) {
            Err(BergmanError::Validation { missing, .. }) => {
                assert_eq!(missing, vec!["name", "expected", "check.kind"]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn scenario_round_trips_through_json() {
        for s in built_in_suite() {
            let text = serde_json::to_string(&s).unwrap();
            let back = parse_scenarios(&text).unwrap();
            assert_eq!(back, vec![s]);
        }
    }

    #[test]
    fn stirling_scenario_passes() {
        let s = built_in_suite().into_iter().find(|s| s.name == "stirling-mu2").unwrap();
        let r = run_scenario(&s, &RunOptions::with_seed(DEFAULT_SEED));
        assert!(r.pass, "{r:?}");
        assert!(r.margin > 0.0 && r.margin < 0.02);
    }

    #[test]
    fn failures_are_recorded_not_raised() {
        let s = scenario(
            "bad",
            "",
            Check::StirlingLimit { mu: -1.0, m: 10 },
            vec![Expectation::at_most("gap", 0.02, Provenance::Elementary)],
        );
        let r = run_scenario(&s, &RunOptions::default());
        assert!(!r.pass);
        assert!(r.error.as_deref().unwrap().contains("μ > 0"));
        let mut neg = s.clone();
        neg.control = Some(vec![Expectation::at_least("gap", 0.0, Provenance::Elementary)]);
        assert!(!run_scenario(&neg, &RunOptions::default()).pass);
    }

    #[test]
    fn tolerance_override_applies_to_tagged_expectations() {
        let s = ball_curvature(1, DerivativeMethod::Auto, 1e-6);
        let mut opts = RunOptions::with_seed(3);
        opts.apply_override("closed-form=0.5").unwrap();
        let r = run_scenario(&s, &opts);
        assert!(r.expected.iter().all(|o| o.tolerance == 0.5));
        assert!(r.pass);
    }
}
