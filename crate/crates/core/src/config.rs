//! Run configuration: flat `section.key = value` text, parsed as TOML.
//!
//! Tables and dotted keys are equivalent, so `[grid]\nn = 800` and
//! `grid.n = 800` give the same configuration. Overrides from the command
//! line use the same dotted names.

use std::collections::BTreeMap;
use std::fmt;

use serde_json::Value as Json;
use thiserror::Error;
use toml::Value;

use crate::csf::CsfConfig;
use crate::grid::Grid1D;
use crate::metric::BreatherParams;
use crate::ricci::{BoundaryKind, BoundarySpec, InitialCondition, SolverConfig};
use crate::timestep::Scheme;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("{0}")]
    Parse(String),
    #[error("missing key '{0}'")]
    Missing(String),
    #[error("key '{key}': {reason}")]
    Invalid { key: String, reason: String },
    #[error("unknown key '{0}'")]
    Unknown(String),
}

fn invalid(key: &str, reason: impl fmt::Display) -> ConfigError {
    ConfigError::Invalid { key: key.to_string(), reason: reason.to_string() }
}

/// Dotted key to value.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FlatConfig(pub BTreeMap<String, Value>);

impl FlatConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        let mut out = BTreeMap::new();
        flatten("", table, &mut out);
        Ok(Self(out))
    }

    /// Read the `config` object of a run manifest.
    pub fn from_manifest(json: &Json) -> Result<Self, ConfigError> {
        let obj = json
            .get("config")
            .and_then(Json::as_object)
            .ok_or_else(|| ConfigError::Parse("manifest has no 'config' object".into()))?;
        let mut out = BTreeMap::new();
        for (k, v) in obj {
            out.insert(k.clone(), json_to_toml(v).ok_or_else(|| invalid(k, "unsupported value"))?);
        }
        Ok(Self(out))
    }

    /// Apply `key=value`; the value is read as TOML, or as a bare string.
    pub fn apply_override(&mut self, spec: &str) -> Result<(), ConfigError> {
        let (key, raw) = spec
            .split_once('=')
            .ok_or_else(|| ConfigError::Parse(format!("override '{spec}' is not of the form key=value")))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(ConfigError::Parse(format!("override '{spec}' has an empty key")));
        }
        let raw = raw.trim();
        let value = format!("v = {raw}")
            .parse::<toml::Table>()
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| Value::String(raw.to_string()));
        self.0.insert(key.to_string(), value);
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.0.get(key)
    }

    fn f64_opt(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::Float(v)) => Ok(Some(*v)),
            Some(Value::Integer(v)) => Ok(Some(*v as f64)),
            Some(other) => Err(invalid(key, format!("expected a number, got {other}"))),
        }
    }

    fn f64_or(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        Ok(self.f64_opt(key)?.unwrap_or(default))
    }

    fn f64_req(&self, key: &str) -> Result<f64, ConfigError> {
        self.f64_opt(key)?.ok_or_else(|| ConfigError::Missing(key.to_string()))
    }

    fn usize_req(&self, key: &str) -> Result<usize, ConfigError> {
        match self.get(key) {
            None => Err(ConfigError::Missing(key.to_string())),
            Some(Value::Integer(v)) if *v > 0 => Ok(*v as usize),
            Some(other) => Err(invalid(key, format!("expected a positive integer, got {other}"))),
        }
    }

    fn usize_or(&self, key: &str, default: usize) -> Result<usize, ConfigError> {
        if self.get(key).is_none() {
            return Ok(default);
        }
        self.usize_req(key)
    }

    fn bool_or(&self, key: &str, default: bool) -> Result<bool, ConfigError> {
        match self.get(key) {
            None => Ok(default),
            Some(Value::Boolean(b)) => Ok(*b),
            Some(other) => Err(invalid(key, format!("expected true or false, got {other}"))),
        }
    }

    fn str_opt(&self, key: &str) -> Result<Option<&str>, ConfigError> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s)),
            Some(other) => Err(invalid(key, format!("expected a string, got {other}"))),
        }
    }

    fn f64_list(&self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::Array(items)) => items
                .iter()
                .map(|v| match v {
                    Value::Float(x) => Ok(*x),
                    Value::Integer(x) => Ok(*x as f64),
                    other => Err(invalid(key, format!("expected numbers, got {other}"))),
                })
                .collect::<Result<Vec<_>, _>>()
                .map(Some),
            Some(other) => Err(invalid(key, format!("expected an array of numbers, got {other}"))),
        }
    }
}

fn flatten(prefix: &str, table: toml::Table, out: &mut BTreeMap<String, Value>) {
    for (k, v) in table {
        let key = if prefix.is_empty() { k } else { format!("{prefix}.{k}") };
        match v {
            Value::Table(t) => flatten(&key, t, out),
            other => {
                out.insert(key, other);
            }
        }
    }
}

fn json_to_toml(v: &Json) -> Option<Value> {
    Some(match v {
        Json::Bool(b) => Value::Boolean(*b),
        Json::Number(n) if n.is_i64() => Value::Integer(n.as_i64()?),
        Json::Number(n) => Value::Float(n.as_f64()?),
        Json::String(s) => Value::String(s.clone()),
        Json::Array(items) => Value::Array(items.iter().map(json_to_toml).collect::<Option<Vec<_>>>()?),
        _ => return None,
    })
}

fn toml_to_json(v: &Value) -> Json {
    match v {
        Value::Boolean(b) => Json::Bool(*b),
        Value::Integer(i) => Json::from(*i),
        Value::Float(f) => Json::from(*f),
        Value::String(s) => Json::String(s.clone()),
        Value::Array(items) => Json::Array(items.iter().map(toml_to_json).collect()),
        other => Json::String(other.to_string()),
    }
}

const KNOWN_KEYS: &[&str] = &[
    "grid.x_min",
    "grid.x_max",
    "grid.n",
    "ic.kind",
    "ic.lambda",
    "ic.alpha",
    "ic.t0",
    "ic.value",
    "solver.scheme",
    "solver.dt_init",
    "solver.dt_max",
    "solver.error_tol",
    "solver.newton_tol",
    "solver.newton_max_iter",
    "solver.adaptive",
    "bc.left.kind",
    "bc.left.epsilon",
    "bc.right.kind",
    "bc.right.epsilon",
    "run.times",
    "run.label",
    "run.sensitivity_refs",
    "verify.kind",
    "verify.shift",
    "verify.t",
    "verify.window",
    "verify.times",
];

/// What gets evolved.
#[derive(Debug, Clone, PartialEq)]
pub enum Problem {
    Ricci { ic: InitialCondition, solver: SolverConfig },
    Csf { solver: CsfConfig },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VerifyKind {
    Breather,
    SolitonDefect,
    Cusp,
    Csf,
}

impl VerifyKind {
    pub fn name(self) -> &'static str {
        match self {
            VerifyKind::Breather => "breather",
            VerifyKind::SolitonDefect => "soliton-defect",
            VerifyKind::Cusp => "cusp",
            VerifyKind::Csf => "csf",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifySpec {
    pub kind: VerifyKind,
    pub shift: f64,
    pub t: f64,
    pub window: [f64; 2],
    /// Extra snapshot times kept for later checks on the same run.
    pub times: Vec<f64>,
}

impl VerifySpec {
    /// Snapshot times the check compares.
    pub fn required_times(&self, lambda: f64) -> Vec<f64> {
        match self.kind {
            VerifyKind::Breather | VerifyKind::SolitonDefect => {
                vec![self.t * lambda.powf(-self.shift), self.t]
            }
            VerifyKind::Cusp => vec![self.t],
            VerifyKind::Csf => vec![self.t, std::f64::consts::E.powi(2) * self.t],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub grid: Grid1D,
    pub problem: Problem,
    /// Requested snapshot times, before verification times are merged in.
    pub times: Vec<f64>,
    pub verify: Option<VerifySpec>,
    pub label: Option<String>,
    pub sensitivity_refs: Vec<String>,
}

fn parse_boundary(flat: &FlatConfig, side: &str, default: BoundaryKind) -> Result<BoundaryKind, ConfigError> {
    let key = format!("bc.{side}.kind");
    let eps_key = format!("bc.{side}.epsilon");
    let eps = flat.f64_opt(&eps_key)?;
    let kind = match flat.str_opt(&key)? {
        None => default,
        Some("frozen") => BoundaryKind::Frozen,
        Some("cusp") => BoundaryKind::Cusp { epsilon: eps },
        Some("cusp-neumann") => BoundaryKind::CuspNeumann,
        Some(other) => return Err(invalid(&key, format!("unknown boundary kind '{other}' (frozen, cusp, cusp-neumann)"))),
    };
    if eps.is_some() && !matches!(kind, BoundaryKind::Cusp { .. }) {
        return Err(invalid(&eps_key, "only cusp boundaries take an epsilon"));
    }
    Ok(kind)
}

fn parse_scheme(flat: &FlatConfig, default: Scheme) -> Result<Scheme, ConfigError> {
    match flat.str_opt("solver.scheme")? {
        None => Ok(default),
        Some(s) => s.parse().map_err(|e: String| invalid("solver.scheme", e)),
    }
}

fn parse_window(flat: &FlatConfig, key: &str) -> Result<[f64; 2], ConfigError> {
    let w = flat.f64_list(key)?.ok_or_else(|| ConfigError::Missing(key.to_string()))?;
    match w[..] {
        [a, b] if a <= b => Ok([a, b]),
        _ => Err(invalid(key, format!("expected [x_a, x_b] with x_a <= x_b, got {w:?}"))),
    }
}

impl RunConfig {
    pub fn from_flat(flat: &FlatConfig) -> Result<Self, ConfigError> {
        if let Some(k) = flat.0.keys().find(|k| !KNOWN_KEYS.contains(&k.as_str())) {
            return Err(ConfigError::Unknown(k.clone()));
        }
        let n = flat.usize_req("grid.n")?;
        let x_min = flat.f64_req("grid.x_min")?;
        let x_max = flat.f64_req("grid.x_max")?;
        let grid = Grid1D::new(x_min, x_max, n).map_err(|e| invalid("grid", e))?;

        let kind = flat.str_opt("ic.kind")?.ok_or_else(|| ConfigError::Missing("ic.kind".into()))?;
        let problem = if kind == "csf" {
            let d = CsfConfig::default();
            let solver = CsfConfig {
                scheme: parse_scheme(flat, d.scheme)?,
                dt_init: flat.f64_or("solver.dt_init", d.dt_init)?,
                dt_max: flat.f64_or("solver.dt_max", d.dt_max)?,
                error_tol: flat.f64_or("solver.error_tol", d.error_tol)?,
                adaptive: flat.bool_or("solver.adaptive", d.adaptive)?,
            };
            solver.validate().map_err(|e| invalid("solver", e))?;
            Problem::Csf { solver }
        } else {
            let ic = match kind {
                "breather" => {
                    let lambda = flat.f64_or("ic.lambda", BreatherParams::default_breather().lambda)?;
                    BreatherParams::new(lambda, 1.0).map_err(|e| invalid("ic.lambda", e))?;
                    InitialCondition::Breather { lambda }
                }
                "cone" => InitialCondition::Cone { alpha: flat.f64_or("ic.alpha", 1.0)? },
                "cusp" => {
                    let t0 = flat.f64_req("ic.t0")?;
                    if !(t0 > 0.0) {
                        return Err(invalid("ic.t0", "must be positive"));
                    }
                    InitialCondition::Cusp { t0 }
                }
                "constant" => InitialCondition::Constant { value: flat.f64_req("ic.value")? },
                other => {
                    return Err(invalid(
                        "ic.kind",
                        format!("unknown initial condition '{other}' (breather, cone, cusp, constant, csf)"),
                    ))
                }
            };
            let d = SolverConfig::default();
            let default_bc = match ic {
                InitialCondition::Cusp { .. } => BoundarySpec { left: BoundaryKind::cusp(), right: BoundaryKind::cusp() },
                InitialCondition::Constant { .. } => BoundarySpec::frozen(),
                _ => d.boundary,
            };
            let solver = SolverConfig {
                scheme: parse_scheme(flat, d.scheme)?,
                dt_init: flat.f64_or("solver.dt_init", d.dt_init)?,
                dt_max: flat.f64_or("solver.dt_max", d.dt_max)?,
                error_tol: flat.f64_or("solver.error_tol", d.error_tol)?,
                newton_tol: flat.f64_or("solver.newton_tol", d.newton_tol)?,
                newton_max_iter: flat.usize_or("solver.newton_max_iter", d.newton_max_iter)?,
                adaptive: flat.bool_or("solver.adaptive", d.adaptive)?,
                boundary: BoundarySpec {
                    left: parse_boundary(flat, "left", default_bc.left)?,
                    right: parse_boundary(flat, "right", default_bc.right)?,
                },
            };
            solver.validate().map_err(|e| invalid("solver", e))?;
            solver.boundary.validate(&grid).map_err(|e| invalid("bc", e))?;
            Problem::Ricci { ic, solver }
        };

        let verify = match flat.str_opt("verify.kind")? {
            None => None,
            Some(k) => {
                let kind = match k {
                    "breather" => VerifyKind::Breather,
                    "soliton-defect" => VerifyKind::SolitonDefect,
                    "cusp" => VerifyKind::Cusp,
                    "csf" => VerifyKind::Csf,
                    other => {
                        return Err(invalid(
                            "verify.kind",
                            format!("unknown check '{other}' (breather, soliton-defect, cusp, csf)"),
                        ))
                    }
                };
                let is_csf = matches!(problem, Problem::Csf { .. });
                if is_csf != (kind == VerifyKind::Csf) {
                    return Err(invalid("verify.kind", format!("'{k}' does not apply to ic.kind = '{kind_name}'", kind_name = kind_str(&problem))));
                }
                let t = flat.f64_req("verify.t")?;
                if !(t > 0.0) {
                    return Err(invalid("verify.t", "must be positive"));
                }
                let times = flat.f64_list("verify.times")?.unwrap_or_default();
                if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
                    return Err(invalid("verify.times", "times must be finite and >= 0"));
                }
                Some(VerifySpec {
                    kind,
                    shift: flat.f64_or("verify.shift", 1.0)?,
                    t,
                    window: parse_window(flat, "verify.window")?,
                    times,
                })
            }
        };

        let default_times = match &problem {
            Problem::Csf { .. } => vec![0.0, 0.01, std::f64::consts::E.powi(2) * 0.01],
            Problem::Ricci { ic, .. } => vec![ic.start_time()],
        };
        let times = flat.f64_list("run.times")?.unwrap_or(default_times);
        let label = flat.str_opt("run.label")?.map(str::to_string);
        let sensitivity_refs = match flat.get("run.sensitivity_refs") {
            None => vec![],
            Some(Value::Array(items)) => items
                .iter()
                .map(|v| v.as_str().map(str::to_string).ok_or_else(|| invalid("run.sensitivity_refs", "expected strings")))
                .collect::<Result<_, _>>()?,
            Some(other) => return Err(invalid("run.sensitivity_refs", format!("expected an array of strings, got {other}"))),
        };
        Ok(Self { grid, problem, times, verify, label, sensitivity_refs })
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Self::from_flat(&FlatConfig::parse(text)?)
    }

    /// Breather scale for shift checks; `e²` when the data carries none.
    pub fn lambda(&self) -> f64 {
        match &self.problem {
            Problem::Ricci { ic: InitialCondition::Breather { lambda }, .. } => *lambda,
            Problem::Ricci { ic: InitialCondition::Cone { alpha }, .. } => (2.0 * alpha).exp(),
            _ => BreatherParams::default_breather().lambda,
        }
    }

    /// Requested times merged with the ones the verification block needs,
    /// sorted and without near-duplicates.
    pub fn snapshot_times(&self) -> Vec<f64> {
        let mut t = self.times.clone();
        if let Some(v) = &self.verify {
            t.extend(v.required_times(self.lambda()));
            t.extend(&v.times);
        }
        t.sort_by(f64::total_cmp);
        t.dedup_by(|b, a| (*b - *a).abs() <= 1e-12 * a.abs().max(1e-300));
        t
    }

    /// Every parameter, defaults included, as dotted keys.
    pub fn to_flat(&self) -> FlatConfig {
        let mut m = BTreeMap::new();
        let mut put = |k: &str, v: Value| {
            m.insert(k.to_string(), v);
        };
        put("grid.x_min", Value::Float(self.grid.x_min()));
        put("grid.x_max", Value::Float(self.grid.x_max()));
        put("grid.n", Value::Integer(self.grid.n() as i64));
        match &self.problem {
            Problem::Csf { solver } => {
                put("ic.kind", Value::String("csf".into()));
                put("solver.scheme", Value::String(solver.scheme.name().into()));
                put("solver.dt_init", Value::Float(solver.dt_init));
                put("solver.dt_max", Value::Float(solver.dt_max));
                put("solver.error_tol", Value::Float(solver.error_tol));
                put("solver.adaptive", Value::Boolean(solver.adaptive));
            }
            Problem::Ricci { ic, solver } => {
                match ic {
                    InitialCondition::Breather { lambda } => {
                        put("ic.kind", Value::String("breather".into()));
                        put("ic.lambda", Value::Float(*lambda));
                    }
                    InitialCondition::Cone { alpha } => {
                        put("ic.kind", Value::String("cone".into()));
                        put("ic.alpha", Value::Float(*alpha));
                    }
                    InitialCondition::Cusp { t0 } => {
                        put("ic.kind", Value::String("cusp".into()));
                        put("ic.t0", Value::Float(*t0));
                    }
                    InitialCondition::Constant { value } => {
                        put("ic.kind", Value::String("constant".into()));
                        put("ic.value", Value::Float(*value));
                    }
                    InitialCondition::Custom { label } => put("ic.kind", Value::String(label.clone())),
                }
                put("solver.scheme", Value::String(solver.scheme.name().into()));
                put("solver.dt_init", Value::Float(solver.dt_init));
                put("solver.dt_max", Value::Float(solver.dt_max));
                put("solver.error_tol", Value::Float(solver.error_tol));
                put("solver.newton_tol", Value::Float(solver.newton_tol));
                put("solver.newton_max_iter", Value::Integer(solver.newton_max_iter as i64));
                put("solver.adaptive", Value::Boolean(solver.adaptive));
                for (side, kind) in [("left", solver.boundary.left), ("right", solver.boundary.right)] {
                    let name = match kind {
                        BoundaryKind::Frozen => "frozen",
                        BoundaryKind::Cusp { epsilon } => {
                            if let Some(e) = epsilon {
                                put(&format!("bc.{side}.epsilon"), Value::Float(e));
                            }
                            "cusp"
                        }
                        BoundaryKind::CuspNeumann => "cusp-neumann",
                    };
                    put(&format!("bc.{side}.kind"), Value::String(name.into()));
                }
            }
        }
        put("run.times", Value::Array(self.times.iter().map(|t| Value::Float(*t)).collect()));
        if let Some(l) = &self.label {
            put("run.label", Value::String(l.clone()));
        }
        if !self.sensitivity_refs.is_empty() {
            put(
                "run.sensitivity_refs",
                Value::Array(self.sensitivity_refs.iter().map(|s| Value::String(s.clone())).collect()),
            );
        }
        if let Some(v) = &self.verify {
            put("verify.kind", Value::String(v.kind.name().into()));
            put("verify.shift", Value::Float(v.shift));
            put("verify.t", Value::Float(v.t));
            put("verify.window", Value::Array(v.window.iter().map(|x| Value::Float(*x)).collect()));
            if !v.times.is_empty() {
                put("verify.times", Value::Array(v.times.iter().map(|t| Value::Float(*t)).collect()));
            }
        }
        FlatConfig(m)
    }

    /// The flat echo as a JSON object (for manifests).
    pub fn echo_json(&self) -> Json {
        Json::Object(self.to_flat().0.iter().map(|(k, v)| (k.clone(), toml_to_json(v))).collect())
    }

    /// The flat echo as `key = value` lines.
    pub fn echo_text(&self) -> String {
        self.to_flat().0.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

fn kind_str(p: &Problem) -> &'static str {
    match p {
        Problem::Csf { .. } => "csf",
        Problem::Ricci { ic, .. } => match ic {
            InitialCondition::Breather { .. } => "breather",
            InitialCondition::Cone { .. } => "cone",
            InitialCondition::Cusp { .. } => "cusp",
            InitialCondition::Constant { .. } => "constant",
            InitialCondition::Custom { .. } => "custom",
        },
    }
}
