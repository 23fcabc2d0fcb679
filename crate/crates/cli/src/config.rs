//! Strict TOML configuration: every key is known, typed and validated before
//! any simulation starts.

use std::path::{Path, PathBuf};

use bmv_core::gravity::BranchGeometry;
use bmv_core::mediator::ScanSettings;
use bmv_core::protocol::{PhaseConvention, ProtocolConfig, TrapParams};
use bmv_core::ProtocolConfig64;
use thiserror::Error;
use toml::{Table, Value};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unknown key `{key}`{}", suggestion_text(.suggestion))]
    UnknownKey {
        key: String,
        suggestion: Option<String>,
    },
    #[error("key `{key}`: expected {expected}")]
    Type { key: String, expected: &'static str },
    #[error("missing required key `{0}`")]
    Missing(&'static str),
    #[error("key `{key}`: {message}")]
    Invalid { key: String, message: String },
    #[error("no configuration file given (use --config PATH)")]
    NoConfig,
}

fn suggestion_text(s: &Option<String>) -> String {
    s.as_ref()
        .map(|k| format!(", did you mean `{k}`?"))
        .unwrap_or_default()
}

fn invalid(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.to_string(),
        message: message.into(),
    }
}

const TOP_LEVEL: &[&str] = &[
    "mass_kg",
    "d_m",
    "s_m",
    "t_grav_s",
    "n_dd",
    "t2_path_s",
    "shots",
    "seed",
    "phase_convention",
    "b_prime_t_per_m",
    "b0_t",
    "chi",
    "rho_nd_kg_m3",
    "readout_fidelity",
    "dphi1_rad",
    "dphi2_rad",
    "gwt_samples",
    "gwt_half_width",
    "target_phase_sum_rad",
    "sweep",
    "output",
];
const SWEEP_KEYS: &[&str] = &["param", "min", "max", "steps"];
const OUTPUT_KEYS: &[&str] = &["path", "format", "records"];

/// Physical parameters that a sweep axis may vary.
pub const SWEEPABLE: &[&str] = &[
    "mass_kg",
    "d_m",
    "s_m",
    "t_grav_s",
    "n_dd",
    "t2_path_s",
    "b_prime_t_per_m",
    "b0_t",
    "chi",
    "rho_nd_kg_m3",
    "readout_fidelity",
    "dphi1_rad",
    "dphi2_rad",
];

fn closest(key: &str, candidates: &[&str]) -> Option<String> {
    candidates
        .iter()
        .map(|c| (strsim::levenshtein(key, c), *c))
        .min()
        .filter(|(dist, c)| *dist <= 4.max(c.len() / 2))
        .map(|(_, c)| c.to_string())
}

fn reject_unknown(table: &Table, allowed: &[&str], prefix: &str) -> Result<(), ConfigError> {
    for key in table.keys() {
        if !allowed.contains(&key.as_str()) {
            let suggestion = closest(key, allowed).map(|s| format!("{prefix}{s}"));
            return Err(ConfigError::UnknownKey {
                key: format!("{prefix}{key}"),
                suggestion,
            });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepAxis {
    pub param: String,
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl SweepAxis {
    /// Evenly spaced values from `min` to `max` inclusive.
    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.min];
        }
        let last = (self.steps - 1) as f64;
        (0..self.steps)
            .map(|i| self.min + (self.max - self.min) * (i as f64 / last))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSpec {
    pub path: Option<PathBuf>,
    pub format: Format,
    /// Per-shot measurement records of the `run` command.
    pub records: Option<PathBuf>,
}

/// One point in parameter space. Required keys stay `None` until a command
/// that needs them checks for them.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    pub mass_kg: Option<f64>,
    pub d_m: Option<f64>,
    pub s_m: Option<f64>,
    pub t_grav_s: Option<f64>,
    pub n_dd: u32,
    pub t2_path_s: f64,
    pub phase_convention: PhaseConvention,
    pub b_prime_t_per_m: f64,
    pub b0_t: f64,
    pub chi: f64,
    pub rho_nd_kg_m3: f64,
    pub readout_fidelity: f64,
    pub dphi1_rad: Option<f64>,
    pub dphi2_rad: Option<f64>,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            mass_kg: None,
            d_m: None,
            s_m: None,
            t_grav_s: None,
            n_dd: 0,
            t2_path_s: f64::INFINITY,
            phase_convention: PhaseConvention::Branch,
            b_prime_t_per_m: 10.0,
            b0_t: 0.0,
            chi: 2.2e-5,
            rho_nd_kg_m3: 3500.0,
            readout_fidelity: 1.0,
            dphi1_rad: None,
            dphi2_rad: None,
        }
    }
}

impl Params {
    pub fn set(&mut self, name: &str, value: f64) -> Result<(), ConfigError> {
        match name {
            "mass_kg" => self.mass_kg = Some(value),
            "d_m" => self.d_m = Some(value),
            "s_m" => self.s_m = Some(value),
            "t_grav_s" => self.t_grav_s = Some(value),
            "n_dd" => {
                if value.fract() != 0.0 || !(0.0..=f64::from(u32::MAX)).contains(&value) {
                    return Err(invalid(name, format!("{value} is not a pulse count")));
                }
                self.n_dd = value as u32;
            }
            "t2_path_s" => self.t2_path_s = value,
            "b_prime_t_per_m" => self.b_prime_t_per_m = value,
            "b0_t" => self.b0_t = value,
            "chi" => self.chi = value,
            "rho_nd_kg_m3" => self.rho_nd_kg_m3 = value,
            "readout_fidelity" => self.readout_fidelity = value,
            "dphi1_rad" => self.dphi1_rad = Some(value),
            "dphi2_rad" => self.dphi2_rad = Some(value),
            _ => {
                return Err(ConfigError::UnknownKey {
                    key: name.to_string(),
                    suggestion: closest(name, SWEEPABLE),
                })
            }
        }
        Ok(())
    }

    pub fn geometry(&self) -> Result<BranchGeometry<f64>, ConfigError> {
        let d = self.d_m.ok_or(ConfigError::Missing("d_m"))?;
        let s = self.s_m.ok_or(ConfigError::Missing("s_m"))?;
        BranchGeometry::new(d, s).map_err(|e| invalid("s_m", format!("BranchGeometry: {e}")))
    }

    pub fn mass(&self) -> Result<f64, ConfigError> {
        let m = self.mass_kg.ok_or(ConfigError::Missing("mass_kg"))?;
        if !(m > 0.0 && m.is_finite()) {
            return Err(invalid("mass_kg", "must be positive"));
        }
        Ok(m)
    }

    pub fn trap(&self) -> Result<TrapParams<f64>, ConfigError> {
        TrapParams::new(self.b_prime_t_per_m, self.b0_t, self.chi, self.rho_nd_kg_m3).map_err(|e| {
            let key = match e.to_string() {
                m if m.contains("gradient") => "b_prime_t_per_m",
                m if m.contains("density") => "rho_nd_kg_m3",
                _ => "chi",
            };
            invalid(key, e.to_string())
        })
    }

    /// Full protocol configuration; fails with the offending key name.
    pub fn protocol_config(&self) -> Result<ProtocolConfig64, ConfigError> {
        let mass = self.mass()?;
        let geometry = self.geometry()?;
        let trap = self.trap()?;
        let t_grav = self.t_grav_s.ok_or(ConfigError::Missing("t_grav_s"))?;
        if !(t_grav >= 0.0 && t_grav.is_finite()) {
            return Err(invalid("t_grav_s", "must be finite and non-negative"));
        }
        if !(self.t2_path_s > 0.0) {
            return Err(invalid("t2_path_s", "must be positive"));
        }
        if !(0.0..=1.0).contains(&self.readout_fidelity) {
            return Err(invalid("readout_fidelity", "must lie in [0, 1]"));
        }
        let phase_override = match (self.dphi1_rad, self.dphi2_rad) {
            (Some(a), Some(b)) => Some((a, b)),
            (None, None) => None,
            (Some(_), None) => return Err(ConfigError::Missing("dphi2_rad")),
            (None, Some(_)) => return Err(ConfigError::Missing("dphi1_rad")),
        };
        Ok(ProtocolConfig {
            n_dd: self.n_dd,
            t2_path: self.t2_path_s,
            convention: self.phase_convention,
            phase_override,
            ..ProtocolConfig::new(mass, geometry, trap, t_grav)
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: Params,
    pub shots: u64,
    pub seed: u64,
    pub gwt_samples: u64,
    pub gwt_half_width: f64,
    pub target_phase_sum_rad: f64,
    pub sweep: Vec<SweepAxis>,
    pub output: OutputSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            params: Params::default(),
            shots: 10_000,
            seed: 0,
            gwt_samples: 10_000,
            gwt_half_width: ScanSettings::DEFAULT_HALF_WIDTH,
            target_phase_sum_rad: std::f64::consts::PI,
            sweep: Vec::new(),
            output: OutputSpec {
                path: None,
                format: Format::Csv,
                records: None,
            },
        }
    }
}

impl RunConfig {
    /// Every grid point of the sweep, in row-major (first axis slowest)
    /// order, with the swept values.
    pub fn grid(&self) -> Result<Vec<(Vec<f64>, Params)>, ConfigError> {
        let mut points = vec![(Vec::new(), self.params.clone())];
        for axis in &self.sweep {
            let values = axis.values();
            let mut next = Vec::with_capacity(points.len() * values.len());
            for (swept, params) in &points {
                for &v in &values {
                    let mut p = params.clone();
                    p.set(&axis.param, v)?;
                    let mut s = swept.clone();
                    s.push(v);
                    next.push((s, p));
                }
            }
            points = next;
        }
        Ok(points)
    }
}

fn number(key: &str, value: &Value) -> Result<f64, ConfigError> {
    match value {
        Value::Float(x) => Ok(*x),
        Value::Integer(i) => Ok(*i as f64),
        _ => Err(ConfigError::Type {
            key: key.to_string(),
            expected: "a number",
        }),
    }
}

fn integer(key: &str, value: &Value) -> Result<u64, ConfigError> {
    match value {
        Value::Integer(i) if *i >= 0 => Ok(*i as u64),
        Value::Integer(_) => Err(invalid(key, "must be non-negative")),
        _ => Err(ConfigError::Type {
            key: key.to_string(),
            expected: "an integer",
        }),
    }
}

fn string<'a>(key: &str, value: &'a Value) -> Result<&'a str, ConfigError> {
    value.as_str().ok_or(ConfigError::Type {
        key: key.to_string(),
        expected: "a string",
    })
}

fn parse_axis(table: &Table) -> Result<SweepAxis, ConfigError> {
    reject_unknown(table, SWEEP_KEYS, "sweep.")?;
    let field = |k: &'static str| table.get(k).ok_or(ConfigError::Missing(k));
    let param = string("sweep.param", field("param")?)?.to_string();
    if !SWEEPABLE.contains(&param.as_str()) {
        return Err(ConfigError::UnknownKey {
            suggestion: closest(&param, SWEEPABLE),
            key: param,
        });
    }
    let min = number("sweep.min", field("min")?)?;
    let max = number("sweep.max", field("max")?)?;
    let steps = integer("sweep.steps", field("steps")?)?;
    if steps < 1 {
        return Err(invalid("sweep.steps", "must be at least 1"));
    }
    if !(min.is_finite() && max.is_finite()) {
        return Err(invalid("sweep.min", "bounds must be finite"));
    }
    Ok(SweepAxis {
        param,
        min,
        max,
        steps: steps as usize,
    })
}

fn line_column(src: &str, offset: usize) -> (usize, usize) {
    let before = &src[..offset.min(src.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

/// Parses configuration text. `base` resolves relative output paths.
pub fn parse_str(src: &str, path: &Path, base: &Path) -> Result<RunConfig, ConfigError> {
    let table: Table = toml::from_str(src).map_err(|e| {
        let (line, column) = e.span().map_or((0, 0), |s| line_column(src, s.start));
        ConfigError::Parse {
            path: path.to_path_buf(),
            line,
            column,
            message: e.message().to_string(),
        }
    })?;
    reject_unknown(&table, TOP_LEVEL, "")?;

    let mut cfg = RunConfig::default();
    for (key, value) in &table {
        let key = key.as_str();
        match key {
            "sweep" => {
                cfg.sweep = match value {
                    Value::Table(t) => vec![parse_axis(t)?],
                    Value::Array(items) => items
                        .iter()
                        .map(|item| match item {
                            Value::Table(t) => parse_axis(t),
                            _ => Err(ConfigError::Type {
                                key: "sweep".into(),
                                expected: "a table of param, min, max, steps",
                            }),
                        })
                        .collect::<Result<_, _>>()?,
                    _ => {
                        return Err(ConfigError::Type {
                            key: "sweep".into(),
                            expected: "a table or an array of tables",
                        })
                    }
                }
            }
            "output" => {
                let t = value.as_table().ok_or(ConfigError::Type {
                    key: "output".into(),
                    expected: "a table",
                })?;
                reject_unknown(t, OUTPUT_KEYS, "output.")?;
                if let Some(v) = t.get("path") {
                    cfg.output.path = Some(base.join(string("output.path", v)?));
                }
                if let Some(v) = t.get("records") {
                    cfg.output.records = Some(base.join(string("output.records", v)?));
                }
                if let Some(v) = t.get("format") {
                    cfg.output.format = match string("output.format", v)? {
                        "csv" => Format::Csv,
                        "json" => Format::Json,
                        other => {
                            return Err(invalid(
                                "output.format",
                                format!("`{other}` is not csv or json"),
                            ))
                        }
                    };
                }
            }
            "phase_convention" => {
                cfg.params.phase_convention = match string(key, value)? {
                    "eq1" => PhaseConvention::Branch,
                    "eq5" => PhaseConvention::Compensated,
                    other => return Err(invalid(key, format!("`{other}` is not eq1 or eq5"))),
                }
            }
            "n_dd" => {
                let n = integer(key, value)?;
                cfg.params.n_dd = u32::try_from(n).map_err(|_| invalid(key, "too large"))?;
            }
            "shots" => cfg.shots = integer(key, value)?,
            "seed" => cfg.seed = integer(key, value)?,
            "gwt_samples" => cfg.gwt_samples = integer(key, value)?,
            "gwt_half_width" => cfg.gwt_half_width = number(key, value)?,
            "target_phase_sum_rad" => cfg.target_phase_sum_rad = number(key, value)?,
            _ => cfg.params.set(key, number(key, value)?)?,
        }
    }
    validate(&cfg)?;
    Ok(cfg)
}

fn validate(cfg: &RunConfig) -> Result<(), ConfigError> {
    if cfg.shots < 2 {
        return Err(invalid("shots", "at least 2 shots are needed"));
    }
    if cfg.gwt_samples < 1 {
        return Err(invalid("gwt_samples", "must be at least 1"));
    }
    if !(cfg.gwt_half_width > 0.0 && cfg.gwt_half_width.is_finite()) {
        return Err(invalid("gwt_half_width", "must be positive"));
    }
    if !(cfg.target_phase_sum_rad > 0.0 && cfg.target_phase_sum_rad.is_finite()) {
        return Err(invalid("target_phase_sum_rad", "must be positive"));
    }
    let mut seen = Vec::new();
    for axis in &cfg.sweep {
        if seen.contains(&&axis.param) {
            return Err(invalid(
                "sweep.param",
                format!("`{}` is swept twice", axis.param),
            ));
        }
        seen.push(&axis.param);
    }
    // Present geometry must be valid on its own, whatever the command.
    if cfg.params.d_m.is_some() && cfg.params.s_m.is_some() && cfg.sweep.is_empty() {
        cfg.params.geometry()?;
    }
    if cfg.params.mass_kg.is_some() {
        cfg.params.mass()?;
    }
    cfg.params.trap()?;
    if !(0.0..=1.0).contains(&cfg.params.readout_fidelity) {
        return Err(invalid("readout_fidelity", "must lie in [0, 1]"));
    }
    Ok(())
}

pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
    let src = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    parse_str(&src, path, base)
}
