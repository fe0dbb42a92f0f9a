//! Run configuration: a small TOML document with `[model]`, `[grid]`,
//! `[audit]`, `[output]` and `[sweep]` tables.
//!
//! ```toml
//! [model]
//! type = "dual_of_spin_half"   # spin_half | dual_of_spin_half | sampled
//! omega0 = 1.0
//! omega = 0.01
//! theta = 1.5707963267948966
//!
//! [grid]
//! t_end = 314.1592653589793
//! steps = 100000
//!
//! [audit]
//! level = 0          # ascending-energy index of the primal level
//! margin = 0.1
//! degeneracy = 1e-8  # any field of `Tolerances` may be set here
//!
//! [output]
//! csv = "curve.csv"
//! summary = "summary.json"
//! plot = "curve.gp"
//! ```
//!
//! Relative paths are resolved against the directory holding the config file.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use toml::{Table, Value};

use crate::audit::DEFAULT_MARGIN;
use crate::error::{Error, Result};
use crate::scalar::Tolerances;

#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    SpinHalf { omega0: f64, omega: f64, theta: f64 },
    DualOfSpinHalf { omega0: f64, omega: f64, theta: f64 },
    Sampled { path: PathBuf },
}

impl ModelSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::SpinHalf { .. } => "spin_half",
            ModelSpec::DualOfSpinHalf { .. } => "dual_of_spin_half",
            ModelSpec::Sampled { .. } => "sampled",
        }
    }

    /// `(omega0, omega, theta)` for the spin-half kinds.
    pub fn spin_half_params(&self) -> Option<(f64, f64, f64)> {
        match *self {
            ModelSpec::SpinHalf { omega0, omega, theta } | ModelSpec::DualOfSpinHalf { omega0, omega, theta } => {
                Some((omega0, omega, theta))
            }
            ModelSpec::Sampled { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub t_end: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditSpec {
    pub level: usize,
    pub margin: f64,
    pub tolerances: Tolerances,
}

impl Default for AuditSpec {
    fn default() -> Self {
        Self { level: 0, margin: DEFAULT_MARGIN, tolerances: Tolerances::default() }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub csv: Option<PathBuf>,
    pub summary: Option<PathBuf>,
    /// Plain-text gnuplot script plotting the CSV.
    pub plot: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    Omega0,
    Omega,
    Theta,
}

impl SweepParameter {
    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::Omega0 => "omega0",
            SweepParameter::Omega => "omega",
            SweepParameter::Theta => "theta",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: ModelSpec,
    pub grid: GridSpec,
    pub audit: AuditSpec,
    pub output: OutputSpec,
    pub sweep: Option<SweepSpec>,
}

#[derive(Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
enum RawModel {
    SpinHalf { omega0: f64, omega: f64, theta: f64 },
    DualOfSpinHalf { omega0: f64, omega: f64, theta: f64 },
    Sampled { path: PathBuf },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAuditCore {
    #[serde(default)]
    level: usize,
    #[serde(default = "default_margin")]
    margin: f64,
}

fn default_margin() -> f64 {
    DEFAULT_MARGIN
}

const SECTIONS: [&str; 5] = ["model", "grid", "audit", "output", "sweep"];

const TOLERANCE_KEYS: [&str; 8] = [
    "hermitian_rel",
    "unitarity_step",
    "unitarity_accumulated",
    "state_norm",
    "degeneracy",
    "overlap_ambiguity",
    "gauge_real_part",
    "eigen_residual",
];

fn config_err(section: &str, e: impl std::fmt::Display) -> Error {
    Error::Config(format!("[{section}]: {e}"))
}

/// Applies `key=value` overrides (`key` dotted, e.g. `grid.steps=1000`). The
/// value is read as a TOML value when it parses as one and as a bare string
/// otherwise.
pub fn apply_overrides(doc: &mut Table, overrides: &[String]) -> Result<()> {
    for item in overrides {
        let (key, raw) = item
            .split_once('=')
            .ok_or_else(|| Error::Usage(format!("override `{item}` is not of the form key=value")))?;
        let key = key.trim();
        let raw = raw.trim();
        let value = toml::from_str::<Table>(&format!("v = {raw}"))
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| Value::String(raw.to_string()));
        let parts: Vec<&str> = key.split('.').collect();
        if parts.len() != 2 || parts.iter().any(|p| p.is_empty()) {
            return Err(Error::Usage(format!("override key `{key}` must be `section.name`")));
        }
        let section = doc
            .entry(parts[0].to_string())
            .or_insert_with(|| Value::Table(Table::new()))
            .as_table_mut()
            .ok_or_else(|| Error::Usage(format!("`{}` is not a table", parts[0])))?;
        section.insert(parts[1].to_string(), value);
    }
    Ok(())
}

/// Integers are accepted wherever a float is expected.
fn widen_integers(value: &mut Value, float_keys: &[&str]) {
    if let Value::Table(t) = value {
        for (k, v) in t.iter_mut() {
            if !float_keys.contains(&k.as_str()) {
                continue;
            }
            match v {
                Value::Integer(i) => *v = Value::Float(*i as f64),
                Value::Array(items) => {
                    for x in items.iter_mut() {
                        if let Value::Integer(i) = x {
                            *x = Value::Float(*i as f64);
                        }
                    }
                }
                _ => {}
            }
        }
    }
}

fn resolve(base: &Path, p: PathBuf) -> PathBuf {
    if p.is_absolute() {
        p
    } else {
        base.join(p)
    }
}

fn finite(name: &str, x: f64) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::Config(format!("`{name}` must be finite, got {x}")))
    }
}

impl RunConfig {
    /// Parses a config document; `base_dir` anchors relative paths.
    pub fn from_toml_str(text: &str, base_dir: &Path, overrides: &[String]) -> Result<Self> {
        let mut doc: Table = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        apply_overrides(&mut doc, overrides)?;
        if let Some(unknown) = doc.keys().find(|k| !SECTIONS.contains(&k.as_str())) {
            return Err(Error::Config(format!("unknown section `[{unknown}]`")));
        }
        let mut take = |name: &str| doc.remove(name);

        let mut model_v = take("model").ok_or_else(|| Error::Config("missing [model] section".into()))?;
        widen_integers(&mut model_v, &["omega0", "omega", "theta"]);
        let model = match RawModel::deserialize(model_v).map_err(|e| config_err("model", e))? {
            RawModel::SpinHalf { omega0, omega, theta } => ModelSpec::SpinHalf {
                omega0: finite("omega0", omega0)?,
                omega: finite("omega", omega)?,
                theta: finite("theta", theta)?,
            },
            RawModel::DualOfSpinHalf { omega0, omega, theta } => ModelSpec::DualOfSpinHalf {
                omega0: finite("omega0", omega0)?,
                omega: finite("omega", omega)?,
                theta: finite("theta", theta)?,
            },
            RawModel::Sampled { path } => ModelSpec::Sampled { path: resolve(base_dir, path) },
        };

        let mut grid_v = take("grid").ok_or_else(|| Error::Config("missing [grid] section".into()))?;
        widen_integers(&mut grid_v, &["t_end"]);
        let grid = GridSpec::deserialize(grid_v).map_err(|e| config_err("grid", e))?;
        if !(finite("t_end", grid.t_end)? > 0.0) {
            return Err(Error::Config(format!("`t_end` must be > 0, got {}", grid.t_end)));
        }
        if grid.steps < 2 {
            return Err(Error::Config(format!("`steps` must be >= 2, got {}", grid.steps)));
        }

        let audit = match take("audit") {
            None => AuditSpec::default(),
            Some(Value::Table(mut t)) => {
                let mut core = Table::new();
                for key in ["level", "margin"] {
                    if let Some(v) = t.remove(key) {
                        core.insert(key.to_string(), v);
                    }
                }
                let mut core_v = Value::Table(core);
                widen_integers(&mut core_v, &["margin"]);
                let core = RawAuditCore::deserialize(core_v).map_err(|e| config_err("audit", e))?;
                let mut tol_v = Value::Table(t);
                widen_integers(&mut tol_v, &TOLERANCE_KEYS);
                let tolerances = Tolerances::deserialize(tol_v).map_err(|e| config_err("audit", e))?;
                AuditSpec { level: core.level, margin: core.margin, tolerances }
            }
            Some(_) => return Err(Error::Config("[audit] must be a table".into())),
        };
        if !(finite("margin", audit.margin)? > 0.0 && audit.margin < 1.0) {
            return Err(Error::Config(format!("`margin` must lie in (0, 1), got {}", audit.margin)));
        }

        let output = match take("output") {
            None => OutputSpec::default(),
            Some(v) => {
                let o = OutputSpec::deserialize(v).map_err(|e| config_err("output", e))?;
                OutputSpec {
                    csv: o.csv.map(|p| resolve(base_dir, p)),
                    summary: o.summary.map(|p| resolve(base_dir, p)),
                    plot: o.plot.map(|p| resolve(base_dir, p)),
                }
            }
        };

        let sweep = match take("sweep") {
            None => None,
            Some(mut v) => {
                widen_integers(&mut v, &["values"]);
                let s = SweepSpec::deserialize(v).map_err(|e| config_err("sweep", e))?;
                for x in &s.values {
                    finite("values", *x)?;
                }
                Some(s)
            }
        };

        Ok(Self { model, grid, audit, output, sweep })
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::from_toml_str(&text, base, overrides)
    }
}
