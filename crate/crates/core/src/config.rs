//! Run configuration: flat `key = value` files plus command-line overrides.
//!
//! ```text
//! # two-level model
//! model = matrix2
//! r = 1
//! s = 1
//! theta = pi/6
//! tol.gram_tol = 1e-9
//! ```
//!
//! Real values accept plain floats and multiples of `pi` (`pi/6`, `2*pi/3`,
//! `0.5pi`). Explicit matrices are written row by row, rows separated by `;`
//! and entries by `,`, each entry a complex literal such as `1`, `-2.5i` or
//! `0.3+1e-2i`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use faer::{c64, Mat};
use thiserror::Error;

use crate::linalg::CMat;
use crate::model::{GridSpec, ModelError, ModelParams};
use crate::verify::Tolerances;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("line {line}: expected `key = value`, got {text:?}")]
    Syntax { line: usize, text: String },
    #[error("unknown key {0:?}")]
    UnknownKey(String),
    #[error("bad value {value:?} for {key}: {reason}")]
    BadValue {
        key: String,
        value: String,
        reason: String,
    },
    #[error("missing key {0:?}")]
    Missing(String),
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

const PLAIN_KEYS: [&str; 19] = [
    "model",
    "nu",
    "L",
    "N",
    "r",
    "s",
    "theta",
    "h",
    "p",
    "w",
    "levels",
    "format",
    "out",
    "no_timestamp",
    "sweep.param",
    "sweep.from",
    "sweep.to",
    "sweep.steps",
    "label",
];

fn known_key(key: &str) -> bool {
    PLAIN_KEYS.contains(&key)
        || key
            .strip_prefix("tol.")
            .is_some_and(|t| Tolerances::NAMES.contains(&t))
}

/// Raw key-value pairs; later insertions override earlier ones.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeyValues {
    entries: BTreeMap<String, String>,
}

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut kv = Self::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: idx + 1,
                text: raw.to_string(),
            })?;
            kv.set(key.trim(), value.trim())?;
        }
        Ok(kv)
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        if !known_key(key) {
            return Err(ConfigError::UnknownKey(key.to_string()));
        }
        self.entries.insert(key.to_string(), value.to_string());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    fn real(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        self.get(key)
            .map(|v| {
                parse_real(v).map_err(|reason| ConfigError::BadValue {
                    key: key.into(),
                    value: v.into(),
                    reason,
                })
            })
            .transpose()
    }

    fn real_or(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        Ok(self.real(key)?.unwrap_or(default))
    }

    fn count(&self, key: &str) -> Result<Option<usize>, ConfigError> {
        self.get(key)
            .map(|v| {
                v.parse::<usize>().map_err(|e| ConfigError::BadValue {
                    key: key.into(),
                    value: v.into(),
                    reason: e.to_string(),
                })
            })
            .transpose()
    }

    fn flag(&self, key: &str) -> Result<bool, ConfigError> {
        match self.get(key) {
            None => Ok(false),
            Some("true" | "1" | "yes") => Ok(true),
            Some("false" | "0" | "no") => Ok(false),
            Some(v) => Err(ConfigError::BadValue {
                key: key.into(),
                value: v.into(),
                reason: "expected true or false".into(),
            }),
        }
    }
}

/// Plain float or `[coef][*]pi[/den]`.
pub fn parse_real(text: &str) -> Result<f64, String> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if let Ok(x) = s.parse::<f64>() {
        return Ok(x);
    }
    let lower = s.to_ascii_lowercase();
    let Some(at) = lower.find("pi") else {
        return Err("not a number".into());
    };
    let coef_text = lower[..at].trim_end_matches('*');
    let coef = match coef_text {
        "" | "+" => 1.0,
        "-" => -1.0,
        c => c.parse::<f64>().map_err(|_| format!("bad coefficient {c:?}"))?,
    };
    let rest = &lower[at + 2..];
    let den = if rest.is_empty() {
        1.0
    } else {
        let d = rest
            .strip_prefix('/')
            .ok_or_else(|| format!("unexpected {rest:?} after pi"))?;
        d.parse::<f64>().map_err(|_| format!("bad denominator {d:?}"))?
    };
    Ok(coef * PI / den)
}

/// `a`, `bi`, `a+bi`, `a-bi`, `i`, `-i`.
pub fn parse_complex(text: &str) -> Result<c64, String> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if s.is_empty() {
        return Err("empty entry".into());
    }
    let Some(body) = s.strip_suffix(['i', 'j']) else {
        return s
            .parse::<f64>()
            .map(|x| c64::new(x, 0.0))
            .map_err(|_| format!("bad number {s:?}"));
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let (re_text, im_text) = match split {
        Some(k) => (&body[..k], &body[k..]),
        None => ("", body),
    };
    let re = if re_text.is_empty() {
        0.0
    } else {
        re_text.parse::<f64>().map_err(|_| format!("bad real part {re_text:?}"))?
    };
    let im = match im_text {
        "" | "+" => 1.0,
        "-" => -1.0,
        t => t.parse::<f64>().map_err(|_| format!("bad imaginary part {t:?}"))?,
    };
    Ok(c64::new(re, im))
}

pub fn parse_matrix(text: &str) -> Result<CMat, String> {
    let rows: Vec<Vec<c64>> = text
        .split(';')
        .map(str::trim)
        .filter(|r| !r.is_empty())
        .map(|r| r.split(',').map(parse_complex).collect::<Result<Vec<_>, _>>())
        .collect::<Result<_, _>>()?;
    let n = rows.len();
    if n == 0 {
        return Err("empty matrix".into());
    }
    let m = rows[0].len();
    if let Some(bad) = rows.iter().position(|r| r.len() != m) {
        return Err(format!("row {bad} has {} entries, expected {m}", rows[bad].len()));
    }
    Ok(Mat::from_fn(n, m, |i, j| rows[i][j]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            _ => Err(format!("unknown format {s:?} (json | csv)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    Nu,
    Theta,
    S,
    R,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Nu => "nu",
            SweepParam::Theta => "theta",
            SweepParam::S => "s",
            SweepParam::R => "r",
        }
    }

    /// The model with this parameter set to `value`.
    pub fn apply(self, model: &ModelParams, value: f64) -> Result<ModelParams, ConfigError> {
        match (self, model) {
            (SweepParam::Nu, ModelParams::Grid { grid, .. }) => Ok(ModelParams::Grid {
                grid: *grid,
                nu: value,
            }),
            (SweepParam::Theta, ModelParams::Matrix2 { r, s, .. }) => Ok(ModelParams::Matrix2 {
                r: *r,
                s: *s,
                theta: value,
            }),
            (SweepParam::S, ModelParams::Matrix2 { r, theta, .. }) => Ok(ModelParams::Matrix2 {
                r: *r,
                s: value,
                theta: *theta,
            }),
            (SweepParam::R, ModelParams::Matrix2 { s, theta, .. }) => Ok(ModelParams::Matrix2 {
                r: value,
                s: *s,
                theta: *theta,
            }),
            _ => Err(ConfigError::Invalid(format!(
                "sweep parameter {} does not apply to the {} model",
                self.name(),
                model.variant_name()
            ))),
        }
    }
}

impl std::str::FromStr for SweepParam {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "nu" => Ok(SweepParam::Nu),
            "theta" => Ok(SweepParam::Theta),
            "s" => Ok(SweepParam::S),
            "r" => Ok(SweepParam::R),
            _ => Err(format!("unknown sweep parameter {s:?} (nu | theta | s | r)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSpec {
    pub param: SweepParam,
    pub from: f64,
    pub to: f64,
    pub steps: usize,
}

impl SweepSpec {
    pub fn new(param: SweepParam, from: f64, to: f64, steps: usize) -> Result<Self, ConfigError> {
        if !(from < to) {
            return Err(ConfigError::Invalid(format!("sweep needs from < to, got [{from}, {to}]")));
        }
        if steps < 2 {
            return Err(ConfigError::Invalid(format!("sweep needs at least 2 steps, got {steps}")));
        }
        Ok(Self {
            param,
            from,
            to,
            steps,
        })
    }

    pub fn points(&self) -> Vec<f64> {
        let h = (self.to - self.from) / (self.steps - 1) as f64;
        (0..self.steps)
            .map(|i| if i + 1 == self.steps { self.to } else { self.from + i as f64 * h })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: ModelParams,
    pub tolerances: Tolerances,
    pub levels: Option<usize>,
    pub format: Option<Format>,
    pub out: Option<PathBuf>,
    pub no_timestamp: bool,
    pub sweep: Option<SweepSpec>,
}

/// Low-lying levels analysed when `levels` is not given.
pub const DEFAULT_LEVELS: usize = 6;

/// Grid defaults `(L, N, nu)`: the cubic oscillator.
pub const DEFAULT_GRID: (f64, usize, f64) = (12.0, 601, 1.0);

fn infer_model(kv: &KeyValues) -> Result<String, ConfigError> {
    if let Some(m) = kv.get("model") {
        return Ok(m.to_string());
    }
    if kv.contains("h") {
        Ok("explicit".into())
    } else if ["nu", "L", "N"].iter().any(|k| kv.contains(k)) {
        Ok("grid".into())
    } else if ["r", "s", "theta"].iter().any(|k| kv.contains(k)) {
        Ok("matrix2".into())
    } else {
        Err(ConfigError::Missing("model".into()))
    }
}

fn matrix_value(kv: &KeyValues, key: &str) -> Result<CMat, ConfigError> {
    let text = kv.get(key).ok_or_else(|| ConfigError::Missing(key.into()))?;
    parse_matrix(text).map_err(|reason| ConfigError::BadValue {
        key: key.into(),
        value: text.into(),
        reason,
    })
}

fn parsed<T: std::str::FromStr<Err = String>>(kv: &KeyValues, key: &str) -> Result<Option<T>, ConfigError> {
    kv.get(key)
        .map(|v| {
            v.parse::<T>().map_err(|reason| ConfigError::BadValue {
                key: key.into(),
                value: v.into(),
                reason,
            })
        })
        .transpose()
}

impl RunConfig {
    /// Resolve a key-value set into a validated configuration. The model is
    /// built once here so invalid parameters surface as configuration errors.
    pub fn from_key_values(kv: &KeyValues) -> Result<Self, ConfigError> {
        let model = match infer_model(kv)?.as_str() {
            "grid" => {
                let (l, n, nu) = DEFAULT_GRID;
                let grid = GridSpec::new(kv.real_or("L", l)?, kv.count("N")?.unwrap_or(n))?;
                ModelParams::Grid {
                    grid,
                    nu: kv.real_or("nu", nu)?,
                }
            }
            "matrix2" => ModelParams::Matrix2 {
                r: kv.real_or("r", 1.0)?,
                s: kv.real_or("s", 1.0)?,
                theta: kv.real_or("theta", PI / 6.0)?,
            },
            "explicit" => {
                let hamiltonian = matrix_value(kv, "h")?;
                let parity = match kv.get("p") {
                    Some(_) => matrix_value(kv, "p")?,
                    None => crate::linalg::identity(hamiltonian.nrows()),
                };
                ModelParams::Explicit {
                    hamiltonian,
                    parity,
                    metric_weight: kv.real_or("w", 1.0)?,
                }
            }
            other => {
                return Err(ConfigError::BadValue {
                    key: "model".into(),
                    value: other.into(),
                    reason: "expected grid | matrix2 | explicit".into(),
                })
            }
        };
        let triple = model.build()?;

        let mut tolerances = Tolerances::default();
        for name in Tolerances::NAMES {
            if let Some(v) = kv.real(&format!("tol.{name}"))? {
                if !(v.is_finite() && v > 0.0) {
                    return Err(ConfigError::Invalid(format!("tolerance {name} must be positive, got {v}")));
                }
                tolerances.set(name, v);
            }
        }

        let levels = kv.count("levels")?;
        if let Some(k) = levels {
            if k > triple.dimension() {
                return Err(ConfigError::Invalid(format!(
                    "levels = {k} exceeds the dimension {}",
                    triple.dimension()
                )));
            }
        }

        let sweep = match parsed::<SweepParam>(kv, "sweep.param")? {
            None => None,
            Some(param) => {
                let from = kv.real("sweep.from")?.ok_or_else(|| ConfigError::Missing("sweep.from".into()))?;
                let to = kv.real("sweep.to")?.ok_or_else(|| ConfigError::Missing("sweep.to".into()))?;
                let steps = kv.count("sweep.steps")?.unwrap_or(21);
                let spec = SweepSpec::new(param, from, to, steps)?;
                param.apply(&model, from)?.build()?;
                param.apply(&model, to)?.build()?;
                Some(spec)
            }
        };

        Ok(Self {
            model,
            tolerances,
            levels,
            format: parsed::<Format>(kv, "format")?,
            out: kv.get("out").map(PathBuf::from),
            no_timestamp: kv.flag("no_timestamp")?,
            sweep,
        })
    }

    /// Requested levels, defaulting to `min(N, DEFAULT_LEVELS)`.
    pub fn levels_or_default(&self, dimension: usize) -> usize {
        self.levels.unwrap_or(DEFAULT_LEVELS).min(dimension)
    }
}
