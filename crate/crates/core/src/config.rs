//! Line-oriented `key = value` configuration files.
//!
//! ```text
//! # quench deep into the ordered phase
//! n_atoms = 200
//! nbar_rel = 4        # multiples of the threshold n̄_c
//! delta_c = -1
//! temp_init = 0.5
//! n_traj = 500
//! ```

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::integrator::Scheme;
use crate::params::{threshold_nbar, InitMode, ParamError, SampleMode, SimConfig};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate key `{key}`")]
    Duplicate { line: usize, key: String },
    #[error("line {line}: `{key}` expects {expected}, got `{value}`")]
    Type { line: usize, key: String, expected: &'static str, value: String },
    #[error("missing required key `{0}`")]
    Missing(&'static str),
    #[error("line {line}: `nbar` and `nbar_rel` are mutually exclusive")]
    BothPumps { line: usize },
    #[error("{}{source}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
    Constraint { line: Option<usize>, source: ParamError },
}

const KEYS: &[&str] = &[
    "n_atoms",
    "nbar",
    "nbar_rel",
    "delta_c",
    "omega_r",
    "temp_init",
    "dt",
    "t_end",
    "n_traj",
    "seed",
    "sample_mode",
    "sample_points",
    "init",
    "scheme",
    "guard_friction",
    "guard_well",
    "t_burn",
    "snapshots",
    "gamma_hz",
    "delta_a_over_gamma",
];

struct Entry {
    line: usize,
    value: String,
}

fn parse_value<T: std::str::FromStr>(key: &str, e: &Entry, expected: &'static str) -> Result<T, ConfigError> {
    e.value.parse().map_err(|_| ConfigError::Type {
        line: e.line,
        key: key.to_string(),
        expected,
        value: e.value.clone(),
    })
}

pub fn parse_config(text: &str) -> Result<SimConfig, ConfigError> {
    let mut entries: HashMap<String, Entry> = HashMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or(ConfigError::Syntax { line })?;
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() || value.is_empty() {
            return Err(ConfigError::Syntax { line });
        }
        if !KEYS.contains(&key) {
            return Err(ConfigError::UnknownKey { line, key: key.to_string() });
        }
        if entries.contains_key(key) {
            return Err(ConfigError::Duplicate { line, key: key.to_string() });
        }
        entries.insert(key.to_string(), Entry { line, value: value.to_string() });
    }

    let mut cfg = SimConfig::default();
    let get = |k: &str| entries.get(k);

    macro_rules! field {
        ($key:literal, $ty:ty, $expected:literal) => {
            get($key).map(|e| parse_value::<$ty>($key, e, $expected)).transpose()?
        };
    }

    cfg.n_atoms = field!("n_atoms", usize, "a positive integer").ok_or(ConfigError::Missing("n_atoms"))?;
    cfg.delta_c = field!("delta_c", f64, "a number").ok_or(ConfigError::Missing("delta_c"))?;
    let nbar = field!("nbar", f64, "a number");
    let nbar_rel = field!("nbar_rel", f64, "a number");
    cfg.nbar = match (nbar, nbar_rel) {
        (Some(_), Some(_)) => {
            let line = get("nbar").unwrap().line.max(get("nbar_rel").unwrap().line);
            return Err(ConfigError::BothPumps { line });
        }
        (Some(v), None) => v,
        (None, Some(r)) => r * threshold_nbar(cfg.delta_c),
        (None, None) => return Err(ConfigError::Missing("nbar")),
    };
    if let Some(v) = field!("omega_r", f64, "a number") {
        cfg.omega_r = v;
    }
    if let Some(v) = field!("temp_init", f64, "a number") {
        cfg.temp_init = v;
    }
    if let Some(v) = field!("dt", f64, "a number") {
        cfg.dt = v;
    }
    if let Some(v) = field!("t_end", f64, "a number") {
        cfg.t_end = v;
    }
    if let Some(v) = field!("n_traj", usize, "a positive integer") {
        cfg.n_traj = v;
    }
    if let Some(v) = field!("seed", u64, "an unsigned 64-bit integer") {
        cfg.seed = v;
    }
    if let Some(e) = get("sample_mode") {
        cfg.sample_mode = Some(match e.value.as_str() {
            "linear" => SampleMode::Linear,
            "log" => SampleMode::Log,
            _ => return Err(type_err("sample_mode", e, "`linear` or `log`")),
        });
    }
    if let Some(v) = field!("sample_points", usize, "a positive integer") {
        cfg.sample_points = v;
    }
    if let Some(e) = get("init") {
        cfg.init = match e.value.as_str() {
            "quench" => InitMode::Quench,
            "thermal" => InitMode::Thermal,
            _ => return Err(type_err("init", e, "`quench` or `thermal`")),
        };
    }
    if let Some(e) = get("scheme") {
        cfg.scheme = match e.value.as_str() {
            "strang_ou" => Scheme::StrangOu,
            "euler_maruyama" => Scheme::EulerMaruyama,
            _ => return Err(type_err("scheme", e, "`strang_ou` or `euler_maruyama`")),
        };
    }
    if let Some(v) = field!("guard_friction", f64, "a number") {
        cfg.guard_friction = v;
    }
    if let Some(v) = field!("guard_well", f64, "a number") {
        cfg.guard_well = v;
    }
    cfg.t_burn = field!("t_burn", f64, "a number");
    if let Some(v) = field!("snapshots", usize, "a non-negative integer") {
        cfg.snapshots = v;
    }
    cfg.gamma_hz = field!("gamma_hz", f64, "a number");
    cfg.delta_a_over_gamma = field!("delta_a_over_gamma", f64, "a number");

    cfg.validate().map_err(|source| {
        let key = match &source {
            ParamError::NoAtoms => "n_atoms",
            ParamError::DetuningNotNegative(_) => "delta_c",
            ParamError::RecoilOutOfRange(_) => "omega_r",
            ParamError::BadPump(_) => {
                if entries.contains_key("nbar") {
                    "nbar"
                } else {
                    "nbar_rel"
                }
            }
            ParamError::BadTemperature(_) => "temp_init",
            ParamError::BadTimeStep(_) => "dt",
            ParamError::RunTooShort { .. } => "t_end",
            ParamError::NoTrajectories => "n_traj",
            ParamError::NoSamples => "sample_points",
            ParamError::BadGuard { name, .. } => name,
            ParamError::BadBurnIn { .. } => "t_burn",
        };
        ConfigError::Constraint { line: entries.get(key).map(|e| e.line), source }
    })?;
    Ok(cfg)
}

fn type_err(key: &str, e: &Entry, expected: &'static str) -> ConfigError {
    ConfigError::Type { line: e.line, key: key.to_string(), expected, value: e.value.clone() }
}

/// Renders a configuration that [`parse_config`] reads back unchanged.
pub fn render_config(cfg: &SimConfig) -> String {
    let mut s = String::new();
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(s, "{k} = {v}");
    };
    kv("n_atoms", cfg.n_atoms.to_string());
    kv("nbar", format!("{:?}", cfg.nbar));
    kv("delta_c", format!("{:?}", cfg.delta_c));
    kv("omega_r", format!("{:?}", cfg.omega_r));
    kv("temp_init", format!("{:?}", cfg.temp_init));
    kv("dt", format!("{:?}", cfg.dt));
    kv("t_end", format!("{:?}", cfg.t_end));
    kv("n_traj", cfg.n_traj.to_string());
    kv("seed", cfg.seed.to_string());
    if let Some(m) = cfg.sample_mode {
        kv("sample_mode", m.as_str().to_string());
    }
    kv("sample_points", cfg.sample_points.to_string());
    kv("init", cfg.init.as_str().to_string());
    kv("scheme", cfg.scheme.as_str().to_string());
    kv("guard_friction", format!("{:?}", cfg.guard_friction));
    kv("guard_well", format!("{:?}", cfg.guard_well));
    if let Some(t) = cfg.t_burn {
        kv("t_burn", format!("{t:?}"));
    }
    kv("snapshots", cfg.snapshots.to_string());
    if let Some(v) = cfg.gamma_hz {
        kv("gamma_hz", format!("{v:?}"));
    }
    if let Some(v) = cfg.delta_a_over_gamma {
        kv("delta_a_over_gamma", format!("{v:?}"));
    }
    s
}
