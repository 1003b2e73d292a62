//! Flat `key = value` run configuration.
//!
//! Entries are separated by newlines or commas; `#` starts a comment. Every
//! key is optional. Unknown and repeated keys are rejected.
//!
//! | key | default |
//! |-----|---------|
//! | `g` | 1 |
//! | `delta` | 15 |
//! | `k` | `ceil(5 δ²/g²)` |
//! | `k_prime` | `ceil(5 δ²/(4 g²))` |
//! | `nbar` | 0 |
//! | `n_max` | 8 |
//! | `model` | `effective` (`full`) |
//! | `mode` | `physical-pulse` (`as-published`) |
//! | `dt_initial` | 0.01 |
//! | `tolerance` | 1e-8 |
//! | `max_halvings` | 20 |
//! | `output_path` | none (stdout) |
//! | `output_format` | `json` (`csv`) |
//! | `drive_on_window2` | true |
//! | `phase_optimized` | false |

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use squid_qed::dynamics::IntegratorConfig;
use squid_qed::hamiltonians::{min_k, min_k_prime, DEFAULT_DELTA, DEFAULT_DRIVE_RATIO, DEFAULT_N_MAX};
use squid_qed::protocol::{Model, PrepMode, ProtocolOptions};
use squid_qed::SystemParams;

use crate::error::ConfigError;

pub const KEYS: [&str; 15] = [
    "g",
    "delta",
    "k",
    "k_prime",
    "nbar",
    "n_max",
    "model",
    "mode",
    "dt_initial",
    "tolerance",
    "max_halvings",
    "output_path",
    "output_format",
    "drive_on_window2",
    "phase_optimized",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            other => Err(format!("unknown format `{other}` (expected `json` or `csv`)")),
        }
    }
}

impl std::fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            OutputFormat::Json => "json",
            OutputFormat::Csv => "csv",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: SystemParams,
    pub model: Model,
    pub mode: PrepMode,
    pub integrator: IntegratorConfig,
    pub output_path: Option<PathBuf>,
    pub output_format: OutputFormat,
    pub drive_on_window2: bool,
    pub phase_optimized: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig::from_document(&Document::default()).expect("defaults are valid")
    }
}

impl RunConfig {
    pub fn protocol_options(&self) -> ProtocolOptions {
        ProtocolOptions { drive_on_window2: self.drive_on_window2, ..ProtocolOptions::default() }
    }

    /// Builds a validated config from raw entries, applying defaults.
    pub fn from_document(doc: &Document) -> Result<Self, ConfigError> {
        let g: f64 = doc.get_parsed("g")?.unwrap_or(1.0);
        let delta: f64 = doc.get_parsed("delta")?.unwrap_or(DEFAULT_DELTA);
        let k_default = |f: fn(f64, f64, f64) -> u64| {
            if g.is_finite() && g > 0.0 && delta.is_finite() && delta > 0.0 {
                f(g, delta, DEFAULT_DRIVE_RATIO)
            } else {
                1
            }
        };
        let params = SystemParams {
            g,
            delta,
            k: doc.get_parsed("k")?.unwrap_or_else(|| k_default(min_k)),
            k_prime: doc.get_parsed("k_prime")?.unwrap_or_else(|| k_default(min_k_prime)),
            nbar: doc.get_parsed("nbar")?.unwrap_or(0.0),
            n_max: doc.get_parsed("n_max")?.unwrap_or(DEFAULT_N_MAX),
        };
        params.validate().map_err(named_core_error)?;
        let defaults = IntegratorConfig::default();
        let integrator = IntegratorConfig {
            dt_initial: doc.get_parsed("dt_initial")?.unwrap_or(defaults.dt_initial),
            tolerance: doc.get_parsed("tolerance")?.unwrap_or(defaults.tolerance),
            max_halvings: doc.get_parsed("max_halvings")?.unwrap_or(defaults.max_halvings),
        };
        integrator.validate().map_err(named_core_error)?;
        let output_path = match doc.get("output_path") {
            Some("") => {
                return Err(ConfigError::InvalidValue { key: "output_path".into(), reason: "empty path".into() })
            }
            Some(p) => Some(PathBuf::from(p)),
            None => None,
        };
        Ok(RunConfig {
            params,
            model: doc.get_parsed("model")?.unwrap_or(Model::Effective),
            mode: doc.get_parsed("mode")?.unwrap_or(PrepMode::PhysicalPulse),
            integrator,
            output_path,
            output_format: doc.get_parsed("output_format")?.unwrap_or(OutputFormat::Json),
            drive_on_window2: doc.get_parsed("drive_on_window2")?.unwrap_or(true),
            phase_optimized: doc.get_parsed("phase_optimized")?.unwrap_or(false),
        })
    }

    /// Every key with its effective value; parses back to `self`.
    pub fn echo(&self) -> Document {
        let p = &self.params;
        let i = &self.integrator;
        let mut entries = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            entries.insert(k.to_string(), v);
        };
        put("g", p.g.to_string());
        put("delta", p.delta.to_string());
        put("k", p.k.to_string());
        put("k_prime", p.k_prime.to_string());
        put("nbar", p.nbar.to_string());
        put("n_max", p.n_max.to_string());
        put("model", self.model.to_string());
        put("mode", self.mode.to_string());
        put("dt_initial", i.dt_initial.to_string());
        put("tolerance", i.tolerance.to_string());
        put("max_halvings", i.max_halvings.to_string());
        if let Some(path) = &self.output_path {
            put("output_path", path.display().to_string());
        }
        put("output_format", self.output_format.to_string());
        put("drive_on_window2", self.drive_on_window2.to_string());
        put("phase_optimized", self.phase_optimized.to_string());
        Document { entries }
    }
}

fn named_core_error(e: squid_qed::CoreError) -> ConfigError {
    match e {
        squid_qed::CoreError::InvalidParameter { name, reason } => {
            ConfigError::InvalidValue { key: name.to_string(), reason }
        }
        other => ConfigError::InvalidValue { key: "config".into(), reason: other.to_string() },
    }
}

/// Raw key/value entries of a config document.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Document {
    entries: BTreeMap<String, String>,
}

impl Document {
    pub fn parse(source: &str) -> Result<Self, ConfigError> {
        let mut doc = Document::default();
        for (n, line) in source.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("");
            for item in line.split(',') {
                let item = item.trim();
                if item.is_empty() {
                    continue;
                }
                let (key, value) = item
                    .split_once('=')
                    .ok_or_else(|| ConfigError::Syntax { line: n + 1, text: item.to_string() })?;
                let key = key.trim();
                if doc.entries.contains_key(key) {
                    return Err(ConfigError::DuplicateKey(key.to_string()));
                }
                doc.insert(key, value.trim())?;
            }
        }
        Ok(doc)
    }

    /// Sets `key`, replacing any earlier value.
    pub fn insert(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        if !KEYS.contains(&key) {
            return Err(ConfigError::UnknownKey(key.to_string()));
        }
        self.entries.insert(key.to_string(), value.to_string());
        Ok(())
    }

    /// Applies a `KEY=VALUE` override.
    pub fn set(&mut self, assignment: &str) -> Result<(), ConfigError> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| ConfigError::Syntax { line: 0, text: assignment.to_string() })?;
        self.insert(key.trim(), value.trim())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    fn get_parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)
            .map(|raw| {
                raw.parse::<T>()
                    .map_err(|e| ConfigError::InvalidValue { key: key.to_string(), reason: format!("`{raw}`: {e}") })
            })
            .transpose()
    }

    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.entries
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }
}

/// Parses and validates a config document.
pub fn parse_config(source: &str) -> Result<RunConfig, ConfigError> {
    RunConfig::from_document(&Document::parse(source)?)
}
