//! Flat `key = value` configuration with CLI-flag overrides.
//!
//! The parameter space is small and flat, so the format is too: one
//! assignment per line, `#` starts a comment, keys are the snake-case field
//! names. Unknown keys are errors — typo protection matters more than
//! forward compatibility for a reproduction recipe.

use std::collections::BTreeMap;
use std::fmt;

use mutualism_core::{ModelParams, SchemeId};

use crate::CliError;

/// Where a value came from, for error messages.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Default,
    File { line: usize },
    Flag,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::Default => write!(f, "default"),
            Source::File { line } => write!(f, "config line {line}"),
            Source::Flag => write!(f, "flag"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigError {
    UnknownKey { key: String, source: Source },
    MalformedValue { key: String, source: Source, detail: String },
    ConstraintViolation { key: String, source: Source, detail: String },
}

impl ConfigError {
    pub fn kind(&self) -> &'static str {
        match self {
            ConfigError::UnknownKey { .. } => "unknown_key",
            ConfigError::MalformedValue { .. } => "malformed_value",
            ConfigError::ConstraintViolation { .. } => "constraint_violation",
        }
    }

    pub fn key(&self) -> &str {
        match self {
            ConfigError::UnknownKey { key, .. }
            | ConfigError::MalformedValue { key, .. }
            | ConfigError::ConstraintViolation { key, .. } => key,
        }
    }

    pub fn location(&self) -> String {
        match self {
            ConfigError::UnknownKey { source, .. }
            | ConfigError::MalformedValue { source, .. }
            | ConfigError::ConstraintViolation { source, .. } => source.to_string(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::UnknownKey { key, source } => {
                write!(f, "unknown key `{key}` ({source})")
            }
            ConfigError::MalformedValue { key, source, detail } => {
                write!(f, "malformed value for `{key}` ({source}): {detail}")
            }
            ConfigError::ConstraintViolation { key, source, detail } => {
                write!(f, "constraint violation on `{key}` ({source}): {detail}")
            }
        }
    }
}

pub const CONFIG_KEYS: [&str; 21] = [
    "r1",
    "r2",
    "b1",
    "b2",
    "k1",
    "k2",
    "eps1",
    "eps2",
    "alpha1",
    "alpha2",
    "x0",
    "y0",
    "scheme",
    "dt",
    "t_end",
    "t_burn",
    "seed",
    "replicates",
    "k_list",
    "epsilon",
    "out_dir",
];

/// Fully resolved run configuration. Defaults are the figure baseline
/// parameter set with weak noise.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub r1: f64,
    pub r2: f64,
    pub b1: f64,
    pub b2: f64,
    pub k1: f64,
    pub k2: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub x0: f64,
    pub y0: f64,
    pub scheme: SchemeId,
    pub dt: f64,
    pub t_end: f64,
    /// `None` means the burn-in default `t_end/4`.
    pub t_burn: Option<f64>,
    pub seed: u64,
    pub replicates: usize,
    pub k_list: Vec<u32>,
    pub epsilon: f64,
    pub out_dir: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            r1: 1.2,
            r2: 1.0,
            b1: 0.7,
            b2: 0.9,
            k1: 2.0,
            k2: 2.0,
            eps1: 0.8,
            eps2: 0.7,
            alpha1: 0.01,
            alpha2: 0.01,
            x0: 0.5,
            y0: 0.5,
            scheme: SchemeId::Milstein,
            dt: 0.001,
            t_end: 200.0,
            t_burn: None,
            seed: 0,
            replicates: 100,
            k_list: vec![1, 2, 3],
            epsilon: 0.05,
            out_dir: "out".to_string(),
        }
    }
}

impl RunConfig {
    pub fn model_params(&self) -> ModelParams {
        ModelParams {
            r1: self.r1,
            r2: self.r2,
            b1: self.b1,
            b2: self.b2,
            k1: self.k1,
            k2: self.k2,
            eps1: self.eps1,
            eps2: self.eps2,
            alpha1: self.alpha1,
            alpha2: self.alpha2,
            x0: self.x0,
            y0: self.y0,
        }
    }

    /// Burn-in actually used: explicit value or `t_end/4`.
    pub fn t_burn_resolved(&self) -> f64 {
        self.t_burn.unwrap_or(0.25 * self.t_end)
    }

    pub fn n_steps(&self) -> usize {
        (self.t_end / self.dt + 0.5) as usize
    }

    pub fn scheme_name(&self) -> &'static str {
        scheme_name(self.scheme)
    }
}

pub fn scheme_name(s: SchemeId) -> &'static str {
    match s {
        SchemeId::EulerMaruyama => "euler_maruyama",
        SchemeId::Milstein => "milstein",
        SchemeId::LogEuler => "log_euler",
    }
}

/// Builds a [`RunConfig`] from defaults, then file text, then flags, tracking
/// the source of every assignment so errors can point at it.
#[derive(Debug, Default)]
pub struct Loader {
    cfg: RunConfig,
    provenance: BTreeMap<&'static str, Source>,
}

impl Loader {
    pub fn new() -> Self {
        Loader { cfg: RunConfig::default(), provenance: BTreeMap::new() }
    }

    /// Applies one config-file text; later files/flags override earlier ones.
    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let stripped = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            };
            let stripped = stripped.trim();
            if stripped.is_empty() {
                continue;
            }
            let source = Source::File { line };
            let (key, value) = match stripped.split_once('=') {
                Some((k, v)) => (k.trim(), v.trim()),
                None => {
                    return Err(ConfigError::MalformedValue {
                        key: stripped.to_string(),
                        source,
                        detail: "expected `key = value`".to_string(),
                    })
                }
            };
            self.set(key, value, source)?;
        }
        Ok(())
    }

    pub fn apply_flag(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        self.set(key, value, Source::Flag)
    }

    fn set(&mut self, key: &str, value: &str, source: Source) -> Result<(), ConfigError> {
        let malformed = |detail: &str| ConfigError::MalformedValue {
            key: key.to_string(),
            source,
            detail: detail.to_string(),
        };
        let parse_f64 = |value: &str, detail: &str| -> Result<f64, ConfigError> {
            value.parse::<f64>().map_err(|_| malformed(detail))
        };
        let canon: &'static str = match CONFIG_KEYS.iter().find(|k| **k == key) {
            Some(k) => k,
            None => {
                return Err(ConfigError::UnknownKey { key: key.to_string(), source });
            }
        };
        match canon {
            "r1" => self.cfg.r1 = parse_f64(value, "expected a real number")?,
            "r2" => self.cfg.r2 = parse_f64(value, "expected a real number")?,
            "b1" => self.cfg.b1 = parse_f64(value, "expected a real number")?,
            "b2" => self.cfg.b2 = parse_f64(value, "expected a real number")?,
            "k1" => self.cfg.k1 = parse_f64(value, "expected a real number")?,
            "k2" => self.cfg.k2 = parse_f64(value, "expected a real number")?,
            "eps1" => self.cfg.eps1 = parse_f64(value, "expected a real number")?,
            "eps2" => self.cfg.eps2 = parse_f64(value, "expected a real number")?,
            "alpha1" => self.cfg.alpha1 = parse_f64(value, "expected a real number")?,
            "alpha2" => self.cfg.alpha2 = parse_f64(value, "expected a real number")?,
            "x0" => self.cfg.x0 = parse_f64(value, "expected a real number")?,
            "y0" => self.cfg.y0 = parse_f64(value, "expected a real number")?,
            "dt" => self.cfg.dt = parse_f64(value, "expected a real number")?,
            "t_end" => self.cfg.t_end = parse_f64(value, "expected a real number")?,
            "t_burn" => self.cfg.t_burn = Some(parse_f64(value, "expected a real number")?),
            "epsilon" => self.cfg.epsilon = parse_f64(value, "expected a real number")?,
            "seed" => {
                self.cfg.seed =
                    value.parse::<u64>().map_err(|_| malformed("expected an unsigned integer"))?
            }
            "replicates" => {
                self.cfg.replicates =
                    value.parse::<usize>().map_err(|_| malformed("expected a positive integer"))?
            }
            "k_list" => {
                let mut ks = Vec::new();
                for part in value.split(',') {
                    let k = part
                        .trim()
                        .parse::<u32>()
                        .map_err(|_| malformed("expected comma-separated integers, e.g. 1,2,3"))?;
                    ks.push(k);
                }
                self.cfg.k_list = ks;
            }
            "scheme" => {
                self.cfg.scheme = match value {
                    "euler_maruyama" => SchemeId::EulerMaruyama,
                    "milstein" => SchemeId::Milstein,
                    "log_euler" => SchemeId::LogEuler,
                    _ => {
                        return Err(malformed(
                            "expected one of euler_maruyama, milstein, log_euler",
                        ))
                    }
                };
            }
            "out_dir" => self.cfg.out_dir = value.to_string(),
            _ => unreachable!("key list covered above"),
        }
        self.provenance.insert(canon, source);
        Ok(())
    }

    fn source_of(&self, key: &str) -> Source {
        self.provenance.get(key).copied().unwrap_or(Source::Default)
    }

    /// Validates every invariant and returns the finished config.
    pub fn finish(self) -> Result<RunConfig, ConfigError> {
        let violation = |key: &'static str, detail: &str| ConfigError::ConstraintViolation {
            key: key.to_string(),
            source: self.source_of(key),
            detail: detail.to_string(),
        };
        let cfg = &self.cfg;
        let positive: [(&'static str, f64); 8] = [
            ("r1", cfg.r1),
            ("r2", cfg.r2),
            ("k1", cfg.k1),
            ("k2", cfg.k2),
            ("x0", cfg.x0),
            ("y0", cfg.y0),
            ("dt", cfg.dt),
            ("t_end", cfg.t_end),
        ];
        for (key, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(violation(key, "must be positive and finite"));
            }
        }
        let nonneg: [(&'static str, f64); 6] = [
            ("b1", cfg.b1),
            ("b2", cfg.b2),
            ("eps1", cfg.eps1),
            ("eps2", cfg.eps2),
            ("alpha1", cfg.alpha1),
            ("alpha2", cfg.alpha2),
        ];
        for (key, v) in nonneg {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(violation(key, "must be non-negative and finite"));
            }
        }
        if !(cfg.t_end > cfg.dt) {
            return Err(violation("t_end", "must exceed dt"));
        }
        if let Some(tb) = cfg.t_burn {
            if !(tb >= 0.0) || !(tb < cfg.t_end) || !tb.is_finite() {
                return Err(violation("t_burn", "must lie in [0, t_end)"));
            }
        }
        if !(cfg.epsilon > 0.0) || !(cfg.epsilon < 1.0) {
            return Err(violation("epsilon", "must lie strictly between 0 and 1"));
        }
        if cfg.replicates == 0 {
            return Err(violation("replicates", "must be at least 1"));
        }
        if cfg.k_list.is_empty() {
            return Err(violation("k_list", "must contain at least one order"));
        }
        if cfg.k_list.iter().any(|&k| k == 0) {
            return Err(violation("k_list", "orders must be at least 1"));
        }
        if cfg.out_dir.is_empty() {
            return Err(violation("out_dir", "must not be empty"));
        }
        // Belt and braces: the numerical core must agree the parameters are
        // usable.
        if let Err(mutualism_core::CoreError::InvalidParams { field }) =
            cfg.model_params().validate()
        {
            let key: &'static str =
                CONFIG_KEYS.iter().find(|k| **k == field).copied().unwrap_or("r1");
            return Err(violation(key, "rejected by the model validator"));
        }
        Ok(self.cfg)
    }
}

/// Parsed command line.
#[derive(Debug, Clone, PartialEq)]
pub struct Cli {
    pub command: String,
    pub config: RunConfig,
    /// Worker threads for replicate ensembles; never affects output bytes.
    pub workers: usize,
    /// Where each explicitly assigned key came from, for command-level
    /// constraint errors (e.g. `simulate` rejecting `replicates > 1`).
    pub sources: BTreeMap<&'static str, Source>,
}

impl Cli {
    /// Where `key`'s value came from; `Default` when never assigned.
    pub fn source_for(&self, key: &str) -> Source {
        self.sources.get(key).copied().unwrap_or(Source::Default)
    }

    /// A command-level constraint violation pointing at where the offending
    /// value was set.
    pub fn constraint(&self, key: &'static str, detail: &str) -> ConfigError {
        ConfigError::ConstraintViolation {
            key: key.to_string(),
            source: self.source_for(key),
            detail: detail.to_string(),
        }
    }
}

/// Parses argv into a command plus a fully resolved config: defaults, then
/// the `--config` file (if any), then `--key value` / `--key=value` flags in
/// order.
pub fn parse_args(args: &[String]) -> Result<Cli, CliError> {
    let mut it = args.iter().peekable();
    let command = match it.next() {
        Some(c) if !c.starts_with('-') => c.clone(),
        _ => return Err(CliError::Usage(crate::USAGE.to_string())),
    };
    let mut config_path: Option<String> = None;
    let mut overrides: Vec<(String, String)> = Vec::new();
    let mut workers: usize = std::thread::available_parallelism().map_or(1, |n| n.get());
    while let Some(arg) = it.next() {
        let Some(flag) = arg.strip_prefix("--") else {
            return Err(CliError::Usage(format!(
                "unexpected argument `{arg}`\n\n{}",
                crate::USAGE
            )));
        };
        let (key, value) = match flag.split_once('=') {
            Some((k, v)) => (k.to_string(), v.to_string()),
            None => {
                let Some(v) = it.next() else {
                    return Err(CliError::Usage(format!("flag `--{flag}` needs a value")));
                };
                (flag.to_string(), v.clone())
            }
        };
        match key.as_str() {
            "config" => config_path = Some(value),
            "workers" => {
                workers = value.parse::<usize>().map_err(|_| {
                    CliError::Usage("--workers expects a positive integer".to_string())
                })?;
                if workers == 0 {
                    return Err(CliError::Usage(
                        "--workers expects a positive integer".to_string(),
                    ));
                }
            }
            _ => overrides.push((key, value)),
        }
    }
    let mut loader = Loader::new();
    if let Some(path) = config_path {
        let text = std::fs::read_to_string(&path)
            .map_err(|e| CliError::Io { path: path.clone(), detail: e.to_string() })?;
        loader.apply_text(&text)?;
    }
    for (key, value) in &overrides {
        loader.apply_flag(key, value)?;
    }
    let sources = loader.provenance.clone();
    Ok(Cli { command, config: loader.finish()?, workers, sources })
}
