//! Text `key = value` configuration for the world a command operates on.
//!
//! Relative paths are resolved against the directory containing the
//! config file, so a config travels with its curve file and state.

use lpki_core::ec::DomainParameters;
use lpki_core::world::WorldConfig;
use std::path::{Path, PathBuf};

#[derive(Debug)]
pub struct ConfigError {
    pub field: String,
    pub detail: String,
}

impl ConfigError {
    fn new(field: &str, detail: impl Into<String>) -> ConfigError {
        ConfigError {
            field: field.into(),
            detail: detail.into(),
        }
    }
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config error in {}: {}", self.field, self.detail)
    }
}

impl std::error::Error for ConfigError {}

/// Parsed configuration with defaults applied.
#[derive(Clone, Debug)]
pub struct Config {
    /// Curve parameter file (the `key = value` curve format).
    pub curve_file: PathBuf,
    /// Where `world.state` and transcripts live.
    pub state_dir: PathBuf,
    pub seed: u64,
    pub ocsp_window: u64,
    pub cert_lifetime: u64,
    pub escrow: bool,
    pub validate_keys: bool,
    pub require_pop: bool,
    pub va_archive: bool,
}

impl Config {
    pub fn load(path: &Path) -> Result<Config, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new("config", format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    pub fn parse(text: &str, base: &Path) -> Result<Config, ConfigError> {
        let mut curve_file = None;
        let mut state_dir = None;
        let mut seed = 1u64;
        let mut ocsp_window = 300u64;
        let mut cert_lifetime = 86_400u64;
        let mut escrow = false;
        let mut validate_keys = true;
        let mut require_pop = true;
        let mut va_archive = false;

        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError::new(
                    "config",
                    format!("line {}: expected key = value, got {raw:?}", lineno + 1),
                ));
            };
            let key = key.trim();
            let value = value.trim();
            match key {
                "curve_file" => curve_file = Some(base.join(value)),
                "state_dir" => state_dir = Some(base.join(value)),
                "seed" => seed = parse_u64(key, value)?,
                "ocsp_window" => ocsp_window = parse_u64(key, value)?,
                "cert_lifetime" => cert_lifetime = parse_u64(key, value)?,
                "escrow" => escrow = parse_bool(key, value)?,
                "validate_keys" => validate_keys = parse_bool(key, value)?,
                "require_pop" => require_pop = parse_bool(key, value)?,
                "va_archive" => va_archive = parse_bool(key, value)?,
                other => {
                    return Err(ConfigError::new(other, "unknown configuration key"));
                }
            }
        }

        Ok(Config {
            curve_file: curve_file
                .ok_or_else(|| ConfigError::new("curve_file", "required key is missing"))?,
            state_dir: state_dir
                .ok_or_else(|| ConfigError::new("state_dir", "required key is missing"))?,
            seed,
            ocsp_window,
            cert_lifetime,
            escrow,
            validate_keys,
            require_pop,
            va_archive,
        })
    }

    /// Reads and checks the curve file this config points at.
    pub fn load_params(&self) -> Result<DomainParameters, ConfigError> {
        let text = std::fs::read_to_string(&self.curve_file).map_err(|e| {
            ConfigError::new(
                "curve_file",
                format!("{}: {e}", self.curve_file.display()),
            )
        })?;
        DomainParameters::from_config_text(&text)
            .map_err(|e| ConfigError::new("curve_file", e.to_string()))
    }

    /// The world this config describes, seed overridable per run.
    pub fn world_config(&self, seed_override: Option<u64>) -> Result<WorldConfig, ConfigError> {
        let params = self.load_params()?;
        let mut wc = WorldConfig::new(params);
        wc.seed = seed_override.unwrap_or(self.seed);
        wc.ocsp_window = self.ocsp_window;
        wc.cert_lifetime = self.cert_lifetime;
        wc.escrow_enabled = self.escrow;
        wc.validate_subject_keys = self.validate_keys;
        wc.require_possession_proof = self.require_pop;
        wc.va_archive = self.va_archive;
        Ok(wc)
    }

    pub fn state_file(&self) -> PathBuf {
        self.state_dir.join("world.state")
    }
}

fn parse_u64(field: &str, value: &str) -> Result<u64, ConfigError> {
    value
        .parse()
        .map_err(|_| ConfigError::new(field, format!("expected an integer, got {value:?}")))
}

fn parse_bool(field: &str, value: &str) -> Result<bool, ConfigError> {
    match value {
        "on" | "true" | "yes" | "1" => Ok(true),
        "off" | "false" | "no" | "0" => Ok(false),
        other => Err(ConfigError::new(
            field,
            format!("expected on/off, got {other:?}"),
        )),
    }
}

/// Resolves a `--curve` flag: a built-in name or a parameter file path.
pub fn resolve_curve(name: &str) -> Result<DomainParameters, ConfigError> {
    match name {
        "toy17" => Ok(DomainParameters::toy17()),
        "p256" => Ok(DomainParameters::p256()),
        path => {
            let text = std::fs::read_to_string(path).map_err(|_| {
                ConfigError::new(
                    "curve",
                    format!("{name:?} is not a built-in curve (toy17, p256) or a readable file"),
                )
            })?;
            DomainParameters::from_config_text(&text)
                .map_err(|e| ConfigError::new("curve", e.to_string()))
        }
    }
}
