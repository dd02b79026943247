//! Plain-text `key=value` run configuration.
//!
//! A config file supplies the same knobs as the command-line flags; when a
//! value appears in both, the flag wins. Lines starting with `#` and blank
//! lines are ignored; keys may use `-` or `_` interchangeably.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use deepmc::fcnn::Activation;
use deepmc::trainer::OmegaMode;
use deepmc::{Error, Result};

/// Optional overrides for an experiment or training run; unset fields fall
/// through to the next source (config file, then preset defaults).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    pub rows: Option<usize>,
    pub cols: Option<usize>,
    pub rank: Option<usize>,
    pub rho: Option<f64>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub arch: Option<Vec<usize>>,
    pub activation: Option<Activation>,
    pub epochs: Option<usize>,
    pub warmup: Option<usize>,
    pub mu_min: Option<f64>,
    pub mu_max: Option<f64>,
    pub gamma: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub lambda: Option<f64>,
    pub omega: Option<OmegaMode>,
    pub method: Option<String>,
    pub dataset: Option<PathBuf>,
}

impl Settings {
    /// Field-wise precedence: values in `self` win over `fallback`.
    pub fn or(self, fallback: Settings) -> Settings {
        Settings {
            rows: self.rows.or(fallback.rows),
            cols: self.cols.or(fallback.cols),
            rank: self.rank.or(fallback.rank),
            rho: self.rho.or(fallback.rho),
            trials: self.trials.or(fallback.trials),
            seed: self.seed.or(fallback.seed),
            arch: self.arch.or(fallback.arch),
            activation: self.activation.or(fallback.activation),
            epochs: self.epochs.or(fallback.epochs),
            warmup: self.warmup.or(fallback.warmup),
            mu_min: self.mu_min.or(fallback.mu_min),
            mu_max: self.mu_max.or(fallback.mu_max),
            gamma: self.gamma.or(fallback.gamma),
            alpha: self.alpha.or(fallback.alpha),
            beta: self.beta.or(fallback.beta),
            lambda: self.lambda.or(fallback.lambda),
            omega: self.omega.or(fallback.omega),
            method: self.method.or(fallback.method),
            dataset: self.dataset.or(fallback.dataset),
        }
    }

    /// Parses a config file into overrides.
    pub fn from_file(path: &Path) -> Result<Settings> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read config {}: {e}", path.display())))?;
        let map = parse_key_values(&text)?;
        Settings::from_map(&map)
    }

    /// Builds overrides from parsed `key=value` pairs, rejecting unknown
    /// keys and unparsable values.
    pub fn from_map(map: &BTreeMap<String, String>) -> Result<Settings> {
        let mut s = Settings::default();
        for (key, value) in map {
            match key.as_str() {
                "rows" => s.rows = Some(parse_num(key, value)?),
                "cols" => s.cols = Some(parse_num(key, value)?),
                "rank" => s.rank = Some(parse_num(key, value)?),
                "rho" => s.rho = Some(parse_num(key, value)?),
                "trials" => s.trials = Some(parse_num(key, value)?),
                "seed" => s.seed = Some(parse_num(key, value)?),
                "arch" => s.arch = Some(parse_arch(value)?),
                "activation" => s.activation = Some(Activation::from_name(value)?),
                "epochs" => s.epochs = Some(parse_num(key, value)?),
                "warmup" => s.warmup = Some(parse_num(key, value)?),
                "mu_min" => s.mu_min = Some(parse_num(key, value)?),
                "mu_max" => s.mu_max = Some(parse_num(key, value)?),
                "gamma" => s.gamma = Some(parse_num(key, value)?),
                "alpha" => s.alpha = Some(parse_num(key, value)?),
                "beta" => s.beta = Some(parse_num(key, value)?),
                "lambda" => s.lambda = Some(parse_num(key, value)?),
                "omega" => s.omega = Some(parse_omega(value)?),
                "method" => s.method = Some(value.clone()),
                "dataset" => s.dataset = Some(PathBuf::from(value)),
                other => {
                    return Err(Error::config(format!("unknown config key {other:?}")));
                }
            }
        }
        Ok(s)
    }
}

/// Parses `key=value` lines; `#` comments and blank lines are skipped,
/// hyphens in keys normalize to underscores, duplicates are rejected.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::config(format!(
                "config line {}: expected key=value, got {raw:?}",
                lineno + 1
            )));
        };
        let key = key.trim().replace('-', "_");
        let value = value.trim().to_string();
        if key.is_empty() {
            return Err(Error::config(format!("config line {}: empty key", lineno + 1)));
        }
        if map.insert(key.clone(), value).is_some() {
            return Err(Error::config(format!(
                "config line {}: duplicate key {key:?}",
                lineno + 1
            )));
        }
    }
    Ok(map)
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse::<T>()
        .map_err(|_| Error::config(format!("config key {key}: cannot parse {value:?}")))
}

/// Parses a hidden-layer architecture like `256-128-256`.
pub fn parse_arch(text: &str) -> Result<Vec<usize>> {
    let widths: Vec<usize> = text
        .split('-')
        .map(|part| {
            part.trim()
                .parse::<usize>()
                .map_err(|_| Error::config(format!("bad architecture component {part:?} in {text:?}")))
        })
        .collect::<Result<_>>()?;
    if widths.is_empty() || widths.iter().any(|&w| w == 0) {
        return Err(Error::config(format!("architecture {text:?} has a zero width")));
    }
    Ok(widths)
}

/// Parses an extrapolation policy: `adaptive` or a fixed nonnegative weight.
pub fn parse_omega(text: &str) -> Result<OmegaMode> {
    if text.eq_ignore_ascii_case("adaptive") {
        return Ok(OmegaMode::Adaptive);
    }
    let w: f64 = text
        .parse()
        .map_err(|_| Error::config(format!("omega must be 'adaptive' or a number, got {text:?}")))?;
    if !(w >= 0.0) || !w.is_finite() {
        return Err(Error::config(format!("fixed omega must be finite and nonnegative, got {w}")));
    }
    Ok(OmegaMode::Fixed(w))
}

// ─── tests ───
