//! Simulation config: a TOML file with a fixed set of sections.
//!
//! ```toml
//! seed = 7
//! periods = 6
//!
//! [world]
//! file = "world.csv"          # or a [world.generate] table
//!
//! [firms]
//! per_industry = 50
//! cost_max = 1.0
//!
//! [preferences]
//! alpha = 2.0
//! eta = 1.0
//!
//! [industries]
//! gammas = [0.2, 0.5, 0.8]
//! sigma = 0.9
//! info_cost = 1.5
//! delta = 0.5
//! s_s = 1.0
//! ```
//!
//! Every key has a default except where noted in [`SimConfig`]; validation
//! errors point at the offending line of the source.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::ConfigError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub seed: u64,
    /// Number of periods including the initial one; lags need at least two.
    pub periods: usize,
    pub world: WorldConfig,
    pub firms: FirmConfig,
    #[serde(default)]
    pub preferences: PreferencesConfig,
    pub industries: IndustriesConfig,
    #[serde(default)]
    pub shocks: ShockConfig,
    #[serde(default)]
    pub entry: EntryRules,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorldConfig {
    /// CSV with `id,gdp,lat,lon[,home]`, relative to the config file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
    /// Optional square CSV of kilometre distances; overrides coordinates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generate: Option<GenerateConfig>,
    /// Kilometres per distance unit inside the entry-cost equations.
    #[serde(default = "default_model_scale")]
    pub distance_scale_km: f64,
    /// Kilometres per unit before taking logs in the panel regressors.
    #[serde(default = "default_log_unit")]
    pub log_distance_unit_km: f64,
}

fn default_model_scale() -> f64 {
    1_000.0
}

fn default_log_unit() -> f64 {
    1_000.0
}

/// Random world: countries scattered around a few regional centres.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateConfig {
    pub countries: usize,
    #[serde(default = "default_regions")]
    pub regions: usize,
    /// Mean and spread of log GDP.
    #[serde(default = "default_gdp_log_mean")]
    pub gdp_log_mean: f64,
    #[serde(default = "default_gdp_log_sd")]
    pub gdp_log_sd: f64,
    /// Standard deviation of country positions around their region, degrees.
    #[serde(default = "default_spread")]
    pub region_spread_deg: f64,
}

fn default_regions() -> usize {
    6
}

fn default_gdp_log_mean() -> f64 {
    2.5
}

fn default_gdp_log_sd() -> f64 {
    1.0
}

fn default_spread() -> f64 {
    8.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FirmConfig {
    pub per_industry: usize,
    /// Costs are uniform on `(0, cost_max)`.
    #[serde(default = "default_cost_max")]
    pub cost_max: f64,
    /// Markets each firm holds at birth, picked by best local-search profit.
    #[serde(default = "default_initial_markets")]
    pub initial_markets: usize,
    /// Hand-placed initial markets, on top of `initial_markets`.
    #[serde(default, rename = "incumbent", skip_serializing_if = "Vec::is_empty")]
    pub incumbents: Vec<Incumbent>,
}

fn default_cost_max() -> f64 {
    1.0
}

fn default_initial_markets() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Incumbent {
    pub industry: usize,
    /// Index of the firm within its industry.
    pub firm: usize,
    pub country: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreferencesConfig {
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_eta")]
    pub eta: f64,
}

fn default_alpha() -> f64 {
    2.0
}

fn default_eta() -> f64 {
    1.0
}

impl Default for PreferencesConfig {
    fn default() -> Self {
        PreferencesConfig { alpha: default_alpha(), eta: default_eta() }
    }
}

/// Parameters shared by all industries; industries differ only in `gamma`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndustriesConfig {
    pub gammas: Vec<f64>,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default = "default_info_cost")]
    pub info_cost: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default)]
    pub f_e: f64,
    #[serde(default = "default_s_s")]
    pub s_s: f64,
}

fn default_sigma() -> f64 {
    0.9
}

fn default_info_cost() -> f64 {
    1.5
}

fn default_delta() -> f64 {
    0.5
}

fn default_s_s() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShockConfig {
    #[serde(default = "default_sd")]
    pub local_sd: f64,
    #[serde(default = "default_sd")]
    pub remote_sd: f64,
}

fn default_sd() -> f64 {
    1.0
}

impl Default for ShockConfig {
    fn default() -> Self {
        ShockConfig { local_sd: default_sd(), remote_sd: default_sd() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExitRule {
    /// Portfolios only grow.
    None,
    /// A firm leaves a market once its cost is above last period's cutoff there.
    Viability,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntryRules {
    #[serde(default = "default_exit_rule")]
    pub exit_rule: ExitRule,
    /// Net profit an entry must beat.
    #[serde(default)]
    pub reservation: f64,
}

fn default_exit_rule() -> ExitRule {
    ExitRule::None
}

impl Default for EntryRules {
    fn default() -> Self {
        EntryRules { exit_rule: default_exit_rule(), reservation: 0.0 }
    }
}

/// A parsed config plus the text it came from, for error locations.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: SimConfig,
    pub path: Option<PathBuf>,
    pub source: String,
}

impl LoadedConfig {
    /// Directory relative paths in the config resolve against.
    pub fn base_dir(&self) -> PathBuf {
        self.path
            .as_ref()
            .and_then(|p| p.parent())
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."))
    }
}

pub fn load(path: &Path) -> Result<LoadedConfig, crate::error::Error> {
    let source = std::fs::read_to_string(path).map_err(|e| crate::error::Error::io(path, e))?;
    let config = parse(&source, Some(path))?;
    Ok(LoadedConfig { config, path: Some(path.to_path_buf()), source })
}

/// Parses and validates config text.
pub fn parse(source: &str, path: Option<&Path>) -> Result<SimConfig, ConfigError> {
    let config: SimConfig = toml::from_str(source).map_err(|e| ConfigError {
        path: path.map(Path::to_path_buf),
        line: e.span().map(|s| line_of(source, s.start)),
        field: String::new(),
        message: e.message().trim().to_string(),
    })?;
    config.validate().map_err(|(section, key, message)| ConfigError {
        path: path.map(Path::to_path_buf),
        line: locate(source, section, key),
        field: if section.is_empty() { key.to_string() } else { format!("{section}.{key}") },
        message,
    })?;
    Ok(config)
}

type Invalid = (&'static str, &'static str, String);

fn check(ok: bool, section: &'static str, key: &'static str, msg: impl FnOnce() -> String) -> Result<(), Invalid> {
    if ok {
        Ok(())
    } else {
        Err((section, key, msg()))
    }
}

fn positive(v: f64, section: &'static str, key: &'static str) -> Result<(), Invalid> {
    check(v > 0.0 && v.is_finite(), section, key, || format!("= {v} must be positive and finite"))
}

impl SimConfig {
    /// Returns `(section, key, message)` for the first violated bound.
    fn validate(&self) -> Result<(), Invalid> {
        check(self.periods >= 2, "", "periods", || {
            format!("= {} must be at least 2 (lagged regressors need a burn-in period)", self.periods)
        })?;

        let w = &self.world;
        check(w.file.is_some() != w.generate.is_some(), "world", "file", || {
            "give exactly one of `file` or a [world.generate] table".into()
        })?;
        check(w.matrix.is_none() || w.file.is_some(), "world", "matrix", || {
            "needs `file` for country ids and GDP".into()
        })?;
        positive(w.distance_scale_km, "world", "distance_scale_km")?;
        positive(w.log_distance_unit_km, "world", "log_distance_unit_km")?;
        if let Some(g) = &w.generate {
            check(g.countries >= 2, "world.generate", "countries", || {
                format!("= {} must be at least 2 (home plus one destination)", g.countries)
            })?;
            check(g.regions >= 1, "world.generate", "regions", || "must be at least 1".into())?;
            check(g.gdp_log_mean.is_finite(), "world.generate", "gdp_log_mean", || "must be finite".into())?;
            check(g.gdp_log_sd >= 0.0 && g.gdp_log_sd.is_finite(), "world.generate", "gdp_log_sd", || {
                format!("= {} must be in [0, inf)", g.gdp_log_sd)
            })?;
            check(
                g.region_spread_deg >= 0.0 && g.region_spread_deg.is_finite(),
                "world.generate",
                "region_spread_deg",
                || format!("= {} must be in [0, inf)", g.region_spread_deg),
            )?;
        }

        let f = &self.firms;
        check(f.per_industry >= 1, "firms", "per_industry", || "must be at least 1".into())?;
        positive(f.cost_max, "firms", "cost_max")?;
        for inc in &f.incumbents {
            check(inc.industry < self.industries.gammas.len(), "firms.incumbent", "industry", || {
                format!("= {} but there are {} industries", inc.industry, self.industries.gammas.len())
            })?;
            check(inc.firm < f.per_industry, "firms.incumbent", "firm", || {
                format!("= {} but each industry has {} firms", inc.firm, f.per_industry)
            })?;
        }

        positive(self.preferences.alpha, "preferences", "alpha")?;
        positive(self.preferences.eta, "preferences", "eta")?;

        let ind = &self.industries;
        check(!ind.gammas.is_empty(), "industries", "gammas", || "needs at least one industry".into())?;
        for (k, &g) in ind.gammas.iter().enumerate() {
            check(g > 0.0 && g.is_finite(), "industries", "gammas", || {
                format!("entry {k} = {g} must be positive and finite")
            })?;
        }
        check((0.0..=1.0).contains(&ind.sigma), "industries", "sigma", || {
            format!("= {} must be in [0, 1]", ind.sigma)
        })?;
        check(ind.info_cost > 1.0 && ind.info_cost.is_finite(), "industries", "info_cost", || {
            format!("= {} must be greater than 1", ind.info_cost)
        })?;
        check(ind.delta >= 0.0 && ind.delta.is_finite(), "industries", "delta", || {
            format!("= {} must be in [0, inf)", ind.delta)
        })?;
        check(ind.f_e >= 0.0 && ind.f_e.is_finite(), "industries", "f_e", || {
            format!("= {} must be in [0, inf)", ind.f_e)
        })?;
        check(ind.s_s > 0.0 && ind.s_s <= 1.0, "industries", "s_s", || format!("= {} must be in (0, 1]", ind.s_s))?;

        let s = &self.shocks;
        check(s.local_sd >= 0.0 && s.local_sd.is_finite(), "shocks", "local_sd", || {
            format!("= {} must be in [0, inf)", s.local_sd)
        })?;
        check(s.remote_sd >= 0.0 && s.remote_sd.is_finite(), "shocks", "remote_sd", || {
            format!("= {} must be in [0, inf)", s.remote_sd)
        })?;
        check(self.entry.reservation.is_finite(), "entry", "reservation", || "must be finite".into())?;
        Ok(())
    }

    /// TOML rendering of the fully defaulted config; the input of [`Self::digest`].
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical rendering, hex encoded.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.canonical().as_bytes()))
    }
}

fn line_of(source: &str, offset: usize) -> usize {
    source[..offset.min(source.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

/// 1-based line of `key` inside `[section]` (top level when empty).
///
/// Falls back to the section header, then to nothing.
pub fn locate(source: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    let mut header_line = None;
    for (i, raw) in source.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.starts_with('[') {
            current = line.trim_matches(|c| c == '[' || c == ']').trim().to_string();
            if current == section && header_line.is_none() {
                header_line = Some(i + 1);
            }
            continue;
        }
        if current == section {
            if let Some((k, _)) = line.split_once('=') {
                if k.trim() == key {
                    return Some(i + 1);
                }
            }
        }
    }
    header_line
}
