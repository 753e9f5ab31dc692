//! Named regression specifications over the panel columns, plus a TOML spec
//! file format for custom ones.
//!
//! The `table3-*` presets are probits of `export` with industry and year
//! effects. Product heterogeneity is constant within an industry, so where
//! it appears next to industry effects it sits in the drop list. The
//! `table4-*` presets are Poisson models of `n_sk_now` with year effects
//! only, which keeps `gamma` identified. `table5-*` swap in country effects
//! and leave out the country-level controls they absorb.
//!
//! Spec file:
//!
//! ```toml
//! family = "probit"
//! dependent = "export"
//! regressors = ["n_sk", "markets_lag"]
//! fixed_effects = ["industry", "period"]
//! cluster = "firm"
//! drop = []
//! small_sample = false
//! max_iterations = 100
//! ```

use serde::{Deserialize, Serialize};
use tradenet_core::econometrics::{ClusterCorrection, Family, RegressionSpec};

use crate::error::{ConfigError, Error, Result};

const INDUSTRY_NETWORK: [&str; 3] = ["n_sk", "industry_dist_sum", "density_dist"];
const INTERACTIONS: [&str; 2] = ["gamma_x_n_sk", "gamma_x_density_dist"];
const FIRM_NETWORK: [&str; 2] = ["markets_lag", "firm_dist_sum"];
const COUNTRY_CONTROLS: [&str; 3] = ["gdp", "dist_home", "dist_world"];
const IMPORT_CONTROLS: [&str; 2] = ["imports_growth_world", "imports_growth_home"];

pub const PRESETS: [&str; 10] = [
    "table3-col1",
    "table3-col2",
    "table3-col3",
    "table3-col4",
    "table3-col5",
    "table4-col1",
    "table4-col2",
    "table4-col3",
    "table5-col1",
    "table5-col2",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecFile {
    pub family: String,
    pub dependent: String,
    pub regressors: Vec<String>,
    #[serde(default)]
    pub fixed_effects: Vec<String>,
    #[serde(default = "default_cluster")]
    pub cluster: String,
    #[serde(default)]
    pub drop: Vec<String>,
    #[serde(default)]
    pub small_sample: bool,
    /// Newton iterations before giving up.
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
}

fn default_cluster() -> String {
    "firm".into()
}

fn default_max_iterations() -> usize {
    100
}

impl SpecFile {
    pub fn to_spec(&self) -> std::result::Result<(RegressionSpec, ClusterCorrection), String> {
        let family = Family::parse(&self.family).ok_or_else(|| format!("unknown family `{}`", self.family))?;
        let regs: Vec<&str> = self.regressors.iter().map(String::as_str).collect();
        let fe: Vec<&str> = self.fixed_effects.iter().map(String::as_str).collect();
        let drop: Vec<&str> = self.drop.iter().map(String::as_str).collect();
        let spec = RegressionSpec::new(family, &self.dependent, &regs, &self.cluster)
            .with_fixed_effects(&fe)
            .with_drop(&drop);
        let correction = if self.small_sample { ClusterCorrection::SmallSample } else { ClusterCorrection::None };
        Ok((spec, correction))
    }

    /// Every panel column the spec reads.
    pub fn columns(&self) -> Vec<&str> {
        let mut out = vec![self.dependent.as_str(), self.cluster.as_str()];
        out.extend(self.regressors.iter().map(String::as_str));
        out.extend(self.fixed_effects.iter().map(String::as_str));
        out
    }
}

fn spec(family: &str, dependent: &str, groups: &[&[&str]], fe: &[&str], drop: &[&str]) -> SpecFile {
    SpecFile {
        family: family.into(),
        dependent: dependent.into(),
        regressors: groups.iter().flat_map(|g| g.iter().map(|s| s.to_string())).collect(),
        fixed_effects: fe.iter().map(|s| s.to_string()).collect(),
        cluster: "firm".into(),
        drop: drop.iter().map(|s| s.to_string()).collect(),
        small_sample: false,
        max_iterations: default_max_iterations(),
    }
}

pub fn preset(name: &str) -> Option<SpecFile> {
    let ind_year: &[&str] = &["industry", "period"];
    let year: &[&str] = &["period"];
    let country_year: &[&str] = &["industry", "country", "period"];
    Some(match name {
        "table3-col1" => spec("probit", "export", &[&INDUSTRY_NETWORK, &FIRM_NETWORK], ind_year, &[]),
        "table3-col2" => spec(
            "probit",
            "export",
            &[&INDUSTRY_NETWORK, &INTERACTIONS, &FIRM_NETWORK, &["scale", "gamma"]],
            ind_year,
            &["gamma"],
        ),
        "table3-col3" => spec(
            "probit",
            "export",
            &[
                &INDUSTRY_NETWORK,
                &INTERACTIONS,
                &FIRM_NETWORK,
                &["scale", "gamma"],
                &COUNTRY_CONTROLS,
                &["export_lag"],
                &IMPORT_CONTROLS,
            ],
            ind_year,
            &["gamma"],
        ),
        "table3-col4" => spec(
            "probit",
            "export",
            &[&FIRM_NETWORK, &["scale"], &COUNTRY_CONTROLS, &["export_lag"], &IMPORT_CONTROLS],
            ind_year,
            &[],
        ),
        "table3-col5" => spec(
            "probit",
            "export",
            &[&["scale"], &COUNTRY_CONTROLS, &["export_lag"], &IMPORT_CONTROLS],
            ind_year,
            &[],
        ),
        "table4-col1" => spec("poisson", "n_sk_now", &[&["gamma"]], year, &[]),
        "table4-col2" => spec(
            "poisson",
            "n_sk_now",
            &[&["gamma", "n_sk", "firm_dist_sum"], &COUNTRY_CONTROLS, &IMPORT_CONTROLS],
            year,
            &[],
        ),
        "table4-col3" => spec(
            "poisson",
            "n_sk_now",
            &[
                &["gamma", "scale", "industry_dist_sum", "markets_lag", "n_sk", "firm_dist_sum", "density_dist"],
                &COUNTRY_CONTROLS,
                &IMPORT_CONTROLS,
            ],
            year,
            &[],
        ),
        "table5-col1" => spec(
            "probit",
            "export",
            &[
                &INDUSTRY_NETWORK,
                &INTERACTIONS,
                &FIRM_NETWORK,
                &["scale", "gamma", "export_lag"],
                &IMPORT_CONTROLS,
            ],
            country_year,
            &["gamma"],
        ),
        "table5-col2" => spec(
            "poisson",
            "n_sk_now",
            &[&INDUSTRY_NETWORK, &FIRM_NETWORK, &["scale", "gamma"], &IMPORT_CONTROLS],
            &["country", "period"],
            &[],
        ),
        _ => return None,
    })
}

pub fn parse_spec_file(source: &str, path: &std::path::Path) -> Result<SpecFile> {
    let f: SpecFile = toml::from_str(source).map_err(|e| {
        Error::Config(ConfigError {
            path: Some(path.to_path_buf()),
            line: e.span().map(|s| source[..s.start.min(source.len())].lines().count().max(1)),
            field: String::new(),
            message: e.message().trim().to_string(),
        })
    })?;
    f.to_spec().map_err(|m| {
        Error::Config(ConfigError {
            path: Some(path.to_path_buf()),
            line: crate::config::locate(source, "", "family"),
            field: "family".into(),
            message: m,
        })
    })?;
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::panel::COLUMNS;

    #[test]
    fn every_preset_reads_panel_columns() {
        for name in PRESETS {
            let p = preset(name).unwrap();
            for c in p.columns() {
                assert!(COLUMNS.contains(&c) || c == "firm", "{name}: {c}");
            }
            for d in &p.drop {
                assert!(p.regressors.contains(d), "{name} drops {d} it does not use");
            }
            p.to_spec().unwrap();
        }
        assert!(preset("table9-col1").is_none());
    }

    #[test]
    fn col3_carries_the_network_terms() {
        let p = preset("table3-col3").unwrap();
        for t in ["n_sk", "industry_dist_sum", "density_dist", "gamma_x_n_sk", "gamma_x_density_dist"] {
            assert!(p.regressors.iter().any(|r| r == t));
        }
        assert_eq!(p.family, "probit");
    }

    #[test]
    fn table4_keeps_gamma_identified() {
        for name in ["table4-col1", "table4-col2", "table4-col3"] {
            let p = preset(name).unwrap();
            assert_eq!(p.regressors[0], "gamma");
            assert!(!p.fixed_effects.iter().any(|f| f == "industry"));
            assert!(p.drop.is_empty());
        }
    }

    #[test]
    fn spec_file_parses() {
        let src = "family = \"poisson\"\ndependent = \"n_sk_now\"\nregressors = [\"gamma\"]\nfixed_effects = [\"period\"]\n";
        let f = parse_spec_file(src, std::path::Path::new("s.toml")).unwrap();
        assert_eq!(f.cluster, "firm");
        let bad = src.replace("poisson", "logit");
        match parse_spec_file(&bad, std::path::Path::new("s.toml")) {
            Err(Error::Config(e)) => assert_eq!(e.line, Some(1)),
            other => panic!("{other:?}"),
        }
    }
}
