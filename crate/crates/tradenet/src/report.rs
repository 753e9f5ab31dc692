//! Fit reports and run manifests.

use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};
use tradenet_core::econometrics::FitResult;

use crate::error::{Error, Result};
use crate::format::fmt_g;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

impl FileDigest {
    /// Digest of a file; `path` is recorded relative to `root` when possible.
    pub fn of(path: &Path, root: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let shown = path.strip_prefix(root).unwrap_or(path);
        Ok(FileDigest { path: shown.display().to_string(), sha256: hex::encode(Sha256::digest(&bytes)) })
    }

    /// Digest of an input, recorded by file name so that the same input
    /// read from different directories gives the same manifest.
    pub fn input(path: &Path) -> Result<Self> {
        let mut d = FileDigest::of(path, path.parent().unwrap_or(Path::new("")))?;
        if let Some(name) = path.file_name() {
            d.path = name.to_string_lossy().into_owned();
        }
        Ok(d)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitSummary {
    pub spec: String,
    pub family: String,
    pub n_obs: usize,
    pub n_clusters: usize,
    pub log_likelihood: f64,
    pub converged: bool,
    pub iterations: usize,
    pub gradient_max_norm: f64,
}

impl FitSummary {
    pub fn new(spec: &str, fit: &FitResult) -> Self {
        FitSummary {
            spec: spec.into(),
            family: fit.family.name().into(),
            n_obs: fit.n_obs,
            n_clusters: fit.n_clusters,
            log_likelihood: fit.log_likelihood,
            converged: fit.converged,
            iterations: fit.iterations,
            gradient_max_norm: fit.gradient_max_norm,
        }
    }
}

/// Everything needed to tell two runs apart. Reruns with the same inputs
/// differ only in `wall_time_s`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub command: String,
    pub tradenet_version: String,
    pub core_version: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config_digest: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitSummary>,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub wall_time_s: f64,
}

impl Manifest {
    pub fn new(command: &str) -> Self {
        Manifest {
            command: command.into(),
            tradenet_version: env!("CARGO_PKG_VERSION").into(),
            core_version: tradenet_core::VERSION.into(),
            config_digest: None,
            seed: None,
            threads: None,
            fit: None,
            inputs: Vec::new(),
            outputs: Vec::new(),
            wall_time_s: 0.0,
        }
    }

    /// Writes `manifest.toml` into `dir` after digesting `outputs`.
    pub fn write(mut self, dir: &Path, outputs: &[PathBuf], wall_time_s: f64) -> Result<PathBuf> {
        self.outputs = outputs.iter().map(|p| FileDigest::of(p, dir)).collect::<Result<_>>()?;
        self.wall_time_s = wall_time_s;
        let path = dir.join("manifest.toml");
        let text = toml::to_string(&self).map_err(|e| Error::Usage(format!("manifest: {e}")))?;
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}

/// `term,estimate,std_error,z` in design order.
pub fn write_fit_report(fit: &FitResult, path: &Path) -> Result<()> {
    let mut out = String::from("term,estimate,std_error,z\n");
    for (i, name) in fit.names.iter().enumerate() {
        out.push_str(&format!(
            "{name},{},{},{}\n",
            fmt_g(fit.coefficients[i]),
            fmt_g(fit.std_errors[i]),
            fmt_g(fit.z_stats[i])
        ));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}
