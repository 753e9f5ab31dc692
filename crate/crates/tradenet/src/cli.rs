//! Command implementations behind the `tradenet` binary.
//!
//! Each command returns the process exit code on success paths that still
//! report a failure (verification misses, non-convergence); hard errors come
//! back as [`Error`] and map through [`Error::exit_code`].

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use tradenet_core::econometrics::{fit, build_design, FitOptions, FitResult};
use tradenet_core::statics::{limit_grid, run_grid, DensityMarket, StaticsGrid, StaticsRow};

use crate::config::{self, SimConfig};
use crate::error::{exit, ConfigError, Error, Result};
use crate::format::fmt_g;
use crate::history::{read_history, write_history, write_market_state, write_trace};
use crate::panel::{extract_panel, read_frame, require_columns, write_frame};
use crate::presets::{parse_spec_file, preset, SpecFile, PRESETS};
use crate::report::{write_fit_report, FileDigest, FitSummary, Manifest};
use crate::sim::{run_simulation, History};
use crate::stats::{logged_events, stylized_facts, write_stylized_facts};
use crate::world;

#[derive(Debug, Parser)]
#[command(name = "tradenet", version, about = "Export-network entry simulator and estimator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a simulation and write the panel, history and summaries.
    Simulate(SimulateArgs),
    /// Check the analytic comparative statics against finite differences.
    Verify(VerifyArgs),
    /// Fit a preset or spec file to a panel.
    Estimate(EstimateArgs),
    /// Descriptive tables from a history file.
    Stats(StatsArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Replaces the config's seed.
    #[arg(long, value_parser = clap::value_parser!(u64).range(0..=i64::MAX as u64))]
    pub seed: Option<u64>,
    /// Worker threads for the decision step (default: all cores).
    #[arg(long)]
    pub threads: Option<usize>,
    /// Also write every evaluated entry decision to `trace.csv`.
    #[arg(long)]
    pub trace: bool,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    /// Grid file; the built-in grid when absent.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Overrides the grid's relative tolerance.
    #[arg(long)]
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct EstimateArgs {
    #[arg(long)]
    pub panel: PathBuf,
    /// One of the built-in specifications.
    #[arg(long, conflicts_with = "spec", required_unless_present = "spec")]
    pub preset: Option<String>,
    /// A TOML spec file.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Apply the G/(G-1) (n-1)/(n-k) correction to the clustered covariance.
    #[arg(long)]
    pub small_sample: bool,
    /// Write the optimizer's iteration log to `iterations.csv`.
    #[arg(long)]
    pub trace: bool,
}

#[derive(Debug, Clone, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub history: PathBuf,
    /// Country file; defaults to `world.csv` next to the history.
    #[arg(long)]
    pub world: Option<PathBuf>,
    /// Number of periods simulated; read from `config.toml` next to the
    /// history when absent, else the last period in the log.
    #[arg(long)]
    pub periods: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Simulate(a) => simulate(&a).map(|_| exit::OK),
        Command::Verify(a) => verify(&a),
        Command::Estimate(a) => estimate(&a).map(|(code, _)| code),
        Command::Stats(a) => stats(&a),
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Loads a config and applies the seed override.
pub fn load_config(path: &Path, seed: Option<u64>) -> Result<(SimConfig, PathBuf)> {
    let loaded = config::load(path)?;
    let mut cfg = loaded.config.clone();
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok((cfg, loaded.base_dir()))
}

/// Everything `simulate` produced, for callers that keep going in-process.
pub struct SimulateOutput {
    pub history: History,
    pub panel: PathBuf,
    pub outputs: Vec<PathBuf>,
}

pub fn simulate(a: &SimulateArgs) -> Result<SimulateOutput> {
    let start = Instant::now();
    let (cfg, base) = load_config(&a.config, a.seed)?;
    let geometry = world::load(&cfg.world, &base, cfg.seed)?;
    let history = run_simulation(&cfg, geometry, a.threads, a.trace)?;
    ensure_dir(&a.out)?;

    let mut outputs = Vec::new();
    let world_path = a.out.join("world.csv");
    world::write_countries(&history.world, &world_path)?;
    outputs.push(world_path);
    let hist_path = a.out.join("history.csv");
    write_history(&history, &hist_path)?;
    outputs.push(hist_path);
    let state_path = a.out.join("market_state.csv");
    write_market_state(&history, &state_path)?;
    outputs.push(state_path);
    let panel = extract_panel(&history, cfg.world.log_distance_unit_km)?;
    let panel_path = a.out.join("panel.csv");
    write_frame(&panel, &panel_path)?;
    outputs.push(panel_path.clone());
    if a.trace {
        let p = a.out.join("trace.csv");
        write_trace(&history, &p)?;
        outputs.push(p);
    }
    let destinations: Vec<String> = history.world.foreign().map(|s| history.world.countries()[s.index()].name.clone()).collect();
    let facts = stylized_facts(&logged_events(&history)?, &destinations, Some(history.periods.len()))?;
    outputs.extend(write_stylized_facts(&facts, &a.out)?);

    let mut m = Manifest::new("simulate");
    m.config_digest = Some(cfg.digest());
    m.seed = Some(cfg.seed);
    m.inputs.push(FileDigest::input(&a.config)?);
    let canonical = a.out.join("config.toml");
    std::fs::write(&canonical, cfg.canonical()).map_err(|e| Error::io(&canonical, e))?;
    outputs.push(canonical);
    m.write(&a.out, &outputs, start.elapsed().as_secs_f64())?;
    Ok(SimulateOutput { history, panel: panel_path, outputs })
}

/// Optional overrides of the built-in verification grid.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridFile {
    pub gammas: Option<Vec<f64>>,
    pub n_values: Option<Vec<f64>>,
    pub etas: Option<Vec<f64>>,
    pub alpha: Option<f64>,
    pub p_bar: Option<f64>,
    pub s_s: Option<f64>,
    pub sigma: Option<f64>,
    pub info_cost: Option<f64>,
    pub delta: Option<f64>,
    pub d_s: Option<f64>,
    pub d_0s: Option<f64>,
    pub d_prime_s: Option<f64>,
    pub d_rho_s: Option<f64>,
    pub size: Option<f64>,
    /// `[[size, distance], ...]`
    pub density_markets: Option<Vec<[f64; 2]>>,
    pub tolerance: Option<f64>,
    pub abs_floor: Option<f64>,
    pub gamma_step: Option<f64>,
    /// Hub distance for the large-distance limit report.
    pub far_d_0s: Option<f64>,
}

pub const DEFAULT_FAR_D0S: f64 = 1e6;

impl GridFile {
    pub fn into_grid(self) -> (StaticsGrid, f64) {
        let mut g = StaticsGrid::default();
        macro_rules! take {
            ($($f:ident),*) => { $(if let Some(v) = self.$f { g.$f = v; })* };
        }
        take!(gammas, n_values, etas, alpha, p_bar, s_s, sigma, info_cost, delta, d_s, d_0s, d_prime_s, d_rho_s, size, tolerance, abs_floor, gamma_step);
        if let Some(m) = self.density_markets {
            g.density_markets = m.into_iter().map(|[size, distance]| DensityMarket { size, distance }).collect();
        }
        (g, self.far_d_0s.unwrap_or(DEFAULT_FAR_D0S))
    }
}

pub fn load_grid(path: Option<&Path>) -> Result<(StaticsGrid, f64)> {
    let Some(path) = path else {
        return Ok(GridFile::default().into_grid());
    };
    let src = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: GridFile = toml::from_str(&src).map_err(|e| {
        Error::Config(ConfigError {
            path: Some(path.to_path_buf()),
            line: e.span().map(|s| src[..s.start.min(src.len())].matches('\n').count() + 1),
            field: String::new(),
            message: e.message().trim().to_string(),
        })
    })?;
    Ok(file.into_grid())
}

fn statics_csv(rows: &[StaticsRow]) -> String {
    let mut out = String::from("quantity,gamma,n_s,eta,analytic,finite_difference,rel_error,pass\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.quantity.name(),
            fmt_g(r.gamma),
            fmt_g(r.n_s),
            fmt_g(r.eta),
            fmt_g(r.analytic),
            fmt_g(r.finite_difference),
            fmt_g(r.rel_error),
            u8::from(r.pass)
        ));
    }
    out
}

/// Runs the finite-difference sweep. Exit 0 iff every point passes; the
/// large-distance limit table is reported but does not gate the result.
pub fn verify(a: &VerifyArgs) -> Result<i32> {
    let start = Instant::now();
    let (mut grid, far) = load_grid(a.config.as_deref())?;
    if let Some(t) = a.tolerance {
        grid.tolerance = t;
    }
    if grid.is_empty() {
        return Err(Error::Usage("verification grid is empty: nothing to verify".into()));
    }
    if !(grid.tolerance > 0.0) {
        return Err(Error::Usage(format!("tolerance {} must be positive", grid.tolerance)));
    }
    let rows = run_grid(&grid)?;
    ensure_dir(&a.out)?;
    let report = a.out.join("statics_report.csv");
    std::fs::write(&report, statics_csv(&rows)).map_err(|e| Error::io(&report, e))?;

    let mut lim = String::from("gamma,n_s,eta,exact,inverse_gamma3_eta,inverse_gamma2_eta,limit_expression,positive\n");
    for r in limit_grid(&grid, far)? {
        lim.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            fmt_g(r.gamma),
            fmt_g(r.n_s),
            fmt_g(r.eta),
            fmt_g(r.exact),
            fmt_g(r.approximation),
            fmt_g(r.distance_limit),
            fmt_g(r.limit_expression),
            u8::from(r.positive())
        ));
    }
    let limits = a.out.join("limit_report.csv");
    std::fs::write(&limits, lim).map_err(|e| Error::io(&limits, e))?;

    let mut m = Manifest::new("verify");
    if let Some(p) = &a.config {
        m.inputs.push(FileDigest::input(p)?);
    }
    m.write(&a.out, &[report, limits], start.elapsed().as_secs_f64())?;

    let failed = rows.iter().filter(|r| !r.pass).count();
    if failed == 0 {
        println!("verify: {} points pass at tolerance {}", rows.len(), grid.tolerance);
        return Ok(exit::OK);
    }
    let worst = rows.iter().max_by(|x, y| x.rel_error.total_cmp(&y.rel_error)).expect("nonempty");
    eprintln!(
        "verify: {failed} of {} points fail; worst {} at gamma={} N={} eta={}: analytic {} vs finite difference {} (rel error {})",
        rows.len(),
        worst.quantity.name(),
        fmt_g(worst.gamma),
        fmt_g(worst.n_s),
        fmt_g(worst.eta),
        fmt_g(worst.analytic),
        fmt_g(worst.finite_difference),
        fmt_g(worst.rel_error)
    );
    Ok(exit::VERIFY_FAILED)
}

pub fn resolve_spec(a: &EstimateArgs) -> Result<(String, SpecFile)> {
    match (&a.preset, &a.spec) {
        (Some(name), None) => preset(name).map(|s| (name.clone(), s)).ok_or_else(|| {
            Error::Usage(format!("unknown preset `{name}`; known: {}", PRESETS.join(", ")))
        }),
        (None, Some(path)) => {
            let src = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            Ok((path.display().to_string(), parse_spec_file(&src, path)?))
        }
        _ => Err(Error::Usage("give exactly one of --preset or --spec".into())),
    }
}

/// Fits and writes `fit_report.csv` plus the manifest. Non-convergence still
/// writes the report and returns exit code 4.
pub fn estimate(a: &EstimateArgs) -> Result<(i32, FitResult)> {
    let start = Instant::now();
    let (label, spec_file) = resolve_spec(a)?;
    let frame = read_frame(&a.panel)?;
    require_columns(&frame, &a.panel, &spec_file.columns())?;
    let (spec, mut correction) = spec_file.to_spec().map_err(Error::Usage)?;
    if a.small_sample {
        correction = tradenet_core::econometrics::ClusterCorrection::SmallSample;
    }
    let design = build_design(&frame, &spec)?;
    let opts = FitOptions { correction, max_iterations: spec_file.max_iterations, ..FitOptions::default() };
    let result = fit(&design, &opts)?;

    ensure_dir(&a.out)?;
    let report = a.out.join("fit_report.csv");
    write_fit_report(&result, &report)?;
    let mut outputs = vec![report];
    if a.trace {
        let p = a.out.join("iterations.csv");
        let mut s = String::from("iteration,log_likelihood,step,gradient_max_norm\n");
        for r in &result.trace {
            s.push_str(&format!(
                "{},{},{},{}\n",
                r.iteration,
                fmt_g(r.log_likelihood),
                fmt_g(r.step),
                fmt_g(r.gradient_max_norm)
            ));
        }
        std::fs::write(&p, s).map_err(|e| Error::io(&p, e))?;
        outputs.push(p);
    }
    let mut m = Manifest::new("estimate");
    m.inputs.push(FileDigest::input(&a.panel)?);
    m.fit = Some(FitSummary::new(&label, &result));
    m.write(&a.out, &outputs, start.elapsed().as_secs_f64())?;
    let code = if result.converged { exit::OK } else { exit::NOT_CONVERGED };
    if !result.converged {
        eprintln!(
            "estimate: no convergence after {} iterations (gradient max-norm {}); report written",
            result.iterations,
            fmt_g(result.gradient_max_norm)
        );
    }
    Ok((code, result))
}

pub fn stats(a: &StatsArgs) -> Result<i32> {
    let start = Instant::now();
    let events = read_history(&a.history)?;
    let world_path = a
        .world
        .clone()
        .unwrap_or_else(|| a.history.parent().unwrap_or(Path::new(".")).join("world.csv"));
    let countries = world::read_countries(&world_path)?;
    let destinations: Vec<String> = countries.iter().filter(|c| !c.home).map(|c| c.name.clone()).collect();
    let dir = a.history.parent().unwrap_or(Path::new("."));
    let periods = match a.periods {
        Some(p) => Some(p),
        None => match std::fs::read_to_string(dir.join("config.toml")) {
            Ok(src) => Some(config::parse(&src, Some(&dir.join("config.toml")))?.periods),
            Err(_) => None,
        },
    };
    let facts = stylized_facts(&events, &destinations, periods)?;
    ensure_dir(&a.out)?;
    let outputs = write_stylized_facts(&facts, &a.out)?;
    let mut m = Manifest::new("stats");
    m.inputs.push(FileDigest::input(&a.history)?);
    m.inputs.push(FileDigest::input(&world_path)?);
    m.write(&a.out, &outputs, start.elapsed().as_secs_f64())?;
    Ok(exit::OK)
}
