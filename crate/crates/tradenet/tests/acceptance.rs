//! Acceptance criteria, one test each. Every test writes a single
//! `criterion N: PASS|FAIL ...` line straight to stderr (past the test
//! harness's capture) before asserting, so a full run lists all eight.
//! Tolerances are pinned here and nowhere else.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand_distr::{Distribution, Poisson, StandardNormal};
use tradenet::cli::{estimate, simulate, EstimateArgs, SimulateArgs};
use tradenet::stats::{logged_events, stylized_facts, Quantiles};
use tradenet_core::econometrics::{build_design, fit, Family, FitOptions, Frame, Matrix, RegressionSpec};
use tradenet_core::entry::{
    attenuation_product, cross_partial_gamma_n, cutoff_cost, solve_equilibrium_n, EntryEnvironment, SolveOptions,
};
use tradenet_core::market::{firm_profit, incremental_export_profit, optimal_quantity, IndustryParams, Preferences};
use tradenet_core::rng::{SeedTree, Stream};
use tradenet_core::statics::{limit_grid, run_grid, StaticsGrid};

const DERIVATIVE_REL_TOL: f64 = 1e-4;
const DERIVATIVE_BUDGET: Duration = Duration::from_secs(10);
const FAR_HUB: f64 = 1e6;
const LIMIT_REL_TOL: f64 = 0.10;
const ROUND_TRIP_CASES: u64 = 1000;
const ROUND_TRIP_ABS_TOL: f64 = 1e-8;
const ROUND_TRIP_BUDGET: Duration = Duration::from_secs(5);
const IDENTITY_REL_TOL: f64 = 1e-12;
const ORACLE_COEF_TOL: f64 = 1e-3;
const VCOV_REL_TOL: f64 = 1e-10;
const SIGN_SEEDS: u64 = 10;
const SIGN_MIN_HITS: usize = 8;
const SIMULATION_BUDGET: Duration = Duration::from_secs(300);

fn report(id: u32, pass: bool, detail: &str) {
    let line = format!("criterion {id}: {} {detail}\n", if pass { "PASS" } else { "FAIL" });
    let mut err = std::io::stderr().lock();
    let _ = err.write_all(line.as_bytes());
    let _ = err.flush();
}

fn workspace_file(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

fn criterion_grid() -> StaticsGrid {
    StaticsGrid {
        gammas: (1..=10).map(|k| k as f64 / 10.0).collect(),
        n_values: (1..=10).map(f64::from).collect(),
        etas: vec![0.5, 1.0, 2.0],
        alpha: 2.0,
        p_bar: 1.0,
        s_s: 1.0,
        tolerance: DERIVATIVE_REL_TOL,
        ..StaticsGrid::default()
    }
}

#[test]
fn criterion_1_derivatives_match_finite_differences() {
    let start = Instant::now();
    let rows = run_grid(&criterion_grid()).expect("grid evaluates");
    let elapsed = start.elapsed();
    let worst = rows.iter().max_by(|a, b| a.rel_error.total_cmp(&b.rel_error)).unwrap();
    let failed = rows.iter().filter(|r| r.rel_error > DERIVATIVE_REL_TOL).count();
    let pass = failed == 0 && elapsed < DERIVATIVE_BUDGET;
    report(
        1,
        pass,
        &format!(
            "{} checks, {failed} above {DERIVATIVE_REL_TOL:e}; worst {:.2e} ({} at gamma={} N={} eta={}); {:.2}s",
            rows.len(),
            worst.rel_error,
            worst.quantity.name(),
            worst.gamma,
            worst.n_s,
            worst.eta,
            elapsed.as_secs_f64()
        ),
    );
    assert!(pass);
}

/// `x` rounded to `sig` significant figures.
fn round_sig(x: f64, sig: i32) -> f64 {
    let e = x.abs().log10().floor() as i32;
    let f = 10f64.powi(sig - 1 - e);
    (x * f).round() / f
}

#[test]
fn criterion_2_large_hub_distance_limit() {
    let rows = limit_grid(&criterion_grid(), FAR_HUB).expect("limit grid evaluates");
    let non_positive = rows.iter().filter(|r| !r.positive()).count();
    let tail: Vec<_> = rows.iter().filter(|r| r.n_s >= 4.0).collect();
    let outside: Vec<_> = tail.iter().filter(|r| !r.within(r.approximation, LIMIT_REL_TOL)).collect();
    let worst = tail
        .iter()
        .map(|r| ((r.exact - r.approximation) / r.approximation).abs())
        .fold(0.0f64, f64::max);
    // quoted as 0.09 and 5.3e-11; each is compared at the precision printed
    let at5 = attenuation_product(5.0).unwrap();
    let at28 = attenuation_product(28.0).unwrap();
    let quoted_ok = (at5 * 100.0).round() / 100.0 == 0.09 && round_sig(at28, 2) == 5.3e-11;
    let pass = non_positive == 0 && outside.is_empty() && quoted_ok;
    report(
        2,
        pass,
        &format!(
            "dN/dgamma > 0 at {}/{} points; within {:.0}% of 1/(gamma^3 eta) at {}/{} points with N>=4 \
             (worst relative gap {worst:.3}); N e^(1-N) = {at5:.4} at 5, {at28:.3e} at 28",
            rows.len() - non_positive,
            rows.len(),
            LIMIT_REL_TOL * 100.0,
            tail.len() - outside.len(),
            tail.len()
        ),
    );
    assert!(pass);
}

/// Environments with `alpha > p_bar`, drawn uniformly from fixed ranges.
fn random_environment(tree: &SeedTree, case: u64) -> (EntryEnvironment, f64) {
    let u = |k: u64, lo: f64, hi: f64| lo + (hi - lo) * tree.uniform(Stream::Test, case, k, 0);
    let params =
        IndustryParams::new(u(0, 0.05, 2.0), u(1, 0.0, 1.0), u(2, 1.01, 5.0), u(3, 0.1, 2.0), 0.0, u(4, 0.05, 1.0))
            .unwrap();
    let alpha = u(5, 1.5, 5.0);
    let prefs = Preferences::new(alpha, u(6, 0.2, 3.0)).unwrap();
    let dp = u(9, 0.0, 20.0);
    let env = EntryEnvironment::new(params, prefs, u(7, 0.05, 0.95) * alpha, u(8, 10.0, 500.0)).with_distances(
        u(10, 0.0, 10.0),
        u(11, 0.0, 10.0),
        dp,
        u(12, 0.0, 1.0) * dp,
    );
    (env, u(13, 0.05, 50.0))
}

#[test]
fn criterion_3_equilibrium_round_trip() {
    let tree = SeedTree::new(20_240_601);
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut errors = 0;
    for case in 0..ROUND_TRIP_CASES {
        let (env, n) = random_environment(&tree, case);
        let c = cutoff_cost(&env, n).unwrap();
        match solve_equilibrium_n(&env, c, SolveOptions::default()) {
            Ok(eq) => worst = worst.max((eq.n_s - n).abs()),
            Err(_) => errors += 1,
        }
    }
    let elapsed = start.elapsed();
    let pass = errors == 0 && worst <= ROUND_TRIP_ABS_TOL && elapsed < ROUND_TRIP_BUDGET;
    report(
        3,
        pass,
        &format!(
            "{ROUND_TRIP_CASES} environments, {errors} solver errors, worst |N - N*| = {worst:.2e}; {:.2}s",
            elapsed.as_secs_f64()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_4_algebraic_identities() {
    let grid = criterion_grid();
    let mut worst_profit = 0.0f64;
    let mut worst_cross = 0.0f64;
    for &eta in &grid.etas {
        let prefs = Preferences::new(grid.alpha, eta).unwrap();
        for &gamma in &grid.gammas {
            for &n in &grid.n_values {
                let c = cross_partial_gamma_n(n, gamma, &prefs, grid.p_bar, grid.s_s);
                if c.value != 0.0 {
                    worst_cross = worst_cross.max(((c.value - c.quartic_form) / c.value).abs());
                }
                let size = 10.0 * n;
                for cost in [0.0, 0.25, 0.5, 0.9] {
                    let cutoff = cost + 0.1 * n;
                    let q = optimal_quantity(cost, cutoff, size, gamma).unwrap();
                    let via_output = incremental_export_profit(q, cost, cutoff).unwrap();
                    let direct = firm_profit(cost, cutoff, size, gamma).unwrap().value;
                    worst_profit = worst_profit.max(((via_output - direct) / direct).abs());
                }
            }
        }
    }
    let pass = worst_profit <= IDENTITY_REL_TOL && worst_cross <= IDENTITY_REL_TOL;
    report(
        4,
        pass,
        &format!(
            "profit via output vs direct: worst {worst_profit:.2e}; cross-partial forms: worst {worst_cross:.2e}"
        ),
    );
    assert!(pass);
}

fn oracle_frame(family: Family, n: usize, beta: [f64; 3], clusters: usize, seed: u64) -> Frame {
    let mut rng = SeedTree::new(seed).rng(Stream::Test, n as u64, clusters as u64, 7);
    let (mut x1, mut x2, mut y) = (Vec::new(), Vec::new(), Vec::new());
    for _ in 0..n {
        let a: f64 = StandardNormal.sample(&mut rng);
        let b: f64 = StandardNormal.sample(&mut rng);
        let index = beta[0] + beta[1] * a + beta[2] * b;
        y.push(match family {
            Family::Probit => {
                let e: f64 = StandardNormal.sample(&mut rng);
                f64::from(u8::from(index + e > 0.0))
            }
            Family::Poisson => Poisson::new(index.exp()).unwrap().sample(&mut rng),
        });
        x1.push(a);
        x2.push(b);
    }
    let firm = (0..n).map(|i| (i % clusters) as f64).collect();
    Frame::new()
        .with_column("x1", x1)
        .and_then(|f| f.with_column("x2", x2))
        .and_then(|f| f.with_column("y", y))
        .and_then(|f| f.with_column("firm", firm))
        .unwrap()
}

fn phi(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

fn phi_density(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Coefficients in design order: `x1, x2, intercept`.
fn oracle_loglik(family: Family, f: &Frame, b: [f64; 3]) -> f64 {
    let (x1, x2, y) = (f.column("x1").unwrap(), f.column("x2").unwrap(), f.column("y").unwrap());
    (0..y.len())
        .map(|i| {
            let index = b[0] * x1[i] + b[1] * x2[i] + b[2];
            match family {
                Family::Probit if y[i] == 1.0 => phi(index).ln(),
                Family::Probit => phi(-index).ln(),
                Family::Poisson => y[i] * index - index.exp(),
            }
        })
        .sum()
}

fn grid_search(family: Family, f: &Frame) -> [f64; 3] {
    let mut centre = [0.0; 3];
    let mut half = 3.0;
    while half > 1e-7 {
        let mut best = (f64::NEG_INFINITY, centre);
        for i in 0..11 {
            for j in 0..11 {
                for k in 0..11 {
                    let step = |m: i32| f64::from(m) / 5.0 - 1.0;
                    let p = [centre[0] + half * step(i), centre[1] + half * step(j), centre[2] + half * step(k)];
                    let ll = oracle_loglik(family, f, p);
                    if ll > best.0 {
                        best = (ll, p);
                    }
                }
            }
        }
        centre = best.1;
        half *= 0.4;
    }
    centre
}

fn invert3(a: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let det = a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
    let mut inv = [[0.0; 3]; 3];
    for (r, row) in inv.iter_mut().enumerate() {
        for (c, v) in row.iter_mut().enumerate() {
            let (r1, r2) = ((c + 1) % 3, (c + 2) % 3);
            let (c1, c2) = ((r + 1) % 3, (r + 2) % 3);
            *v = (a[r1][c1] * a[r2][c2] - a[r1][c2] * a[r2][c1]) / det;
        }
    }
    inv
}

/// Sandwich covariance by a double loop over row pairs sharing a cluster.
fn naive_cluster_vcov(family: Family, f: &Frame, b: &[f64]) -> [[f64; 3]; 3] {
    let (x1, x2, y, g) =
        (f.column("x1").unwrap(), f.column("x2").unwrap(), f.column("y").unwrap(), f.column("firm").unwrap());
    let mut scores = Vec::new();
    let mut info = [[0.0; 3]; 3];
    for i in 0..y.len() {
        let x = [x1[i], x2[i], 1.0];
        let index = b[0] * x[0] + b[1] * x[1] + b[2];
        let (s, w) = match family {
            Family::Probit => {
                let q = 2.0 * y[i] - 1.0;
                let lam = phi_density(q * index) / phi(q * index);
                (q * lam, lam * (lam + q * index))
            }
            Family::Poisson => (y[i] - index.exp(), index.exp()),
        };
        scores.push(x.map(|v| s * v));
        for a in 0..3 {
            for c in 0..3 {
                info[a][c] += w * x[a] * x[c];
            }
        }
    }
    let mut meat = [[0.0; 3]; 3];
    for i in 0..y.len() {
        for j in 0..y.len() {
            if g[i] == g[j] {
                for a in 0..3 {
                    for c in 0..3 {
                        meat[a][c] += scores[i][a] * scores[j][c];
                    }
                }
            }
        }
    }
    let inv = invert3(&info);
    let mut out = [[0.0; 3]; 3];
    for a in 0..3 {
        for c in 0..3 {
            for p in 0..3 {
                for q in 0..3 {
                    out[a][c] += inv[a][p] * meat[p][q] * inv[q][c];
                }
            }
        }
    }
    out
}

fn max_rel(v: &Matrix, naive: &[[f64; 3]; 3]) -> f64 {
    let scale = naive.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut worst = 0.0f64;
    for (a, row) in naive.iter().enumerate() {
        for (c, x) in row.iter().enumerate() {
            worst = worst.max((v[(a, c)] - x).abs() / scale);
        }
    }
    worst
}

#[test]
fn criterion_5_estimators_match_oracles() {
    let mut worst_coef = 0.0f64;
    let mut worst_vcov = 0.0f64;
    let mut converged = true;
    for (k, family) in [Family::Probit, Family::Poisson].into_iter().enumerate() {
        let spec = RegressionSpec::new(family, "y", &["x1", "x2"], "firm");
        for seed in 0..3u64 {
            let f = oracle_frame(family, 200, [0.2, 0.8, -0.5], 200, 100 + 10 * k as u64 + seed);
            let r = fit(&build_design(&f, &spec).unwrap(), &FitOptions::default()).unwrap();
            converged &= r.converged;
            for (a, b) in r.coefficients.iter().zip(grid_search(family, &f)) {
                worst_coef = worst_coef.max((a - b).abs());
            }
        }
        let f = oracle_frame(family, 50, [0.1, 1.0, -0.5], 9, 200 + k as u64);
        let r = fit(&build_design(&f, &spec).unwrap(), &FitOptions::default()).unwrap();
        converged &= r.converged;
        worst_vcov = worst_vcov.max(max_rel(&r.vcov, &naive_cluster_vcov(family, &f, &r.coefficients)));
    }
    let pass = converged && worst_coef <= ORACLE_COEF_TOL && worst_vcov <= VCOV_REL_TOL;
    report(
        5,
        pass,
        &format!(
            "MLE vs grid search: worst |diff| {worst_coef:.2e} (n=200, 6 fits); \
             clustered vcov vs double loop: worst relative {worst_vcov:.2e} (n=50)"
        ),
    );
    assert!(pass);
}

const TABLE3_SIGNS: [(&str, f64); 5] = [
    ("n_sk", 1.0),
    ("industry_dist_sum", -1.0),
    ("density_dist", 1.0),
    ("gamma_x_n_sk", -1.0),
    ("gamma_x_density_dist", 1.0),
];

struct SeedRun {
    seed: u64,
    sim_time: Duration,
    rows: usize,
    expected_rows: usize,
    markets: Quantiles,
    /// Wrong-signed table-3 terms, or the estimation error.
    table3: Result<Vec<&'static str>, String>,
    table4_gamma: Result<f64, String>,
}

fn coefficient_signs(
    panel: &Path,
    out: &Path,
    preset: &str,
    want: &[(&'static str, f64)],
) -> Result<Vec<(&'static str, f64)>, String> {
    let args = EstimateArgs {
        panel: panel.to_path_buf(),
        preset: Some(preset.into()),
        spec: None,
        out: out.join(preset),
        small_sample: false,
        trace: false,
    };
    let (_, fit) = estimate(&args).map_err(|e| e.to_string())?;
    if !fit.converged {
        return Err("not converged".into());
    }
    want.iter().map(|&(t, _)| fit.coefficient(t).map(|b| (t, b)).ok_or(format!("no term {t}"))).collect()
}

fn desk_runs() -> &'static [SeedRun] {
    static RUNS: OnceLock<Vec<SeedRun>> = OnceLock::new();
    RUNS.get_or_init(|| {
        let config = workspace_file("configs/desk.toml");
        (1..=SIGN_SEEDS)
            .map(|seed| {
                let dir = tempfile::tempdir().unwrap();
                let start = Instant::now();
                let out = simulate(&SimulateArgs {
                    config: config.clone(),
                    out: dir.path().to_path_buf(),
                    seed: Some(seed),
                    threads: None,
                    trace: false,
                })
                .expect("desk simulation runs");
                let sim_time = start.elapsed();
                let h = &out.history;
                let destinations: Vec<String> =
                    h.world.foreign().map(|s| h.world.countries()[s.index()].name.clone()).collect();
                let facts =
                    stylized_facts(&logged_events(h).unwrap(), &destinations, Some(h.periods.len())).unwrap();
                let rows = std::fs::read_to_string(&out.panel).unwrap().lines().count() - 1;
                let table3 = coefficient_signs(&out.panel, dir.path(), "table3-col3", &TABLE3_SIGNS).map(|c| {
                    c.iter()
                        .zip(TABLE3_SIGNS)
                        .filter(|((_, b), (_, s))| b * s <= 0.0)
                        .map(|((t, _), _)| *t)
                        .collect()
                });
                let table4_gamma =
                    coefficient_signs(&out.panel, dir.path(), "table4-col3", &[("gamma", 1.0)]).map(|c| c[0].1);
                SeedRun {
                    seed,
                    sim_time,
                    rows,
                    expected_rows: h.firms.len() * (h.n_countries() - 1) * (h.periods.len() - 1),
                    markets: facts.final_markets().unwrap().clone(),
                    table3,
                    table4_gamma,
                }
            })
            .collect()
    })
}

#[test]
fn criterion_6_sign_reproduction() {
    let runs = desk_runs();
    let t3_hits = runs.iter().filter(|r| matches!(&r.table3, Ok(bad) if bad.is_empty())).count();
    let t4_hits = runs.iter().filter(|r| matches!(r.table4_gamma, Ok(g) if g > 0.0)).count();
    let slowest = runs.iter().map(|r| r.sim_time).max().unwrap();
    let mut misses: Vec<String> = Vec::new();
    for r in runs {
        match &r.table3 {
            Ok(bad) if bad.is_empty() => {}
            Ok(bad) => misses.push(format!("seed {}: {}", r.seed, bad.join("/"))),
            Err(e) => misses.push(format!("seed {}: {e}", r.seed)),
        }
    }
    let pass = t3_hits >= SIGN_MIN_HITS && t4_hits >= SIGN_MIN_HITS && slowest < SIMULATION_BUDGET;
    report(
        6,
        pass,
        &format!(
            "table3-col3 pattern in {t3_hits}/{SIGN_SEEDS} seeds, table4-col3 gamma > 0 in {t4_hits}/{SIGN_SEEDS} \
             (need {SIGN_MIN_HITS}); slowest simulation {:.1}s; wrong signs: {}",
            slowest.as_secs_f64(),
            if misses.is_empty() { "none".into() } else { misses.join("; ") }
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_7_stylized_fact_shapes() {
    let runs = desk_runs();
    let skewed = runs.iter().filter(|r| r.markets.right_skewed()).count();
    let rows_ok = runs.iter().filter(|r| r.rows == r.expected_rows).count();
    let pass = skewed == runs.len() && rows_ok == runs.len();
    let r0 = &runs[0];
    report(
        7,
        pass,
        &format!(
            "markets per firm right-skewed in {skewed}/{} runs (seed 1: mean {:.2}, median {}); \
             panel rows exact in {rows_ok}/{} runs ({} = firms x (countries-1) x (periods-1))",
            runs.len(),
            r0.markets.mean,
            r0.markets.median,
            runs.len(),
            r0.expected_rows
        ),
    );
    assert!(pass);
}

/// Every output file's bytes; the manifest without its timing line.
fn output_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = walk(dir).into_iter().collect();
    files.sort();
    files
        .into_iter()
        .map(|p| {
            let mut bytes = std::fs::read(&p).unwrap();
            if p.file_name().is_some_and(|n| n == "manifest.toml") {
                let text = String::from_utf8(bytes).unwrap();
                bytes = text.lines().filter(|l| !l.starts_with("wall_time_s")).collect::<Vec<_>>().join("\n").into();
            }
            (p.strip_prefix(dir).unwrap().display().to_string(), bytes)
        })
        .collect()
}

fn walk(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for e in std::fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            out.extend(walk(&p));
        } else {
            out.push(p);
        }
    }
    out
}

fn run_and_fit(threads: usize) -> (tempfile::TempDir, Vec<(String, Vec<u8>)>) {
    let dir = tempfile::tempdir().unwrap();
    let out = simulate(&SimulateArgs {
        config: workspace_file("configs/desk.toml"),
        out: dir.path().join("sim"),
        seed: None,
        threads: Some(threads),
        trace: true,
    })
    .unwrap();
    for preset in ["table3-col3", "table4-col3"] {
        estimate(&EstimateArgs {
            panel: out.panel.clone(),
            preset: Some(preset.into()),
            spec: None,
            out: dir.path().join(preset),
            small_sample: false,
            trace: true,
        })
        .unwrap();
    }
    let bytes = output_bytes(dir.path());
    (dir, bytes)
}

#[test]
fn criterion_8_byte_identical_outputs() {
    let (_a, first) = run_and_fit(1);
    let (_b, second) = run_and_fit(1);
    let (_c, threaded) = run_and_fit(4);
    let names = |v: &[(String, Vec<u8>)]| v.iter().map(|(n, _)| n.clone()).collect::<Vec<_>>();
    let differing: Vec<String> = first
        .iter()
        .zip(second.iter().zip(&threaded))
        .filter(|(a, (b, c))| *a != *b || *a != *c)
        .map(|(a, _)| a.0.clone())
        .collect();
    let pass = names(&first) == names(&second) && names(&first) == names(&threaded) && differing.is_empty();
    report(
        8,
        pass,
        &format!(
            "{} files compared across two runs and threads 1 vs 4; differing: {}",
            first.len(),
            if differing.is_empty() { "none".into() } else { differing.join(", ") }
        ),
    );
    assert!(pass);
}
