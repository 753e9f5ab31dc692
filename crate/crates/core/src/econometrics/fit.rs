use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_1_SQRT_2, PI};

use super::design::INTERCEPT;
use super::linalg::{cholesky, cholesky_solve, dot, Matrix};
use super::vcov::standard_errors;
use super::{build_design, clustered_vcov, ClusterCorrection, Design, EstimationError, Family, Frame, RegressionSpec};

/// Rows per leaf of the deterministic reduction tree.
const LEAF_ROWS: usize = 256;

/// Below this argument `ln Phi` and the Mills ratio switch to the
/// asymptotic tail expansion.
const TAIL: f64 = -30.0;

#[inline]
fn ln_norm_pdf(x: f64) -> f64 {
    -0.5 * x * x - 0.5 * libm::log(2.0 * PI)
}

/// Standard normal CDF.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// `ln Phi(x)`, accurate in both tails.
pub fn ln_norm_cdf(x: f64) -> f64 {
    if x < TAIL {
        let r = 1.0 / (x * x);
        ln_norm_pdf(x) - libm::log(-x) + libm::log(1.0 - r + 3.0 * r * r - 15.0 * r * r * r)
    } else if x > 5.0 {
        libm::log1p(-0.5 * libm::erfc(x * FRAC_1_SQRT_2))
    } else {
        libm::log(norm_cdf(x))
    }
}

/// Inverse Mills ratio `phi(x) / Phi(x)`.
pub fn mills_ratio(x: f64) -> f64 {
    if x < TAIL {
        libm::exp(ln_norm_pdf(x) - ln_norm_cdf(x))
    } else {
        libm::exp(ln_norm_pdf(x)) / norm_cdf(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Convergence threshold on the max-norm of the log-likelihood gradient.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub max_halvings: usize,
    pub correction: ClusterCorrection,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { tolerance: 1e-8, max_iterations: 100, max_halvings: 60, correction: ClusterCorrection::None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub log_likelihood: f64,
    /// Accepted step length after halving (0 for the starting point).
    pub step: f64,
    pub gradient_max_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub family: Family,
    pub names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub z_stats: Vec<f64>,
    pub vcov: Matrix,
    pub log_likelihood: f64,
    pub n_obs: usize,
    pub n_clusters: usize,
    pub converged: bool,
    pub iterations: usize,
    pub gradient_max_norm: f64,
    pub trace: Vec<IterationRecord>,
}

impl FitResult {
    fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn coefficient(&self, name: &str) -> Option<f64> {
        self.index(name).map(|i| self.coefficients[i])
    }

    pub fn std_error(&self, name: &str) -> Option<f64> {
        self.index(name).map(|i| self.std_errors[i])
    }
}

#[derive(Clone)]
struct Accumulated {
    ll: f64,
    grad: Vec<f64>,
    /// Upper triangle of the information matrix `-H`.
    info: Vec<f64>,
}

impl Accumulated {
    fn zero(k: usize) -> Self {
        Accumulated { ll: 0.0, grad: vec![0.0; k], info: vec![0.0; k * k] }
    }

    fn add(mut self, other: Accumulated) -> Self {
        self.ll += other.ll;
        self.grad.iter_mut().zip(&other.grad).for_each(|(a, b)| *a += b);
        self.info.iter_mut().zip(&other.info).for_each(|(a, b)| *a += b);
        self
    }
}

/// Log-likelihood contribution, score weight and information weight of one
/// row at linear index `eta`: the row's score is `score * x` and its
/// information is `weight * x x'`.
#[inline]
fn row_terms(family: Family, y: f64, eta: f64) -> (f64, f64, f64) {
    match family {
        Family::Probit => {
            let q = 2.0 * y - 1.0;
            let z = q * eta;
            let lambda = mills_ratio(z);
            (ln_norm_cdf(z), q * lambda, lambda * (lambda + z))
        }
        Family::Poisson => {
            let mu = libm::exp(eta);
            (y * eta - mu - libm::lgamma(y + 1.0), y - mu, mu)
        }
    }
}

#[inline]
fn row_loglik(family: Family, y: f64, eta: f64) -> f64 {
    match family {
        Family::Probit => ln_norm_cdf((2.0 * y - 1.0) * eta),
        Family::Poisson => y * eta - libm::exp(eta) - libm::lgamma(y + 1.0),
    }
}

fn accumulate(d: &Design, beta: &[f64], lo: usize, hi: usize) -> Accumulated {
    let k = beta.len();
    if hi - lo > LEAF_ROWS {
        let mid = lo + (hi - lo) / 2;
        return accumulate(d, beta, lo, mid).add(accumulate(d, beta, mid, hi));
    }
    let mut acc = Accumulated::zero(k);
    for i in lo..hi {
        let x = d.x.row(i);
        let (ll, s, w) = row_terms(d.family, d.y[i], dot(x, beta));
        acc.ll += ll;
        for a in 0..k {
            acc.grad[a] += s * x[a];
            let wa = w * x[a];
            if wa == 0.0 {
                continue;
            }
            for b in a..k {
                acc.info[a * k + b] += wa * x[b];
            }
        }
    }
    acc
}

fn loglik(d: &Design, beta: &[f64], lo: usize, hi: usize) -> f64 {
    if hi - lo > LEAF_ROWS {
        let mid = lo + (hi - lo) / 2;
        return loglik(d, beta, lo, mid) + loglik(d, beta, mid, hi);
    }
    let mut s = 0.0;
    for i in lo..hi {
        s += row_loglik(d.family, d.y[i], dot(d.x.row(i), beta));
    }
    s
}

/// Relative rounding level of a summed log-likelihood; changes smaller than
/// this are indistinguishable from zero.
pub const LL_RESOLUTION: f64 = 1e-12;

fn ll_resolution(ll: f64) -> f64 {
    LL_RESOLUTION * ll.abs().max(1.0)
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn info_matrix(acc: &Accumulated, k: usize) -> Matrix {
    let mut m = Matrix::from_rows(k, k, acc.info.clone());
    m.symmetrize_from_upper();
    m
}

/// Probit: a column whose values for the ones and for the zeros do not
/// overlap. Poisson: a column on which every positive count sits at one
/// extreme of the column's range. An all-zero (or, for probit, all-one)
/// response sends the intercept off to infinity.
fn check_degenerate(d: &Design) -> Result<(), EstimationError> {
    let n = d.n_obs();
    match d.family {
        Family::Probit => {
            let ones = d.y.iter().filter(|&&y| y == 1.0).count();
            if ones == 0 || ones == n {
                return Err(EstimationError::Separation(INTERCEPT.to_string()));
            }
            for (j, name) in d.names.iter().enumerate() {
                if name == INTERCEPT {
                    continue;
                }
                let (mut lo1, mut hi1, mut lo0, mut hi0) =
                    (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
                for i in 0..n {
                    let v = d.x[(i, j)];
                    if d.y[i] == 1.0 {
                        lo1 = lo1.min(v);
                        hi1 = hi1.max(v);
                    } else {
                        lo0 = lo0.min(v);
                        hi0 = hi0.max(v);
                    }
                }
                if lo1 >= hi0 || hi1 <= lo0 {
                    return Err(EstimationError::Separation(name.clone()));
                }
            }
        }
        Family::Poisson => {
            if d.y.iter().all(|&y| y == 0.0) {
                return Err(EstimationError::Unbounded(INTERCEPT.to_string()));
            }
            for (j, name) in d.names.iter().enumerate() {
                if name == INTERCEPT {
                    continue;
                }
                let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
                let (mut lo_pos, mut hi_pos) = (f64::INFINITY, f64::NEG_INFINITY);
                for i in 0..n {
                    let v = d.x[(i, j)];
                    lo = lo.min(v);
                    hi = hi.max(v);
                    if d.y[i] > 0.0 {
                        lo_pos = lo_pos.min(v);
                        hi_pos = hi_pos.max(v);
                    }
                }
                if lo < hi && (hi_pos == lo || lo_pos == hi) {
                    return Err(EstimationError::Unbounded(name.clone()));
                }
            }
        }
    }
    Ok(())
}

fn newton_direction(info: &Matrix, grad: &[f64]) -> Result<Vec<f64>, EstimationError> {
    if let Ok(l) = cholesky(info) {
        return Ok(cholesky_solve(&l, grad));
    }
    // Nearly singular information far from the optimum: regularise slightly.
    let k = info.rows();
    let scale = (0..k).fold(0.0f64, |m, i| m.max(info[(i, i)].abs())).max(1.0);
    for ridge in [1e-10, 1e-8, 1e-6, 1e-4] {
        let mut m = info.clone();
        for i in 0..k {
            m[(i, i)] += ridge * scale;
        }
        if let Ok(l) = cholesky(&m) {
            return Ok(cholesky_solve(&l, grad));
        }
    }
    Err(EstimationError::RankDeficient)
}

fn starting_values(d: &Design) -> Vec<f64> {
    let mut beta = vec![0.0; d.n_params()];
    if let (Family::Poisson, Some(j)) = (d.family, d.names.iter().position(|n| n == INTERCEPT)) {
        let mean = d.y.iter().sum::<f64>() / d.n_obs() as f64;
        beta[j] = libm::log(mean);
    }
    beta
}

/// Maximum likelihood by Newton steps with step-halving. Every accepted step
/// weakly increases the log-likelihood, up to [`LL_RESOLUTION`] relative
/// rounding of the summed likelihood; the fit has converged once the
/// gradient max-norm is at most `opts.tolerance`.
pub fn fit(design: &Design, opts: &FitOptions) -> Result<FitResult, EstimationError> {
    let n = design.n_obs();
    let k = design.n_params();
    if n == 0 {
        return Err(EstimationError::NoRows);
    }
    check_degenerate(design)?;

    let mut beta = starting_values(design);
    let mut acc = accumulate(design, &beta, 0, n);
    let mut trace =
        vec![IterationRecord { iteration: 0, log_likelihood: acc.ll, step: 0.0, gradient_max_norm: max_norm(&acc.grad) }];
    let mut iterations = 0;
    while iterations < opts.max_iterations && max_norm(&acc.grad) > opts.tolerance {
        let dir = newton_direction(&info_matrix(&acc, k), &acc.grad)?;
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let cand: Vec<f64> = beta.iter().zip(&dir).map(|(b, d)| b + step * d).collect();
            let ll = loglik(design, &cand, 0, n);
            if ll.is_finite() && ll >= acc.ll {
                let next = accumulate(design, &cand, 0, n);
                accepted = Some((cand, next));
                break;
            }
            if ll.is_finite() && acc.ll - ll <= ll_resolution(acc.ll) {
                // Near the optimum the predicted gain falls below the rounding
                // of the summed likelihood; take the step if it shrinks the
                // gradient.
                let next = accumulate(design, &cand, 0, n);
                if max_norm(&next.grad) < max_norm(&acc.grad) {
                    accepted = Some((cand, next));
                    break;
                }
            }
            step *= 0.5;
        }
        let Some((cand, next)) = accepted else {
            break;
        };
        iterations += 1;
        beta = cand;
        acc = next;
        trace.push(IterationRecord {
            iteration: iterations,
            log_likelihood: acc.ll,
            step,
            gradient_max_norm: max_norm(&acc.grad),
        });
    }

    let gradient_max_norm = max_norm(&acc.grad);
    let mut scores = Matrix::zeros(n, k);
    for i in 0..n {
        let x = design.x.row(i);
        let (_, s, _) = row_terms(design.family, design.y[i], dot(x, &beta));
        for (out, xv) in scores.row_mut(i).iter_mut().zip(x) {
            *out = s * xv;
        }
    }
    let mut hessian = info_matrix(&acc, k);
    hessian.scale(-1.0);
    let vcov = clustered_vcov(&scores, &hessian, &design.cluster, design.n_clusters, opts.correction)?;
    let std_errors = standard_errors(&vcov);
    let z_stats = beta.iter().zip(&std_errors).map(|(b, s)| b / s).collect();

    Ok(FitResult {
        family: design.family,
        names: design.names.clone(),
        coefficients: beta,
        std_errors,
        z_stats,
        vcov,
        log_likelihood: acc.ll,
        n_obs: n,
        n_clusters: design.n_clusters,
        converged: gradient_max_norm <= opts.tolerance,
        iterations,
        gradient_max_norm,
        trace,
    })
}

pub fn fit_probit(frame: &Frame, spec: &RegressionSpec, opts: &FitOptions) -> Result<FitResult, EstimationError> {
    let spec = RegressionSpec { family: Family::Probit, ..spec.clone() };
    fit(&build_design(frame, &spec)?, opts)
}

pub fn fit_poisson(frame: &Frame, spec: &RegressionSpec, opts: &FitOptions) -> Result<FitResult, EstimationError> {
    let spec = RegressionSpec { family: Family::Poisson, ..spec.clone() };
    fit(&build_design(frame, &spec)?, opts)
}
