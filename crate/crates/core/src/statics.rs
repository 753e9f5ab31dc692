//! Finite-difference verification of the analytic comparative statics.
//!
//! Each analytic derivative is compared against a difference quotient of the
//! underlying forward map only:
//!
//! - `dN/dgamma`: central difference of [`solve_equilibrium_n`] in `gamma`
//!   at a fixed cutoff target.
//! - `d^2 c/dgamma dN`: Richardson-extrapolated mixed central difference of
//!   the `I4` cost term.
//! - `d^2 c/dgamma d d_rho`: mixed difference of `I4(gamma, N(rho))`, where
//!   `N(rho)` inverts the density-weighted distance of a fixed set of
//!   markets that all carry the common count `N`.

use alloc::vec::Vec;

use crate::entry::{
    cross_partial_gamma_drho, cross_partial_gamma_n, cutoff_cost, dn_dgamma, solve_equilibrium_n,
    variable_cost_i4, EntryEnvironment, Regime, SolveOptions,
};
use crate::market::{IndustryParams, Preferences};
use crate::roots::{smallest_root, RootOptions};
use crate::{ModelError, Result};

/// Which derivative a row checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    DnDgamma,
    CrossGammaN,
    CrossGammaRho,
}

impl Quantity {
    pub fn name(self) -> &'static str {
        match self {
            Quantity::DnDgamma => "dN_dgamma",
            Quantity::CrossGammaN => "d2c_dgamma_dN",
            Quantity::CrossGammaRho => "d2c_dgamma_drho",
        }
    }
}

/// A market contributing to the density-weighted distance: size and distance
/// to the target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMarket {
    pub size: f64,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StaticsGrid {
    pub gammas: Vec<f64>,
    pub n_values: Vec<f64>,
    pub etas: Vec<f64>,
    pub alpha: f64,
    pub p_bar: f64,
    pub s_s: f64,
    pub sigma: f64,
    pub info_cost: f64,
    pub delta: f64,
    pub d_s: f64,
    pub d_0s: f64,
    pub d_prime_s: f64,
    pub d_rho_s: f64,
    pub size: f64,
    pub density_markets: Vec<DensityMarket>,
    /// Relative tolerance on `|analytic - fd|`.
    pub tolerance: f64,
    /// Denominator floor of the relative error, for points where the
    /// derivative crosses zero.
    pub abs_floor: f64,
    /// Relative step of the `dN/dgamma` difference.
    pub gamma_step: f64,
}

impl Default for StaticsGrid {
    fn default() -> Self {
        StaticsGrid {
            gammas: (1..=10).map(|k| k as f64 / 10.0).collect(),
            n_values: (1..=10).map(|k| k as f64).collect(),
            etas: alloc::vec![0.5, 1.0, 2.0],
            alpha: 2.0,
            p_bar: 1.0,
            s_s: 1.0,
            sigma: 0.5,
            info_cost: 2.0,
            delta: 1.0,
            d_s: 3.0,
            d_0s: 4.0,
            d_prime_s: 6.0,
            d_rho_s: 2.0,
            size: 100.0,
            density_markets: alloc::vec![
                DensityMarket { size: 2.0, distance: 1.5 },
                DensityMarket { size: 4.0, distance: 3.0 },
                DensityMarket { size: 8.0, distance: 5.0 },
            ],
            tolerance: 1e-4,
            abs_floor: 1e-5,
            gamma_step: 1e-6,
        }
    }
}

impl StaticsGrid {
    pub fn len(&self) -> usize {
        self.gammas.len() * self.n_values.len() * self.etas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn environment(&self, gamma: f64, eta: f64) -> Result<EntryEnvironment> {
        let params = IndustryParams::new(gamma, self.sigma, self.info_cost, self.delta, 0.0, self.s_s)?;
        let prefs = Preferences::new(self.alpha, eta)?;
        Ok(EntryEnvironment::new(params, prefs, self.p_bar, self.size).with_distances(
            self.d_s,
            self.d_0s,
            self.d_prime_s,
            self.d_rho_s,
        ))
    }

    /// `rho(N) = sum_i e^{-N/L_i + 1} d_i` for the grid's density markets.
    pub fn density_distance(&self, n: f64) -> f64 {
        self.density_markets.iter().map(|m| libm::exp(-n / m.size + 1.0) * m.distance).sum()
    }

    /// `W(N) = sum_i e^{-N/L_i + 1} / L_i * d_i`.
    pub fn density_weight_sum(&self, n: f64) -> f64 {
        self.density_markets.iter().map(|m| libm::exp(-n / m.size + 1.0) / m.size * m.distance).sum()
    }

    fn rel_error(&self, analytic: f64, fd: f64) -> f64 {
        (analytic - fd).abs() / analytic.abs().max(self.abs_floor)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StaticsRow {
    pub quantity: Quantity,
    pub gamma: f64,
    pub n_s: f64,
    pub eta: f64,
    pub analytic: f64,
    pub finite_difference: f64,
    pub rel_error: f64,
    pub regime: Regime,
    pub pass: bool,
}

/// Central difference `(f(x + h) - f(x - h)) / 2h`.
pub fn central_difference<F: FnMut(f64) -> Result<f64>>(mut f: F, x: f64, h: f64) -> Result<f64> {
    Ok((f(x + h)? - f(x - h)?) / (2.0 * h))
}

/// Mixed second difference `d^2 f / dx dy`, Richardson-extrapolated over
/// steps `(hx, hy)` and `(hx/2, hy/2)`.
pub fn mixed_difference<F: FnMut(f64, f64) -> Result<f64>>(
    mut f: F,
    x: f64,
    y: f64,
    hx: f64,
    hy: f64,
) -> Result<f64> {
    let mut quotient = |hx: f64, hy: f64| -> Result<f64> {
        let pp = f(x + hx, y + hy)?;
        let pm = f(x + hx, y - hy)?;
        let mp = f(x - hx, y + hy)?;
        let mm = f(x - hx, y - hy)?;
        Ok((pp - pm - mp + mm) / (4.0 * hx * hy))
    };
    let coarse = quotient(hx, hy)?;
    let fine = quotient(hx / 2.0, hy / 2.0)?;
    Ok((4.0 * fine - coarse) / 3.0)
}

fn equilibrium_n(env: &EntryEnvironment, c_target: f64) -> Result<f64> {
    Ok(solve_equilibrium_n(env, c_target, SolveOptions::default())?.n_s)
}

/// Inverts `rho(N)` for the grid's density markets.
pub fn count_for_density_distance(grid: &StaticsGrid, rho: f64) -> Result<f64> {
    let hi = 200.0 * grid.density_markets.iter().fold(1.0f64, |m, d| m.max(d.size));
    let root = smallest_root(
        |n| grid.density_distance(n) - rho,
        |n| -grid.density_weight_sum(n),
        0.0,
        hi,
        RootOptions::default(),
    )
    .map_err(|e| ModelError::NoEquilibrium { lo: 0.0, hi, f_lo: e.f_lo, f_hi: e.f_hi })?;
    Ok(root.x)
}

pub fn check_dn_dgamma(grid: &StaticsGrid, gamma: f64, n_s: f64, eta: f64) -> Result<StaticsRow> {
    let env = grid.environment(gamma, eta)?;
    let c_target = cutoff_cost(&env, n_s)?;
    let analytic = dn_dgamma(&env, n_s, c_target)?.exact;
    let h = grid.gamma_step * gamma;
    let fd = central_difference(|g| equilibrium_n(&env.with_gamma(g), c_target), gamma, h)?;
    Ok(row(grid, Quantity::DnDgamma, gamma, n_s, eta, analytic, fd))
}

pub fn check_cross_gamma_n(grid: &StaticsGrid, gamma: f64, n_s: f64, eta: f64) -> Result<StaticsRow> {
    let env = grid.environment(gamma, eta)?;
    let analytic = cross_partial_gamma_n(n_s, gamma, &env.prefs, grid.p_bar, grid.s_s).value;
    let fd = mixed_difference(
        |g, n| variable_cost_i4(&env.with_gamma(g), n),
        gamma,
        n_s,
        1e-2 * gamma,
        1e-2 * n_s.max(1.0),
    )?;
    Ok(row(grid, Quantity::CrossGammaN, gamma, n_s, eta, analytic, fd))
}

pub fn check_cross_gamma_rho(grid: &StaticsGrid, gamma: f64, n_s: f64, eta: f64) -> Result<StaticsRow> {
    if grid.density_markets.is_empty() {
        return Err(ModelError::Singular("density weight sum"));
    }
    let env = grid.environment(gamma, eta)?;
    let weight = grid.density_weight_sum(n_s);
    let analytic = cross_partial_gamma_drho(n_s, gamma, &env.prefs, grid.p_bar, grid.s_s, weight)?.value;
    let rho0 = grid.density_distance(n_s);
    let fd = mixed_difference(
        |g, rho| {
            let n = count_for_density_distance(grid, rho)?;
            variable_cost_i4(&env.with_gamma(g), n)
        },
        gamma,
        rho0,
        1e-2 * gamma,
        1e-2 * weight * n_s.max(1.0),
    )?;
    Ok(row(grid, Quantity::CrossGammaRho, gamma, n_s, eta, analytic, fd))
}

fn row(grid: &StaticsGrid, q: Quantity, gamma: f64, n_s: f64, eta: f64, analytic: f64, fd: f64) -> StaticsRow {
    let prefs = Preferences { alpha: grid.alpha, eta };
    let rel_error = grid.rel_error(analytic, fd);
    StaticsRow {
        quantity: q,
        gamma,
        n_s,
        eta,
        analytic,
        finite_difference: fd,
        rel_error,
        regime: Regime::new(n_s, gamma, &prefs, grid.p_bar),
        pass: rel_error <= grid.tolerance,
    }
}

/// Runs all three checks at every grid point, in `(eta, gamma, N)` order.
pub fn run_grid(grid: &StaticsGrid) -> Result<Vec<StaticsRow>> {
    let mut rows = Vec::with_capacity(3 * grid.len());
    for &eta in &grid.etas {
        for &gamma in &grid.gammas {
            for &n in &grid.n_values {
                rows.push(check_dn_dgamma(grid, gamma, n, eta)?);
                rows.push(check_cross_gamma_n(grid, gamma, n, eta)?);
                rows.push(check_cross_gamma_rho(grid, gamma, n, eta)?);
            }
        }
    }
    Ok(rows)
}

/// `dN/dgamma` when the hub distance is pushed far out while the cutoff
/// stays at its value in the grid's base environment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitRow {
    pub gamma: f64,
    pub n_s: f64,
    pub eta: f64,
    pub exact: f64,
    /// `1 / (gamma^3 eta)`.
    pub approximation: f64,
    /// `1 / (gamma^2 eta)`.
    pub distance_limit: f64,
    pub limit_expression: f64,
}

impl LimitRow {
    pub fn positive(&self) -> bool {
        self.exact > 0.0
    }

    pub fn within(&self, reference: f64, rel: f64) -> bool {
        (self.exact - reference).abs() <= rel * reference.abs()
    }
}

pub fn limit_grid(grid: &StaticsGrid, far_d_0s: f64) -> Result<Vec<LimitRow>> {
    let mut rows = Vec::with_capacity(grid.len());
    for &eta in &grid.etas {
        for &gamma in &grid.gammas {
            for &n in &grid.n_values {
                let base = grid.environment(gamma, eta)?;
                let c = cutoff_cost(&base, n)?;
                let far = EntryEnvironment { d_0s: far_d_0s, ..base };
                let d = dn_dgamma(&far, n, c)?;
                rows.push(LimitRow {
                    gamma,
                    n_s: n,
                    eta,
                    exact: d.exact,
                    approximation: d.approximation,
                    distance_limit: d.distance_limit,
                    limit_expression: d.limit_expression,
                });
            }
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn central_difference_of_cubic() {
        let d = central_difference(|x| Ok(x * x * x), 2.0, 1e-4).unwrap();
        assert!((d - 12.0).abs() < 1e-7);
    }

    #[test]
    fn mixed_difference_of_product() {
        // d^2/dxdy of x^2 y^3 = 6 x y^2
        let d = mixed_difference(|x, y| Ok(x * x * y * y * y), 1.5, 2.0, 1e-2, 1e-2).unwrap();
        assert!((d - 6.0 * 1.5 * 4.0).abs() < 1e-8, "{d}");
    }

    #[test]
    fn density_inverse_round_trip() {
        let g = StaticsGrid::default();
        for n in [0.5, 1.0, 4.0, 9.0] {
            let rho = g.density_distance(n);
            let back = count_for_density_distance(&g, rho).unwrap();
            assert!((back - n).abs() < 1e-10, "{back} vs {n}");
        }
    }

    #[test]
    fn spot_checks_pass() {
        let g = StaticsGrid::default();
        for (gamma, n, eta) in [(0.1, 1.0, 0.5), (0.7, 4.0, 1.0), (1.0, 10.0, 2.0), (0.2, 5.0, 1.0)] {
            for r in [
                check_dn_dgamma(&g, gamma, n, eta).unwrap(),
                check_cross_gamma_n(&g, gamma, n, eta).unwrap(),
                check_cross_gamma_rho(&g, gamma, n, eta).unwrap(),
            ] {
                assert!(r.pass, "{r:?}");
            }
        }
    }

    #[test]
    fn tight_tolerance_fails_somewhere() {
        let g = StaticsGrid { tolerance: 1e-12, ..StaticsGrid::default() };
        let rows = run_grid(&g).unwrap();
        assert!(rows.iter().any(|r| !r.pass));
    }
}

