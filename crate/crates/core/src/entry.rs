//! Entry costs, the zero-profit cutoff and the equilibrium number of
//! exporters in a market, with the comparative statics of that equilibrium.
//!
//! The cutoff is `c_Ds = I3 + I4` where
//!
//! ```text
//! I3 = sigma * i * e^{-N+1} * d_s + (1 - sigma) * (d_0s + d'_s - d_s^rho)
//! I4 = s_s / (eta N + 1/gamma) * (alpha/gamma + eta N p_bar)
//! ```
//!
//! Multiplying `c_Ds - I3 - I4 = 0` through by `eta N + 1/gamma` gives the
//! residual `F(N, gamma)` whose root is the equilibrium count and whose
//! implicit derivative gives `dN/dgamma`. The cutoff target is an input: the
//! simulator supplies last period's cutoff.

use crate::market::{IndustryParams, Preferences};
use crate::roots::{smallest_root, RootOptions};
use crate::{ModelError, Result};

/// Everything the cutoff of one (industry, market) pair depends on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntryEnvironment {
    /// Direct distance home -> target (scaled).
    pub d_s: f64,
    /// Distance home -> hub market (scaled).
    pub d_0s: f64,
    /// Sum of distances from the target to the industry's markets.
    pub d_prime_s: f64,
    /// Density-weighted version of `d_prime_s`.
    pub d_rho_s: f64,
    pub params: IndustryParams,
    pub prefs: Preferences,
    pub p_bar: f64,
    /// Market size `L`.
    pub size: f64,
}

impl EntryEnvironment {
    pub fn new(params: IndustryParams, prefs: Preferences, p_bar: f64, size: f64) -> Self {
        EntryEnvironment { d_s: 0.0, d_0s: 0.0, d_prime_s: 0.0, d_rho_s: 0.0, params, prefs, p_bar, size }
    }

    pub fn with_distances(mut self, d_s: f64, d_0s: f64, d_prime_s: f64, d_rho_s: f64) -> Self {
        self.d_s = d_s;
        self.d_0s = d_0s;
        self.d_prime_s = d_prime_s;
        self.d_rho_s = d_rho_s;
        self
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.params.gamma = gamma;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        for (what, v) in [
            ("d_s", self.d_s),
            ("d_0s", self.d_0s),
            ("d_prime_s", self.d_prime_s),
            ("d_rho_s", self.d_rho_s),
        ] {
            if !v.is_finite() {
                return Err(ModelError::Domain { what, value: v });
            }
        }
        if !(self.d_s >= 0.0) {
            return Err(ModelError::Domain { what: "d_s", value: self.d_s });
        }
        if !(self.d_0s >= 0.0) {
            return Err(ModelError::Domain { what: "d_0s", value: self.d_0s });
        }
        if !(self.p_bar > 0.0) {
            return Err(ModelError::Domain { what: "p_bar", value: self.p_bar });
        }
        if !(self.size > 0.0) {
            return Err(ModelError::Domain { what: "market size", value: self.size });
        }
        Ok(())
    }

    /// `d_0s + d'_s - d_s^rho`, the peer-neighbour route length.
    #[inline]
    pub fn neighbour_route(&self) -> f64 {
        self.d_0s + self.d_prime_s - self.d_rho_s
    }
}

/// `e^{-N + 1}`: one at a single peer, decaying in the number of peers.
pub fn follow_attenuation(n_s: f64) -> Result<f64> {
    if !(n_s >= 0.0) {
        return Err(ModelError::Domain { what: "N_s", value: n_s });
    }
    Ok(libm::exp(-n_s + 1.0))
}

/// `N e^{-N + 1}`, the product whose smallness at typical peer counts keeps
/// the attenuation terms negligible.
pub fn attenuation_product(n_s: f64) -> Result<f64> {
    Ok(n_s * follow_attenuation(n_s)?)
}

/// Variable (non-sunk) part of the entry cost, `I3`.
pub fn variable_entry_cost(env: &EntryEnvironment, n_s: f64) -> Result<f64> {
    let p = &env.params;
    let follow = p.info_cost * follow_attenuation(n_s)? * env.d_s;
    Ok(p.sigma * follow + (1.0 - p.sigma) * env.neighbour_route())
}

/// Price-and-product part of the cutoff, `I4`.
pub fn variable_cost_i4(env: &EntryEnvironment, n_s: f64) -> Result<f64> {
    let gamma = env.params.gamma;
    if !(gamma > 0.0) {
        return Err(ModelError::Domain { what: "gamma", value: gamma });
    }
    let eta = env.prefs.eta;
    let denom = eta * n_s + 1.0 / gamma;
    if !(denom > 0.0) {
        return Err(ModelError::Domain { what: "eta * N + 1/gamma", value: denom });
    }
    Ok(env.params.s_s / denom * (env.prefs.alpha / gamma + eta * n_s * env.p_bar))
}

/// Zero-profit cutoff `c_Ds = I3 + I4`.
pub fn cutoff_cost(env: &EntryEnvironment, n_s: f64) -> Result<f64> {
    Ok(variable_entry_cost(env, n_s)? + variable_cost_i4(env, n_s)?)
}

/// Free-entry residual `F(N) = (eta N + 1/gamma) (I3 + I4 - c)`, expanded.
pub fn equilibrium_residual(env: &EntryEnvironment, n_s: f64, c_target: f64) -> f64 {
    let p = &env.params;
    let (alpha, eta) = (env.prefs.alpha, env.prefs.eta);
    let g = p.gamma;
    let k = eta * n_s + 1.0 / g;
    let follow = p.sigma * p.info_cost * libm::exp(-n_s + 1.0) * env.d_s;
    (alpha * p.s_s / g + eta * p.s_s * n_s * env.p_bar) - k * c_target
        + follow * k
        + (1.0 - p.sigma) * env.neighbour_route() * k
}

/// `dF/dN`.
pub fn equilibrium_residual_dn(env: &EntryEnvironment, n_s: f64, c_target: f64) -> f64 {
    let p = &env.params;
    let eta = env.prefs.eta;
    let follow = p.sigma * p.info_cost * libm::exp(-n_s + 1.0) * env.d_s;
    eta * p.s_s * env.p_bar - eta * c_target - follow * (eta * n_s + 1.0 / p.gamma)
        + follow * eta
        + (1.0 - p.sigma) * eta * env.neighbour_route()
}

/// `dF/dgamma`.
pub fn equilibrium_residual_dgamma(env: &EntryEnvironment, n_s: f64, c_target: f64) -> f64 {
    let p = &env.params;
    let g2 = p.gamma * p.gamma;
    let follow = p.sigma * p.info_cost * libm::exp(-n_s + 1.0) * env.d_s;
    (-env.prefs.alpha * p.s_s + c_target - follow - (1.0 - p.sigma) * env.neighbour_route()) / g2
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Upper end of the bracket; defaults to ten times the market size.
    pub n_max: Option<f64>,
    pub root: RootOptions,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { n_max: None, root: RootOptions::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Equilibrium {
    pub n_s: f64,
    pub residual: f64,
    /// Magnitude of the largest term of the residual, for relative checks.
    pub scale: f64,
    /// Several sign changes were found; `n_s` is the smallest root.
    pub multiple_roots: bool,
}

/// Solves `c_target = cutoff_cost(env, N)` for the equilibrium count `N`.
pub fn solve_equilibrium_n(env: &EntryEnvironment, c_target: f64, opts: SolveOptions) -> Result<Equilibrium> {
    env.validate()?;
    if !c_target.is_finite() {
        return Err(ModelError::Domain { what: "c_target", value: c_target });
    }
    let hi = opts.n_max.unwrap_or(10.0 * env.size);
    if !(hi > 0.0 && hi.is_finite()) {
        return Err(ModelError::Domain { what: "n_max", value: hi });
    }
    let f = |n: f64| equilibrium_residual(env, n, c_target);
    let df = |n: f64| equilibrium_residual_dn(env, n, c_target);
    match smallest_root(f, df, 0.0, hi, opts.root) {
        Ok(root) => Ok(Equilibrium {
            n_s: root.x,
            residual: root.residual,
            scale: residual_scale(env, root.x, c_target),
            multiple_roots: root.multiple,
        }),
        Err(e) => Err(ModelError::NoEquilibrium { lo: 0.0, hi, f_lo: e.f_lo, f_hi: e.f_hi }),
    }
}

fn residual_scale(env: &EntryEnvironment, n_s: f64, c_target: f64) -> f64 {
    let p = &env.params;
    let k = env.prefs.eta * n_s + 1.0 / p.gamma;
    let follow = p.sigma * p.info_cost * libm::exp(-n_s + 1.0) * env.d_s;
    let terms = [
        env.prefs.alpha * p.s_s / p.gamma,
        env.prefs.eta * p.s_s * n_s * env.p_bar,
        k * c_target,
        follow * k,
        (1.0 - p.sigma) * env.neighbour_route() * k,
    ];
    terms.iter().fold(0.0f64, |m, t| m.max(t.abs()))
}

/// Sign regime of the comparative statics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Regime {
    /// `eta * N * gamma < 1`.
    pub low_saturation: bool,
    /// `alpha > p_bar`.
    pub alpha_above_price: bool,
}

impl Regime {
    pub fn new(n_s: f64, gamma: f64, prefs: &Preferences, p_bar: f64) -> Self {
        Regime { low_saturation: prefs.eta * n_s * gamma < 1.0, alpha_above_price: prefs.above_price(p_bar) }
    }

    /// The regime in which the cross partial in `N` is negative and the one
    /// in `d_rho` positive.
    pub fn signed(&self) -> bool {
        self.low_saturation && self.alpha_above_price
    }
}

/// `dN/dgamma` from the implicit-function theorem, with its large-distance
/// approximations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DnDgamma {
    /// `-F_gamma / F_N`, holding the cutoff fixed.
    pub exact: f64,
    /// The closed-form large-`d_0s` expression with the distances divided out.
    pub limit_expression: f64,
    /// `1 / (gamma^3 eta)`.
    pub approximation: f64,
    /// `|approximation - exact| <= 0.1 |exact|`.
    pub approximation_within_10pct: bool,
    /// Limit of `exact` as `d_0s -> infinity` at a fixed cutoff when
    /// `sigma < 1`: `1 / (gamma^2 eta)`.
    pub distance_limit: f64,
}

pub fn dn_dgamma(env: &EntryEnvironment, n_s: f64, c_ds: f64) -> Result<DnDgamma> {
    env.validate()?;
    let den = equilibrium_residual_dn(env, n_s, c_ds);
    if den.abs() <= 1e-12 {
        return Err(ModelError::Singular("dF/dN in dN/dgamma"));
    }
    let exact = -equilibrium_residual_dgamma(env, n_s, c_ds) / den;

    let p = &env.params;
    let (g, eta) = (p.gamma, env.prefs.eta);
    let att = p.sigma * p.info_cost * libm::exp(-n_s + 1.0);
    let lim_num = att / (g * g) + (1.0 - p.sigma) / (g * g);
    let lim_den = -att * (eta * n_s - eta + 1.0 / g) + (1.0 - p.sigma) * g * eta;
    let approximation = 1.0 / (g * g * g * eta);
    Ok(DnDgamma {
        exact,
        limit_expression: lim_num / lim_den,
        approximation,
        approximation_within_10pct: (approximation - exact).abs() <= 0.1 * exact.abs(),
        distance_limit: 1.0 / (g * g * eta),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossPartial {
    /// Simplified form.
    pub value: f64,
    /// Same quantity evaluated through the fourth-power expression.
    pub quartic_form: f64,
    pub regime: Regime,
}

/// `d^2 c_Ds / (dgamma dN_s)`; only the `I4` term depends on both.
///
/// Simplified: `s_s eta (p_bar - alpha) (1 - u) / (1 + u)^3` with
/// `u = eta N gamma`. Quartic: `-s_s (alpha eta - eta p_bar)(1 - u^2) / (1 + u)^4`.
pub fn cross_partial_gamma_n(n_s: f64, gamma: f64, prefs: &Preferences, p_bar: f64, s_s: f64) -> CrossPartial {
    let eta = prefs.eta;
    let u = eta * n_s * gamma;
    let one_u = 1.0 + u;
    let value = s_s * (eta * p_bar - eta * prefs.alpha) * (1.0 - u) / (one_u * one_u * one_u);
    let q = one_u * one_u * one_u * one_u;
    let quartic_form =
        -s_s / q * (prefs.alpha * eta - eta * p_bar) * (1.0 - eta * eta * n_s * n_s * gamma * gamma);
    CrossPartial { value, quartic_form, regime: Regime::new(n_s, gamma, prefs, p_bar) }
}

/// `d^2 c_Ds / (dgamma d d_rho)` through `dN/dd_rho = -1 / weight_sum`, where
/// `weight_sum = sum_i e^{-N_i/L_i+1} / L_i * d'_is`.
pub fn cross_partial_gamma_drho(
    n_s: f64,
    gamma: f64,
    prefs: &Preferences,
    p_bar: f64,
    s_s: f64,
    weight_sum: f64,
) -> Result<CrossPartial> {
    if weight_sum == 0.0 || !weight_sum.is_finite() {
        return Err(ModelError::Singular("density weight sum"));
    }
    let base = cross_partial_gamma_n(n_s, gamma, prefs, p_bar, s_s);
    Ok(CrossPartial {
        value: -base.value / weight_sum,
        quartic_form: -base.quartic_form / weight_sum,
        regime: base.regime,
    })
}
