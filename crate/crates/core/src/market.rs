//! Linear demand with product heterogeneity, firm pricing and profit.

use crate::{ModelError, Result};

/// Consumer taste parameters shared by all industries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Preferences {
    /// Demand intercept.
    pub alpha: f64,
    /// Saturation of total quantity.
    pub eta: f64,
}

impl Preferences {
    pub fn new(alpha: f64, eta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(ModelError::Domain { what: "alpha", value: alpha });
        }
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(ModelError::Domain { what: "eta", value: eta });
        }
        Ok(Preferences { alpha, eta })
    }

    /// Whether the demand intercept exceeds the average price, the regime in
    /// which the signs of the comparative statics are determined.
    pub fn above_price(&self, p_bar: f64) -> bool {
        self.alpha > p_bar
    }
}

/// Per-industry technology and entry-cost parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndustryParams {
    /// Product heterogeneity.
    pub gamma: f64,
    /// Share of entrants that follow peers.
    pub sigma: f64,
    /// Unit information cost, strictly above one.
    pub info_cost: f64,
    /// Sunk multiple of the entry payment.
    pub delta: f64,
    /// Fixed entry cost.
    pub f_e: f64,
    /// Foreign cost discount ratio in `(0, 1]`.
    pub s_s: f64,
}

impl IndustryParams {
    pub fn new(gamma: f64, sigma: f64, info_cost: f64, delta: f64, f_e: f64, s_s: f64) -> Result<Self> {
        let p = IndustryParams { gamma, sigma, info_cost, delta, f_e, s_s };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(ModelError::Domain { what: "gamma", value: self.gamma });
        }
        if !(0.0..=1.0).contains(&self.sigma) {
            return Err(ModelError::Domain { what: "sigma", value: self.sigma });
        }
        if !(self.info_cost > 1.0 && self.info_cost.is_finite()) {
            return Err(ModelError::Domain { what: "info_cost", value: self.info_cost });
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(ModelError::Domain { what: "delta", value: self.delta });
        }
        if !(self.f_e >= 0.0 && self.f_e.is_finite()) {
            return Err(ModelError::Domain { what: "f_e", value: self.f_e });
        }
        if !(self.s_s > 0.0 && self.s_s <= 1.0) {
            return Err(ModelError::Domain { what: "s_s", value: self.s_s });
        }
        Ok(())
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }
}

/// State of one industry in one destination market.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarketIndustryState {
    /// Number of exporters serving the market; real-valued when solving.
    pub n_firms: f64,
    pub avg_price: f64,
    pub cutoff: f64,
    /// `n_firms / N` for the industry total `N`.
    pub x_share: f64,
    /// `n_firms / L`.
    pub density: f64,
}

impl MarketIndustryState {
    pub fn new(n_firms: f64, avg_price: f64, cutoff: f64) -> Self {
        MarketIndustryState { n_firms, avg_price, cutoff, x_share: 0.0, density: 0.0 }
    }

    /// Fills the derived share and density fields.
    pub fn with_totals(mut self, industry_total: f64, size: f64) -> Self {
        self.x_share = if industry_total > 0.0 { self.n_firms / industry_total } else { 0.0 };
        self.density = if size > 0.0 { self.n_firms / size } else { 0.0 };
        self
    }
}

/// Quantity demanded of a variety priced at `price`.
///
/// Negative values are returned as is.
pub fn demand_quantity(
    price: f64,
    state: &MarketIndustryState,
    prefs: &Preferences,
    gamma: f64,
    size: f64,
) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(ModelError::Domain { what: "gamma", value: gamma });
    }
    let n = state.n_firms;
    let denom = prefs.eta * n + 1.0 / gamma;
    if !(denom > 0.0) {
        return Err(ModelError::Domain { what: "eta * N + 1/gamma", value: denom });
    }
    let common = (prefs.alpha * size + prefs.eta * n * state.avg_price * size * gamma) / denom;
    Ok(common - size * gamma * price)
}

/// Profit-maximising price under the supply rule `q = L gamma (p - c)`.
pub fn optimal_price(cost: f64, cutoff: f64) -> Result<f64> {
    if cost > cutoff {
        return Err(ModelError::NotViable { cost, cutoff });
    }
    Ok((cutoff + cost) / 2.0)
}

/// Quantity supplied at the optimal price.
pub fn optimal_quantity(cost: f64, cutoff: f64, size: f64, gamma: f64) -> Result<f64> {
    let p = optimal_price(cost, cutoff)?;
    Ok(size * gamma * (p - cost))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Profit {
    pub value: f64,
    /// False when the cost is above the cutoff and the firm earns nothing.
    pub viable: bool,
}

/// Operating profit `(L gamma / 4)(c_D - c)^2`; zero and flagged when the firm
/// is above the cutoff.
pub fn firm_profit(cost: f64, cutoff: f64, size: f64, gamma: f64) -> Result<Profit> {
    if !(gamma > 0.0) {
        return Err(ModelError::Domain { what: "gamma", value: gamma });
    }
    if !(size >= 0.0) {
        return Err(ModelError::Domain { what: "market size", value: size });
    }
    if cost > cutoff {
        return Ok(Profit { value: 0.0, viable: false });
    }
    let gap = cutoff - cost;
    Ok(Profit { value: size * gamma / 4.0 * gap * gap, viable: true })
}

/// Export profit written through the quantity added in the new market,
/// `(dq / 2)(c_D - c)`.
pub fn incremental_export_profit(delta_q: f64, cost: f64, cutoff: f64) -> Result<f64> {
    if !(delta_q >= 0.0) {
        return Err(ModelError::Domain { what: "delta_q", value: delta_q });
    }
    Ok(delta_q / 2.0 * (cutoff - cost))
}
