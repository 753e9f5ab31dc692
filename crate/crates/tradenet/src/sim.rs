//! Multi-period simulation of firms expanding their export portfolios.
//!
//! Each period every firm looks at every foreign market it does not serve
//! and enters through its most profitable search channel if that beats the
//! reservation value. All decisions in a period read the state frozen at the
//! end of the previous period, so they can run in parallel; the results are
//! then applied in firm order and the market states (peer counts, average
//! prices, cutoffs, export values) are recomputed.

use rayon::prelude::*;
use tradenet_core::entry::{cutoff_cost, EntryEnvironment};
use tradenet_core::geo::{density_weight, CountryId, WorldGeometry};
use tradenet_core::market::{optimal_price, optimal_quantity, IndustryParams, Preferences};
use tradenet_core::rng::{SeedTree, Stream};
use tradenet_core::search::{entry_decision, Channel, PeerRoute, Prospect, RemoteRoute, Shocks};

use crate::config::{ExitRule, SimConfig};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Firm {
    pub id: u32,
    pub industry: usize,
    pub cost: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Birth,
    /// Market held from birth.
    Initial,
    Entry(Channel),
    Exit,
}

impl EventKind {
    pub fn label(self) -> &'static str {
        match self {
            EventKind::Birth => "birth",
            EventKind::Initial | EventKind::Entry(_) => "entry",
            EventKind::Exit => "exit",
        }
    }

    pub fn channel(self) -> &'static str {
        match self {
            EventKind::Initial => "initial",
            EventKind::Entry(c) => c.name(),
            _ => "",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub period: usize,
    pub firm: u32,
    pub industry: usize,
    pub country: Option<CountryId>,
    pub kind: EventKind,
}

/// One evaluated (firm, market) pair, kept when tracing.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub period: usize,
    pub firm: u32,
    pub country: CountryId,
    pub cutoff: f64,
    pub n_s: f64,
    /// Best open channel and its quote, entered or not.
    pub best: Option<(Channel, f64, f64, f64)>,
    pub entered: bool,
}

/// End-of-period state.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodState {
    /// `firm * countries + country`.
    pub active: Vec<bool>,
    /// Export value `p q`, same layout as `active`.
    pub value: Vec<f64>,
    /// `industry * countries + country`.
    pub n: Vec<u32>,
    pub p_bar: Vec<f64>,
    pub cutoff: Vec<f64>,
    /// Per firm, `ln(1 + total export value)`.
    pub scale: Vec<f64>,
    /// Per country, total exports from home.
    pub flows: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct History {
    pub world: WorldGeometry,
    pub prefs: Preferences,
    pub industries: Vec<IndustryParams>,
    pub firms: Vec<Firm>,
    pub periods: Vec<PeriodState>,
    pub events: Vec<Event>,
    pub trace: Vec<TraceRow>,
}

impl History {
    pub fn n_countries(&self) -> usize {
        self.world.len()
    }

    pub fn is_active(&self, period: usize, firm: usize, country: CountryId) -> bool {
        self.periods[period].active[firm * self.n_countries() + country.index()]
    }

    pub fn n_firms_in(&self, period: usize, industry: usize, country: CountryId) -> u32 {
        self.periods[period].n[industry * self.n_countries() + country.index()]
    }

    /// Markets held by `firm` at the end of `period`.
    pub fn portfolio(&self, period: usize, firm: usize) -> Vec<CountryId> {
        let c = self.n_countries();
        (0..c)
            .filter(|&s| self.periods[period].active[firm * c + s])
            .map(|s| CountryId(s as u32))
            .collect()
    }

    /// Peer counts replayed from the event log, for cross-checking the
    /// stored state.
    pub fn recount(&self, period: usize) -> Vec<u32> {
        let c = self.n_countries();
        let mut active = vec![false; self.firms.len() * c];
        for e in self.events.iter().filter(|e| e.period <= period) {
            if let Some(s) = e.country {
                active[e.firm as usize * c + s.index()] = !matches!(e.kind, EventKind::Exit);
            }
        }
        let mut n = vec![0u32; self.industries.len() * c];
        for (f, firm) in self.firms.iter().enumerate() {
            for s in 0..c {
                if active[f * c + s] {
                    n[firm.industry * c + s] += 1;
                }
            }
        }
        n
    }
}

/// Peer-neighbour geometry of one industry toward every target.
struct IndustryView {
    /// `Some((d_0s, d'_s, d_rho_s))` when the industry serves a market other
    /// than the target.
    routes: Vec<Option<(f64, f64, f64)>>,
}

impl IndustryView {
    fn build(world: &WorldGeometry, n: &[u32]) -> Result<Self> {
        let c = world.len();
        let home = world.home();
        let markets: Vec<usize> = (0..c).filter(|&i| n[i] > 0 && i != home.index()).collect();
        let mut routes = Vec::with_capacity(c);
        for s in 0..c {
            let target = CountryId(s as u32);
            let mut d0 = f64::INFINITY;
            let (mut dp, mut drho, mut any) = (0.0, 0.0, false);
            for &i in markets.iter().filter(|&&i| i != s) {
                let id = CountryId(i as u32);
                let d = world.scaled(id, target)?;
                d0 = d0.min(world.scaled(home, id)?);
                dp += d;
                drho += density_weight(f64::from(n[i]), world.gdp(id)?)? * d;
                any = true;
            }
            routes.push(any.then_some((d0, dp, drho)));
        }
        Ok(IndustryView { routes })
    }
}

pub struct Simulator<'a> {
    config: &'a SimConfig,
    world: WorldGeometry,
    prefs: Preferences,
    industries: Vec<IndustryParams>,
    firms: Vec<Firm>,
    tree: SeedTree,
    trace: bool,
}

impl<'a> Simulator<'a> {
    pub fn new(config: &'a SimConfig, world: WorldGeometry) -> Result<Self> {
        let prefs = Preferences::new(config.preferences.alpha, config.preferences.eta)?;
        let ind = &config.industries;
        let industries = ind
            .gammas
            .iter()
            .map(|&g| IndustryParams::new(g, ind.sigma, ind.info_cost, ind.delta, ind.f_e, ind.s_s))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        let tree = SeedTree::new(config.seed);
        let per = config.firms.per_industry;
        let firms = (0..industries.len() * per)
            .map(|f| {
                // (0, cost_max]: 1 - u never hits zero
                let u = tree.uniform(Stream::FirmCost, f as u64, 0, 0);
                Firm { id: f as u32, industry: f / per, cost: config.firms.cost_max * (1.0 - u) }
            })
            .collect();
        Ok(Simulator { config, world, prefs, industries, firms, tree, trace: false })
    }

    pub fn with_trace(mut self, on: bool) -> Self {
        self.trace = on;
        self
    }

    pub fn firms(&self) -> &[Firm] {
        &self.firms
    }

    fn n_countries(&self) -> usize {
        self.world.len()
    }

    fn cutoff_env(&self, k: usize, s: CountryId, p_bar: f64, view: &IndustryView) -> Result<EntryEnvironment> {
        let home = self.world.home();
        let (d0, dp, drho) = view.routes[s.index()].unwrap_or((0.0, 0.0, 0.0));
        Ok(EntryEnvironment::new(self.industries[k], self.prefs, p_bar, self.world.gdp(s)?)
            .with_distances(self.world.scaled(home, s)?, d0, dp, drho))
    }

    /// Recomputes every market quantity from the portfolios in `state`,
    /// pricing off `prev_cutoff`.
    fn settle(&self, state: &mut PeriodState, prev_cutoff: &[f64], prev_p_bar: &[f64], period: usize) -> Result<()> {
        let c = self.n_countries();
        let n_ind = self.industries.len();
        state.n.iter_mut().for_each(|x| *x = 0);
        let mut price_sum = vec![0.0; n_ind * c];
        let mut price_cnt = vec![0u32; n_ind * c];
        for (f, firm) in self.firms.iter().enumerate() {
            for s in 0..c {
                if state.active[f * c + s] {
                    let m = firm.industry * c + s;
                    state.n[m] += 1;
                    if let Ok(p) = optimal_price(firm.cost, prev_cutoff[m]) {
                        price_sum[m] += p;
                        price_cnt[m] += 1;
                    }
                }
            }
        }
        for k in 0..n_ind {
            let view = IndustryView::build(&self.world, &state.n[k * c..(k + 1) * c])?;
            for s in 0..c {
                let m = k * c + s;
                state.p_bar[m] = if price_cnt[m] > 0 { price_sum[m] / f64::from(price_cnt[m]) } else { prev_p_bar[m] };
                let env = self.cutoff_env(k, CountryId(s as u32), state.p_bar[m], &view)?;
                let cut = cutoff_cost(&env, f64::from(state.n[m]))?;
                if !cut.is_finite() {
                    return Err(Error::Numeric(format!(
                        "cutoff for industry {k}, country {} is {cut} in period {period}",
                        self.world.countries()[s].name
                    )));
                }
                state.cutoff[m] = cut;
            }
        }
        state.flows.iter_mut().for_each(|x| *x = 0.0);
        for (f, firm) in self.firms.iter().enumerate() {
            let mut total = 0.0;
            for s in 0..c {
                let i = f * c + s;
                state.value[i] = 0.0;
                if !state.active[i] {
                    continue;
                }
                let m = firm.industry * c + s;
                let cut = state.cutoff[m];
                if firm.cost < cut {
                    let gamma = self.industries[firm.industry].gamma;
                    let size = self.world.gdp(CountryId(s as u32))?;
                    let v = optimal_price(firm.cost, cut)? * optimal_quantity(firm.cost, cut, size, gamma)?;
                    state.value[i] = v;
                    total += v;
                    state.flows[s] += v;
                }
            }
            state.scale[f] = total.ln_1p();
        }
        Ok(())
    }

    fn empty_state(&self) -> PeriodState {
        let c = self.n_countries();
        let nf = self.firms.len();
        let nm = self.industries.len() * c;
        PeriodState {
            active: vec![false; nf * c],
            value: vec![0.0; nf * c],
            n: vec![0; nm],
            p_bar: vec![self.prefs.alpha / 2.0; nm],
            cutoff: vec![0.0; nm],
            scale: vec![0.0; nf],
            flows: vec![0.0; c],
        }
    }

    /// Period 0: births, configured incumbents, and each firm's best
    /// `initial_markets` destinations by local-search profit at zero peers.
    fn initial(&self, events: &mut Vec<Event>) -> Result<PeriodState> {
        let c = self.n_countries();
        let home = self.world.home();
        let mut pre = self.empty_state();
        let pre_p_bar = pre.p_bar.clone();
        let pre_cutoff = vec![0.0; pre.cutoff.len()];
        self.settle(&mut pre, &pre_cutoff, &pre_p_bar, 0)?;

        let mut state = self.empty_state();
        let per = self.config.firms.per_industry;
        for inc in &self.config.firms.incumbents {
            let s = self
                .world
                .find(&inc.country)
                .ok_or_else(|| Error::Usage(format!("incumbent country `{}` not in the world", inc.country)))?;
            if s == home {
                return Err(Error::Usage(format!("incumbent country `{}` is the home country", inc.country)));
            }
            state.active[(inc.industry * per + inc.firm) * c + s.index()] = true;
        }
        let k = self.config.firms.initial_markets.min(c - 1);
        let ind = &self.config.industries;
        for (f, firm) in self.firms.iter().enumerate() {
            events.push(Event { period: 0, firm: firm.id, industry: firm.industry, country: None, kind: EventKind::Birth });
            let mut ranked = Vec::with_capacity(c);
            for s in self.world.foreign() {
                let m = firm.industry * c + s.index();
                let cut = pre.cutoff[m];
                let gap = (cut - firm.cost).max(0.0);
                let gross = self.world.gdp(s)? * self.industries[firm.industry].gamma / 4.0 * gap * gap;
                let shock = self.config.shocks.local_sd * self.tree.normal(Stream::InitialShock, firm.id as u64, s.0 as u64, 0);
                let net = gross - ind.info_cost * self.world.scaled(home, s)? + shock;
                ranked.push((net, s));
            }
            ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            for &(_, s) in ranked.iter().take(k) {
                state.active[f * c + s.index()] = true;
            }
            for s in self.world.foreign() {
                if state.active[f * c + s.index()] {
                    events.push(Event {
                        period: 0,
                        firm: firm.id,
                        industry: firm.industry,
                        country: Some(s),
                        kind: EventKind::Initial,
                    });
                }
            }
        }
        self.settle(&mut state, &pre.cutoff, &pre.p_bar, 0)?;
        Ok(state)
    }

    /// Decisions of one firm against the frozen state.
    fn decide(
        &self,
        f: usize,
        period: usize,
        prev: &PeriodState,
        views: &[IndustryView],
    ) -> Result<(Vec<(CountryId, EventKind)>, Vec<TraceRow>)> {
        let c = self.n_countries();
        let home = self.world.home();
        let firm = &self.firms[f];
        let k = firm.industry;
        let params = &self.industries[k];
        let held: Vec<CountryId> = self.world.foreign().filter(|s| prev.active[f * c + s.index()]).collect();
        let mut out = Vec::new();
        let mut trace = Vec::new();

        if self.config.entry.exit_rule == ExitRule::Viability {
            for &s in &held {
                if firm.cost > prev.cutoff[k * c + s.index()] {
                    out.push((s, EventKind::Exit));
                }
            }
        }

        // the firm's own hub: its market nearest home
        let mut hub: Option<(CountryId, f64)> = None;
        for &m in &held {
            let d = self.world.scaled(home, m)?;
            if hub.is_none_or(|(_, best)| d < best) {
                hub = Some((m, d));
            }
        }

        for s in self.world.foreign() {
            if prev.active[f * c + s.index()] {
                continue;
            }
            let m = k * c + s.index();
            let remote = match hub {
                Some((h, d0)) => Some(RemoteRoute { d_prime_s: self.world.scaled(h, s)?, d_0s: d0 }),
                None => None,
            };
            let peer = views[k].routes[s.index()].map(|(d_0s, d_prime_s, d_rho_s)| PeerRoute { d_0s, d_prime_s, d_rho_s });
            let prospect = Prospect {
                delta_l: self.world.gdp(s)?,
                gamma: params.gamma,
                cutoff: prev.cutoff[m],
                cost: firm.cost,
                info_cost: params.info_cost,
                delta: params.delta,
                d_s: self.world.scaled(home, s)?,
                n_s: f64::from(prev.n[m]),
                remote,
                peer,
            };
            let addr = (period as u64, firm.id as u64, s.0 as u64);
            let shocks = Shocks {
                local: self.config.shocks.local_sd * self.tree.normal(Stream::LocalShock, addr.0, addr.1, addr.2),
                remote: self.config.shocks.remote_sd * self.tree.normal(Stream::RemoteShock, addr.0, addr.1, addr.2),
            };
            let decision = entry_decision(firm.id, s, &prospect, &shocks, self.config.entry.reservation);
            if let Some(d) = &decision {
                out.push((s, EventKind::Entry(d.channel)));
            }
            if self.trace {
                let best = Channel::ALL
                    .into_iter()
                    .filter_map(|ch| prospect.quote(firm.id, s, ch, &shocks))
                    .fold(None::<(Channel, f64, f64, f64)>, |acc, q| match acc {
                        Some(a) if a.3 >= q.net_profit => Some(a),
                        _ => Some((q.channel, q.gross_profit, q.entry_cost, q.net_profit)),
                    });
                trace.push(TraceRow {
                    period,
                    firm: firm.id,
                    country: s,
                    cutoff: prospect.cutoff,
                    n_s: prospect.n_s,
                    best,
                    entered: decision.is_some(),
                });
            }
        }
        out.sort_by_key(|(s, _)| *s);
        Ok((out, trace))
    }

    pub fn run(&self) -> Result<History> {
        let c = self.n_countries();
        let mut events = Vec::new();
        let mut trace = Vec::new();
        let mut periods = vec![self.initial(&mut events)?];
        for t in 1..self.config.periods {
            let prev = periods.last().expect("period 0 exists");
            let views = (0..self.industries.len())
                .map(|k| IndustryView::build(&self.world, &prev.n[k * c..(k + 1) * c]))
                .collect::<Result<Vec<_>>>()?;
            let decisions = (0..self.firms.len())
                .into_par_iter()
                .map(|f| self.decide(f, t, prev, &views))
                .collect::<Result<Vec<_>>>()?;
            let mut next = prev.clone();
            for (f, (moves, rows)) in decisions.into_iter().enumerate() {
                let firm = &self.firms[f];
                for (s, kind) in moves {
                    next.active[f * c + s.index()] = !matches!(kind, EventKind::Exit);
                    events.push(Event { period: t, firm: firm.id, industry: firm.industry, country: Some(s), kind });
                }
                trace.extend(rows);
            }
            self.settle(&mut next, &prev.cutoff, &prev.p_bar, t)?;
            periods.push(next);
        }
        Ok(History {
            world: self.world.clone(),
            prefs: self.prefs,
            industries: self.industries.clone(),
            firms: self.firms.clone(),
            periods,
            events,
            trace,
        })
    }
}

/// Runs a full simulation on `threads` workers (all cores when `None`).
pub fn run_simulation(config: &SimConfig, world: WorldGeometry, threads: Option<usize>, trace: bool) -> Result<History> {
    let sim = Simulator::new(config, world)?.with_trace(trace);
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n.max(1));
    }
    let pool = builder.build().map_err(|e| Error::Usage(format!("thread pool: {e}")))?;
    pool.install(|| sim.run())
}
