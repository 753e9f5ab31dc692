//! Descriptive tables from an event log: the markets-per-firm distribution,
//! per-industry reach, and quantiles of markets per firm and of firms per
//! (industry, market).

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use crate::error::{Error, Result};
use crate::format::fmt_g;
use crate::history::LoggedEvent;
use crate::sim::History;

/// Replayed portfolios: `held[t][firm]` is the set of markets at the end of `t`.
#[derive(Debug, Clone)]
pub struct Replay {
    pub industry_of: BTreeMap<u32, usize>,
    pub held: Vec<BTreeMap<u32, BTreeSet<String>>>,
    /// Home distance of every country seen in the log.
    pub dist_km: BTreeMap<String, f64>,
}

/// Replays `periods` periods; `None` takes the last period seen in the log.
pub fn replay(events: &[LoggedEvent], periods: Option<usize>) -> Result<Replay> {
    let seen = events.iter().map(|e| e.period + 1).max().unwrap_or(0);
    let periods = periods.unwrap_or(seen);
    if seen > periods {
        return Err(Error::Usage(format!("log has events in period {} but only {periods} periods", seen - 1)));
    }
    let mut industry_of = BTreeMap::new();
    let mut dist_km = BTreeMap::new();
    let mut current: BTreeMap<u32, BTreeSet<String>> = BTreeMap::new();
    let mut held = Vec::with_capacity(periods);
    let mut sorted: Vec<&LoggedEvent> = events.iter().collect();
    sorted.sort_by_key(|e| e.period);
    let mut idx = 0;
    for t in 0..periods {
        while idx < sorted.len() && sorted[idx].period == t {
            let e = sorted[idx];
            industry_of.insert(e.firm, e.industry);
            let set = current.entry(e.firm).or_default();
            if let Some(c) = &e.country {
                if let Some(d) = e.dist_home_km {
                    dist_km.insert(c.clone(), d);
                }
                match e.event.as_str() {
                    "entry" => {
                        set.insert(c.clone());
                    }
                    "exit" => {
                        set.remove(c);
                    }
                    _ => {}
                }
            }
            idx += 1;
        }
        held.push(current.clone());
    }
    Ok(Replay { industry_of, held, dist_km })
}

/// Log entries of an in-memory history, as `history.csv` would hold them.
pub fn logged_events(history: &History) -> Result<Vec<LoggedEvent>> {
    let world = &history.world;
    history
        .events
        .iter()
        .map(|e| {
            let (country, dist) = match e.country {
                Some(s) => (Some(world.country(s)?.name.clone()), Some(world.km(world.home(), s)?)),
                None => (None, None),
            };
            Ok(LoggedEvent {
                period: e.period,
                firm: e.firm,
                industry: e.industry,
                country,
                event: e.kind.label().to_string(),
                channel: e.kind.channel().to_string(),
                dist_home_km: dist,
            })
        })
        .collect()
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        1 => sorted[0],
        n => {
            let h = (n - 1) as f64 * q;
            let lo = h.floor() as usize;
            let hi = (lo + 1).min(n - 1);
            sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Quantiles {
    pub p20: f64,
    pub median: f64,
    pub p95: f64,
    pub mean: f64,
}

impl Quantiles {
    pub fn of(mut data: Vec<f64>) -> Self {
        data.sort_by(f64::total_cmp);
        let mean = if data.is_empty() { f64::NAN } else { data.iter().sum::<f64>() / data.len() as f64 };
        Quantiles { p20: quantile(&data, 0.2), median: quantile(&data, 0.5), p95: quantile(&data, 0.95), mean }
    }

    /// Mean above median: a long right tail.
    pub fn right_skewed(&self) -> bool {
        self.mean > self.median
    }

    /// Upper spread wider than the lower one.
    pub fn upper_gap_wider(&self) -> bool {
        self.p95 - self.median > self.median - self.p20
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndustryRow {
    pub industry: usize,
    pub firms: usize,
    /// Firms holding at least one market.
    pub exporters: usize,
    pub mean_distance_km: f64,
    pub mean_markets: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StylizedFacts {
    /// `(markets, firms)` at the final period.
    pub histogram: Vec<(usize, usize)>,
    pub industries: Vec<IndustryRow>,
    /// Per period: markets per firm and firms per (industry, market).
    pub markets_per_firm: Vec<Quantiles>,
    pub firms_per_market: Vec<Quantiles>,
}

impl StylizedFacts {
    pub fn final_markets(&self) -> Option<&Quantiles> {
        self.markets_per_firm.last()
    }
}

/// Summaries over `destinations`, the foreign countries that exist (markets
/// nobody entered still count as zero-firm cells).
pub fn stylized_facts(events: &[LoggedEvent], destinations: &[String], periods: Option<usize>) -> Result<StylizedFacts> {
    let r = replay(events, periods)?;
    let Some(last) = r.held.last() else {
        return Err(Error::Usage("empty history".into()));
    };
    let n_ind = r.industry_of.values().map(|&k| k + 1).max().unwrap_or(0);

    let mut hist: BTreeMap<usize, usize> = BTreeMap::new();
    for firm in r.industry_of.keys() {
        *hist.entry(last.get(firm).map_or(0, BTreeSet::len)).or_default() += 1;
    }

    let mut industries = Vec::with_capacity(n_ind);
    for k in 0..n_ind {
        let members: Vec<u32> = r.industry_of.iter().filter(|(_, &i)| i == k).map(|(&f, _)| f).collect();
        let (mut exporters, mut pairs, mut dist, mut markets) = (0, 0usize, 0.0, 0usize);
        for f in &members {
            let set = last.get(f).map_or_else(BTreeSet::new, Clone::clone);
            if !set.is_empty() {
                exporters += 1;
            }
            markets += set.len();
            for c in &set {
                dist += r.dist_km.get(c).copied().unwrap_or(f64::NAN);
                pairs += 1;
            }
        }
        industries.push(IndustryRow {
            industry: k,
            firms: members.len(),
            exporters,
            mean_distance_km: if pairs > 0 { dist / pairs as f64 } else { f64::NAN },
            mean_markets: if members.is_empty() { f64::NAN } else { markets as f64 / members.len() as f64 },
        });
    }

    let mut markets_per_firm = Vec::with_capacity(r.held.len());
    let mut firms_per_market = Vec::with_capacity(r.held.len());
    for held in &r.held {
        let counts = r.industry_of.keys().map(|f| held.get(f).map_or(0, BTreeSet::len) as f64).collect();
        markets_per_firm.push(Quantiles::of(counts));
        let mut cell: BTreeMap<(usize, &str), usize> = BTreeMap::new();
        for (f, set) in held {
            for c in set {
                *cell.entry((r.industry_of[f], c.as_str())).or_default() += 1;
            }
        }
        let mut n = Vec::with_capacity(n_ind * destinations.len());
        for k in 0..n_ind {
            for d in destinations {
                n.push(cell.get(&(k, d.as_str())).copied().unwrap_or(0) as f64);
            }
        }
        firms_per_market.push(Quantiles::of(n));
    }
    Ok(StylizedFacts { histogram: hist.into_iter().collect(), industries, markets_per_firm, firms_per_market })
}

/// Writes `markets_histogram.csv`, `industry_summary.csv` and
/// `quantiles.csv` into `dir`; returns the paths written.
pub fn write_stylized_facts(facts: &StylizedFacts, dir: &Path) -> Result<Vec<std::path::PathBuf>> {
    let write = |name: &str, body: String| -> Result<std::path::PathBuf> {
        let p = dir.join(name);
        std::fs::write(&p, body).map_err(|e| Error::io(&p, e))?;
        Ok(p)
    };
    let mut h = String::from("markets,firms\n");
    for (m, f) in &facts.histogram {
        h.push_str(&format!("{m},{f}\n"));
    }
    let mut ind = String::from("industry,firms,exporters,mean_distance_km,mean_markets\n");
    for r in &facts.industries {
        ind.push_str(&format!(
            "{},{},{},{},{}\n",
            r.industry,
            r.firms,
            r.exporters,
            fmt_g(r.mean_distance_km),
            fmt_g(r.mean_markets)
        ));
    }
    let mut q = String::from("period,variable,p20,median,p95,mean\n");
    for (t, (a, b)) in facts.markets_per_firm.iter().zip(&facts.firms_per_market).enumerate() {
        for (name, v) in [("markets_per_firm", a), ("firms_per_market", b)] {
            q.push_str(&format!(
                "{t},{name},{},{},{},{}\n",
                fmt_g(v.p20),
                fmt_g(v.median),
                fmt_g(v.p95),
                fmt_g(v.mean)
            ));
        }
    }
    Ok(vec![
        write("markets_histogram.csv", h)?,
        write("industry_summary.csv", ind)?,
        write("quantiles.csv", q)?,
    ])
}
