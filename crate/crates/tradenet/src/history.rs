//! Event log and per-period market tables written by `simulate`.
//!
//! `history.csv` has one row per event:
//! `period,firm,industry,country,event,channel,dist_home_km` where `event` is
//! `birth`, `entry` or `exit`. Birth rows leave the country columns empty;
//! entries at period 0 carry the channel `initial`.

use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::format::fmt_g;
use crate::sim::History;

pub const HISTORY_HEADER: &str = "period,firm,industry,country,event,channel,dist_home_km";

fn create(path: &Path) -> Result<BufWriter<std::fs::File>> {
    Ok(BufWriter::new(std::fs::File::create(path).map_err(|e| Error::io(path, e))?))
}

fn write_lines(path: &Path, header: &str, lines: impl Iterator<Item = Result<String>>) -> Result<()> {
    let mut out = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(out, "{header}").map_err(io)?;
    for line in lines {
        writeln!(out, "{}", line?).map_err(io)?;
    }
    out.flush().map_err(io)
}

pub fn write_history(history: &History, path: &Path) -> Result<()> {
    let world = &history.world;
    let home = world.home();
    write_lines(
        path,
        HISTORY_HEADER,
        history.events.iter().map(|e| {
            let (country, dist) = match e.country {
                Some(s) => (world.country(s)?.name.clone(), fmt_g(world.km(home, s)?)),
                None => (String::new(), String::new()),
            };
            Ok(format!(
                "{},{},{},{},{},{},{}",
                e.period,
                e.firm,
                e.industry,
                country,
                e.kind.label(),
                e.kind.channel(),
                dist
            ))
        }),
    )
}

/// `period,industry,country,n_firms,p_bar,cutoff` for every market.
pub fn write_market_state(history: &History, path: &Path) -> Result<()> {
    let c = history.n_countries();
    let world = &history.world;
    let rows = history.periods.iter().enumerate().flat_map(move |(t, p)| {
        (0..history.industries.len()).flat_map(move |k| {
            world.foreign().map(move |s| {
                let m = k * c + s.index();
                Ok(format!(
                    "{t},{k},{},{},{},{}",
                    world.country(s)?.name,
                    p.n[m],
                    fmt_g(p.p_bar[m]),
                    fmt_g(p.cutoff[m])
                ))
            })
        })
    });
    write_lines(path, "period,industry,country,n_firms,p_bar,cutoff", rows)
}

/// One line per evaluated (firm, market) pair.
pub fn write_trace(history: &History, path: &Path) -> Result<()> {
    let world = &history.world;
    write_lines(
        path,
        "period,firm,country,n_s,cutoff,best_channel,gross_profit,entry_cost,net_profit,entered",
        history.trace.iter().map(|r| {
            let (ch, gross, cost, net) = match r.best {
                Some((ch, g, c, n)) => (ch.name(), fmt_g(g), fmt_g(c), fmt_g(n)),
                None => ("", String::new(), String::new(), String::new()),
            };
            Ok(format!(
                "{},{},{},{},{},{ch},{gross},{cost},{net},{}",
                r.period,
                r.firm,
                world.country(r.country)?.name,
                fmt_g(r.n_s),
                fmt_g(r.cutoff),
                u8::from(r.entered)
            ))
        }),
    )
}

/// A row of `history.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct LoggedEvent {
    pub period: usize,
    pub firm: u32,
    pub industry: usize,
    pub country: Option<String>,
    pub event: String,
    pub channel: String,
    pub dist_home_km: Option<f64>,
}

pub fn read_history(path: &Path) -> Result<Vec<LoggedEvent>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::input(path, e.to_string()))?;
    let header = rdr.headers().map_err(|e| Error::input(path, e.to_string()))?;
    if header.iter().collect::<Vec<_>>().join(",") != HISTORY_HEADER {
        return Err(Error::input(path, format!("expected header `{HISTORY_HEADER}`")));
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::input(path, format!("line {line}: {e}")))?;
        let bad = |what: &str| Error::input(path, format!("line {line}: bad {what}"));
        let opt = |s: &str| (!s.is_empty()).then(|| s.to_string());
        let event = rec[4].to_string();
        if !matches!(event.as_str(), "birth" | "entry" | "exit") {
            return Err(bad("event"));
        }
        out.push(LoggedEvent {
            period: rec[0].parse().map_err(|_| bad("period"))?,
            firm: rec[1].parse().map_err(|_| bad("firm"))?,
            industry: rec[2].parse().map_err(|_| bad("industry"))?,
            country: opt(&rec[3]),
            event,
            channel: rec[5].to_string(),
            dist_home_km: match &rec[6] {
                "" => None,
                v => Some(v.parse().map_err(|_| bad("dist_home_km"))?),
            },
        });
    }
    Ok(out)
}
