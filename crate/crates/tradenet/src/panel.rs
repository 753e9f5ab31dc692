//! Firm x destination x period panel built from a simulation history.
//!
//! One row per firm, foreign country and period after the first. Lagged
//! columns read the end of the previous period; `export` and `n_sk_now`
//! read the current one. Distances in the regressors are
//! `ln(km / log_distance_unit_km)`.

use std::io::{BufWriter, Write};
use std::path::Path;

use tradenet_core::econometrics::Frame;
use tradenet_core::geo::density_weight;

use crate::error::{Error, Result};
use crate::format::fmt_g;
use crate::sim::History;

/// Panel header, in file order.
pub const COLUMNS: [&str; 21] = [
    "period",
    "firm",
    "industry",
    "country",
    "export",
    "export_lag",
    "markets_lag",
    "firm_dist_sum",
    "n_sk",
    "industry_dist_sum",
    "density_dist",
    "gamma",
    "gamma_x_n_sk",
    "gamma_x_density_dist",
    "scale",
    "gdp",
    "dist_home",
    "dist_world",
    "imports_growth_home",
    "imports_growth_world",
    "n_sk_now",
];

/// Rows a history produces: firms x (countries - 1) x (periods - 1).
pub fn expected_rows(history: &History) -> usize {
    history.firms.len() * (history.n_countries() - 1) * (history.periods.len() - 1)
}

struct Columns {
    data: Vec<Vec<f64>>,
}

impl Columns {
    fn push(&mut self, row: [f64; COLUMNS.len()]) {
        for (col, v) in self.data.iter_mut().zip(row) {
            col.push(v);
        }
    }
}

/// Builds the panel as a frame with [`COLUMNS`] in order.
pub fn extract_panel(history: &History, log_unit_km: f64) -> Result<Frame> {
    let world = &history.world;
    let c = world.len();
    let home = world.home();
    if history.periods.len() < 2 {
        return Err(Error::Usage("panel needs at least two periods".into()));
    }

    let mut logd = vec![0.0; c * c];
    for a in world.ids() {
        for b in world.ids() {
            if a != b {
                logd[a.index() * c + b.index()] = (world.km(a, b)? / log_unit_km).ln();
            }
        }
    }
    let dist_world: Vec<f64> =
        (0..c).map(|s| (0..c).filter(|&r| r != s).map(|r| logd[r * c + s]).sum()).collect();

    // imports from everywhere else: a gravity baseline plus home's exports
    let baseline: Vec<f64> = world
        .ids()
        .map(|s| {
            let mut g = 0.0;
            for r in world.foreign().filter(|&r| r != s) {
                g += world.gdp(r)? / world.scaled(r, s)?;
            }
            Ok(world.gdp(s)? * g)
        })
        .collect::<Result<_>>()?;

    let rows = expected_rows(history);
    let mut cols = Columns { data: vec![Vec::with_capacity(rows); COLUMNS.len()] };
    for t in 1..history.periods.len() {
        let (prev, now) = (&history.periods[t - 1], &history.periods[t]);
        let n_ind = history.industries.len();

        // industry sums toward every target, lagged
        let mut ind_sum = vec![0.0; n_ind * c];
        let mut dens_sum = vec![0.0; n_ind * c];
        for k in 0..n_ind {
            for i in world.foreign() {
                let n_i = prev.n[k * c + i.index()];
                if n_i == 0 {
                    continue;
                }
                let w = density_weight(f64::from(n_i), world.gdp(i)?)?;
                for s in 0..c {
                    if s != i.index() {
                        ind_sum[k * c + s] += logd[i.index() * c + s];
                        dens_sum[k * c + s] += w * logd[i.index() * c + s];
                    }
                }
            }
        }

        for (f, firm) in history.firms.iter().enumerate() {
            let k = firm.industry;
            let gamma = history.industries[k].gamma;
            let held = history.portfolio(t - 1, f);
            for s in world.foreign() {
                let si = s.index();
                let m = k * c + si;
                let firm_dist: f64 = held.iter().filter(|&&h| h != s).map(|h| logd[h.index() * c + si]).sum();
                let n_sk = f64::from(prev.n[m]);
                let gdp = world.gdp(s)?;
                let growth_home = now.flows[si].ln_1p() - prev.flows[si].ln_1p();
                let growth_world = (baseline[si] + now.flows[si]).ln() - (baseline[si] + prev.flows[si]).ln();
                cols.push([
                    t as f64,
                    f64::from(firm.id),
                    k as f64,
                    f64::from(s.0),
                    f64::from(u8::from(now.active[f * c + si])),
                    f64::from(u8::from(prev.active[f * c + si])),
                    held.len() as f64,
                    firm_dist,
                    n_sk,
                    ind_sum[m],
                    dens_sum[m],
                    gamma,
                    gamma * n_sk,
                    gamma * dens_sum[m],
                    prev.scale[f],
                    gdp,
                    logd[home.index() * c + si],
                    dist_world[si],
                    growth_home,
                    growth_world,
                    f64::from(now.n[m]),
                ]);
            }
        }
    }
    let mut frame = Frame::new();
    for (name, data) in COLUMNS.iter().zip(cols.data) {
        frame.push(name, data)?;
    }
    Ok(frame)
}

/// Writes a frame as CSV, every value through [`fmt_g`].
pub fn write_frame(frame: &Frame, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let names = frame.names();
    let cols: Vec<&[f64]> = names.iter().map(|n| frame.get(n).expect("own column")).collect();
    let mut line = names.join(",");
    line.push('\n');
    let io = |e| Error::io(path, e);
    out.write_all(line.as_bytes()).map_err(io)?;
    for r in 0..frame.n_rows() {
        line.clear();
        for (j, col) in cols.iter().enumerate() {
            if j > 0 {
                line.push(',');
            }
            line.push_str(&fmt_g(col[r]));
        }
        line.push('\n');
        out.write_all(line.as_bytes()).map_err(io)?;
    }
    out.flush().map_err(io)
}

/// Reads a numeric CSV into a frame. Every column must parse as a number.
pub fn read_frame(path: &Path) -> Result<Frame> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::input(path, e.to_string()))?;
    let names: Vec<String> =
        rdr.headers().map_err(|e| Error::input(path, e.to_string()))?.iter().map(|h| h.trim().to_string()).collect();
    let mut data: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::input(path, format!("line {}: {e}", i + 2)))?;
        for (j, v) in rec.iter().enumerate() {
            let x = v.trim().parse::<f64>().map_err(|_| {
                Error::input(path, format!("line {}: column `{}` holds non-numeric `{v}`", i + 2, names[j]))
            })?;
            data[j].push(x);
        }
    }
    let mut frame = Frame::new();
    for (name, col) in names.iter().zip(data) {
        frame.push(name, col).map_err(|e| Error::input(path, e.to_string()))?;
    }
    Ok(frame)
}

/// Fails with an input error naming the first absent column.
pub fn require_columns(frame: &Frame, path: &Path, needed: &[&str]) -> Result<()> {
    for name in needed {
        if frame.get(name).is_none() {
            return Err(Error::input(path, format!("panel has no column `{name}`")));
        }
    }
    Ok(())
}
