//! Country files and the random world generator.
//!
//! Country file: CSV with header `id,gdp,lat,lon` and an optional `home`
//! column holding `1`/`0` (or `true`/`false`). Exactly one row is home.
//! Without a `home` column the first row is home.
//!
//! Distance matrix file: CSV whose header is `id` followed by every country
//! id, one row per country, kilometres.

use std::io::Write;
use std::path::Path;

use rand_distr::{Distribution, Normal, StandardNormal};
use tradenet_core::geo::{Country, WorldGeometry};
use tradenet_core::rng::{SeedTree, Stream};

use crate::config::{GenerateConfig, WorldConfig};
use crate::error::{Error, Result};
use crate::format::fmt_g;

pub fn load(cfg: &WorldConfig, base_dir: &Path, seed: u64) -> Result<WorldGeometry> {
    let world = match (&cfg.file, &cfg.generate) {
        (Some(file), _) => {
            let path = base_dir.join(file);
            let countries = read_countries(&path)?;
            match &cfg.matrix {
                Some(m) => {
                    let mpath = base_dir.join(m);
                    let dist = read_matrix(&mpath, &countries)?;
                    WorldGeometry::from_matrix(countries, dist)
                        .map_err(|e| Error::input(&mpath, e.to_string()))?
                }
                None => WorldGeometry::from_coordinates(countries).map_err(|e| Error::input(&path, e.to_string()))?,
            }
        }
        (None, Some(g)) => generate(g, seed)?,
        (None, None) => return Err(Error::Usage("world needs a file or a generator".into())),
    };
    Ok(world.with_distance_scale(cfg.distance_scale_km)?)
}

fn parse_home(v: &str) -> Option<bool> {
    match v.trim() {
        "1" | "true" | "TRUE" | "yes" => Some(true),
        "0" | "false" | "FALSE" | "no" | "" => Some(false),
        _ => None,
    }
}

pub fn read_countries(path: &Path) -> Result<Vec<Country>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::input(path, e.to_string()))?;
    let headers = rdr.headers().map_err(|e| Error::input(path, e.to_string()))?.clone();
    let col = |name: &str| headers.iter().position(|h| h.trim() == name);
    let (Some(id), Some(gdp)) = (col("id"), col("gdp")) else {
        return Err(Error::input(path, "header must contain `id` and `gdp`"));
    };
    let (lat, lon, home) = (col("lat"), col("lon"), col("home"));
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::input(path, e.to_string()))?;
        let field = |c: usize| rec.get(c).unwrap_or("").trim();
        let num = |c: usize, what: &str| -> Result<f64> {
            field(c).parse::<f64>().map_err(|_| Error::input(path, format!("line {line}: bad {what} `{}`", field(c))))
        };
        let mut c = Country::new(field(id), num(gdp, "gdp")?);
        if let (Some(a), Some(b)) = (lat, lon) {
            c = c.at(num(a, "lat")?, num(b, "lon")?);
        }
        if let Some(h) = home {
            match parse_home(field(h)) {
                Some(true) => c = c.home(),
                Some(false) => {}
                None => return Err(Error::input(path, format!("line {line}: bad home flag `{}`", field(h)))),
            }
        }
        out.push(c);
    }
    if home.is_none() {
        if let Some(first) = out.first_mut() {
            first.home = true;
        }
    }
    Ok(out)
}

pub fn read_matrix(path: &Path, countries: &[Country]) -> Result<Vec<f64>> {
    let n = countries.len();
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::input(path, e.to_string()))?;
    let headers = rdr.headers().map_err(|e| Error::input(path, e.to_string()))?.clone();
    let index_of = |name: &str| countries.iter().position(|c| c.name == name);
    let mut cols = Vec::with_capacity(n);
    for h in headers.iter().skip(1) {
        cols.push(index_of(h.trim()).ok_or_else(|| Error::input(path, format!("unknown country `{h}` in header")))?);
    }
    if cols.len() != n {
        return Err(Error::input(path, format!("header lists {} countries, expected {n}", cols.len())));
    }
    let mut dist = vec![f64::NAN; n * n];
    let mut seen = vec![false; n];
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::input(path, e.to_string()))?;
        let name = rec.get(0).unwrap_or("").trim();
        let a = index_of(name).ok_or_else(|| Error::input(path, format!("unknown country `{name}`")))?;
        seen[a] = true;
        for (j, &b) in cols.iter().enumerate() {
            let v = rec.get(j + 1).unwrap_or("").trim();
            dist[a * n + b] =
                v.parse().map_err(|_| Error::input(path, format!("bad distance `{v}` for ({name}, {})", countries[b].name)))?;
        }
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(Error::input(path, format!("no row for `{}`", countries[missing].name)));
    }
    Ok(dist)
}

/// Countries around `regions` random centres; country 0 is home.
pub fn generate(g: &GenerateConfig, seed: u64) -> Result<WorldGeometry> {
    let tree = SeedTree::new(seed);
    let centres: Vec<(f64, f64)> = (0..g.regions as u64)
        .map(|r| {
            let lat = -45.0 + 100.0 * tree.uniform(Stream::World, 0, r, 0);
            let lon = -180.0 + 360.0 * tree.uniform(Stream::World, 0, r, 1);
            (lat, lon)
        })
        .collect();
    let gdp = Normal::new(g.gdp_log_mean, g.gdp_log_sd).map_err(|e| Error::Numeric(e.to_string()))?;
    let mut countries = Vec::with_capacity(g.countries);
    for i in 0..g.countries as u64 {
        let mut rng = tree.rng(Stream::World, 1, i, 0);
        let (clat, clon) = centres[(i as usize) % centres.len()];
        let dlat: f64 = StandardNormal.sample(&mut rng);
        let dlon: f64 = StandardNormal.sample(&mut rng);
        let lat = (clat + g.region_spread_deg * dlat).clamp(-85.0, 85.0);
        let lon = wrap_lon(clon + g.region_spread_deg * dlon);
        let size = gdp.sample(&mut rng).exp();
        let mut c = Country::new(format!("c{i:02}"), size).at(lat, lon);
        if i == 0 {
            c = c.home();
        }
        countries.push(c);
    }
    Ok(WorldGeometry::from_coordinates(countries)?)
}

fn wrap_lon(lon: f64) -> f64 {
    let w = (lon + 180.0).rem_euclid(360.0) - 180.0;
    if w == -180.0 {
        180.0
    } else {
        w
    }
}

/// Writes the country file of a world (coordinates when known).
pub fn write_countries(world: &WorldGeometry, path: &Path) -> Result<()> {
    let mut out = String::from("id,gdp,lat,lon,home\n");
    for c in world.countries() {
        let (lat, lon) = c.coords.map(|(a, b)| (fmt_g(a), fmt_g(b))).unwrap_or_default();
        out.push_str(&format!("{},{},{},{},{}\n", c.name, fmt_g(c.gdp), lat, lon, u8::from(c.home)));
    }
    std::fs::File::create(path)
        .and_then(|mut f| f.write_all(out.as_bytes()))
        .map_err(|e| Error::io(path, e))
}
