//! Countries, market sizes and distances.
//!
//! Two distance conventions coexist. The theory side (entry costs, search
//! channels) uses raw distances divided by a configurable `distance_scale`
//! so costs stay of order one to ten. The regressor side uses natural logs of
//! the same scaled distances, so markets closer than one scale unit contribute
//! negative terms.

use alloc::string::String;
use alloc::vec::Vec;

use crate::{ModelError, Result};

/// Mean Earth radius used by the great-circle distance, in kilometres.
pub const EARTH_RADIUS_KM: f64 = 6371.0;

/// Default divisor applied to kilometre distances on the theory side.
pub const DEFAULT_DISTANCE_SCALE: f64 = 1000.0;

/// Dense index of a country inside a [`WorldGeometry`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CountryId(pub u32);

impl CountryId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Country {
    pub name: String,
    /// Market size; serves both as number of consumers and as the density
    /// denominator.
    pub gdp: f64,
    pub home: bool,
    /// `(lat, lon)` in degrees when known.
    pub coords: Option<(f64, f64)>,
}

impl Country {
    pub fn new(name: impl Into<String>, gdp: f64) -> Self {
        Country { name: name.into(), gdp, home: false, coords: None }
    }

    pub fn at(mut self, lat: f64, lon: f64) -> Self {
        self.coords = Some((lat, lon));
        self
    }

    pub fn home(mut self) -> Self {
        self.home = true;
        self
    }
}

/// Which distance transform a kernel should apply.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DistanceConvention {
    /// Scaled raw distance, used by the theory equations.
    Scaled,
    /// Natural log of the scaled distance, used by the regressors.
    Log,
}

/// Immutable world: countries plus a symmetric distance matrix in kilometres.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldGeometry {
    countries: Vec<Country>,
    /// Row-major `n x n`, kilometres.
    dist_km: Vec<f64>,
    home: CountryId,
    distance_scale: f64,
}

impl WorldGeometry {
    /// Builds a world from an explicit kilometre distance matrix.
    pub fn from_matrix(countries: Vec<Country>, dist_km: Vec<f64>) -> Result<Self> {
        let n = countries.len();
        if dist_km.len() != n * n {
            return Err(ModelError::InvalidGeometry(alloc::format!(
                "distance matrix has {} entries, expected {}",
                dist_km.len(),
                n * n
            )));
        }
        let home = validate_countries(&countries)?;
        for a in 0..n {
            if dist_km[a * n + a] != 0.0 {
                return Err(ModelError::InvalidGeometry(alloc::format!(
                    "dist({0}, {0}) must be 0",
                    countries[a].name
                )));
            }
            for b in (a + 1)..n {
                let ab = dist_km[a * n + b];
                let ba = dist_km[b * n + a];
                if !(ab > 0.0 && ab.is_finite()) {
                    return Err(ModelError::InvalidGeometry(alloc::format!(
                        "dist({}, {}) = {} must be positive",
                        countries[a].name,
                        countries[b].name,
                        ab
                    )));
                }
                if ab != ba {
                    return Err(ModelError::InvalidGeometry(alloc::format!(
                        "distance matrix not symmetric at ({}, {})",
                        countries[a].name,
                        countries[b].name
                    )));
                }
            }
        }
        Ok(WorldGeometry { countries, dist_km, home, distance_scale: DEFAULT_DISTANCE_SCALE })
    }

    /// Builds a world from `(lat, lon)` coordinates using great-circle distance.
    pub fn from_coordinates(countries: Vec<Country>) -> Result<Self> {
        let n = countries.len();
        let mut coords = Vec::with_capacity(n);
        for c in &countries {
            match c.coords {
                Some(p) => coords.push(p),
                None => {
                    return Err(ModelError::InvalidGeometry(alloc::format!(
                        "country {} has no coordinates",
                        c.name
                    )))
                }
            }
        }
        let mut dist = alloc::vec![0.0; n * n];
        for a in 0..n {
            for b in (a + 1)..n {
                let d = great_circle_km(coords[a], coords[b]);
                dist[a * n + b] = d;
                dist[b * n + a] = d;
            }
        }
        Self::from_matrix(countries, dist)
    }

    pub fn with_distance_scale(mut self, scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(ModelError::Domain { what: "distance_scale", value: scale });
        }
        self.distance_scale = scale;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.countries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.countries.is_empty()
    }

    pub fn countries(&self) -> &[Country] {
        &self.countries
    }

    pub fn home(&self) -> CountryId {
        self.home
    }

    pub fn distance_scale(&self) -> f64 {
        self.distance_scale
    }

    pub fn ids(&self) -> impl Iterator<Item = CountryId> + '_ {
        (0..self.countries.len() as u32).map(CountryId)
    }

    /// Foreign countries in index order.
    pub fn foreign(&self) -> impl Iterator<Item = CountryId> + '_ {
        let home = self.home;
        self.ids().filter(move |&c| c != home)
    }

    pub fn country(&self, id: CountryId) -> Result<&Country> {
        self.countries.get(id.index()).ok_or(ModelError::UnknownCountry(id))
    }

    pub fn gdp(&self, id: CountryId) -> Result<f64> {
        self.country(id).map(|c| c.gdp)
    }

    pub fn find(&self, name: &str) -> Option<CountryId> {
        self.countries.iter().position(|c| c.name == name).map(|i| CountryId(i as u32))
    }

    pub fn km(&self, a: CountryId, b: CountryId) -> Result<f64> {
        let n = self.countries.len();
        if a.index() >= n {
            return Err(ModelError::UnknownCountry(a));
        }
        if b.index() >= n {
            return Err(ModelError::UnknownCountry(b));
        }
        Ok(self.dist_km[a.index() * n + b.index()])
    }

    /// Theory-side distance: kilometres divided by the distance scale.
    pub fn scaled(&self, a: CountryId, b: CountryId) -> Result<f64> {
        Ok(self.km(a, b)? / self.distance_scale)
    }

    /// Regressor-side distance: natural log of the scaled distance.
    pub fn log_distance(&self, a: CountryId, b: CountryId) -> Result<f64> {
        let d = self.scaled(a, b)?;
        if d <= 0.0 {
            return Err(ModelError::Domain { what: "distance for log", value: d });
        }
        Ok(libm::log(d))
    }

    pub fn distance(&self, a: CountryId, b: CountryId, conv: DistanceConvention) -> Result<f64> {
        match conv {
            DistanceConvention::Scaled => self.scaled(a, b),
            DistanceConvention::Log => self.log_distance(a, b),
        }
    }
}

fn validate_countries(countries: &[Country]) -> Result<CountryId> {
    if countries.len() < 2 {
        return Err(ModelError::InvalidGeometry("a world needs at least two countries".into()));
    }
    let mut home = None;
    for (i, c) in countries.iter().enumerate() {
        if !(c.gdp > 0.0 && c.gdp.is_finite()) {
            return Err(ModelError::Domain { what: "gdp", value: c.gdp });
        }
        if c.home {
            if home.is_some() {
                return Err(ModelError::InvalidGeometry("more than one home country".into()));
            }
            home = Some(CountryId(i as u32));
        }
        if countries[..i].iter().any(|o| o.name == c.name) {
            return Err(ModelError::InvalidGeometry(alloc::format!(
                "duplicate country id {}",
                c.name
            )));
        }
    }
    home.ok_or_else(|| ModelError::InvalidGeometry("no home country".into()))
}

/// Haversine distance between two `(lat, lon)` points in degrees.
pub fn great_circle_km(a: (f64, f64), b: (f64, f64)) -> f64 {
    let to_rad = core::f64::consts::PI / 180.0;
    let (lat1, lon1) = (a.0 * to_rad, a.1 * to_rad);
    let (lat2, lon2) = (b.0 * to_rad, b.1 * to_rad);
    let s_lat = libm::sin((lat2 - lat1) / 2.0);
    let s_lon = libm::sin((lon2 - lon1) / 2.0);
    let h = s_lat * s_lat + libm::cos(lat1) * libm::cos(lat2) * s_lon * s_lon;
    2.0 * EARTH_RADIUS_KM * libm::asin(libm::sqrt(h.min(1.0)))
}

/// Density weight `e^{-N/L + 1}`; equals one at unit density.
pub fn density_weight(n_firms: f64, size: f64) -> Result<f64> {
    if !(size > 0.0) {
        return Err(ModelError::Domain { what: "market size", value: size });
    }
    Ok(libm::exp(-n_firms / size + 1.0))
}

fn log_distance_sum(target: CountryId, markets: &[CountryId], geo: &WorldGeometry) -> Result<f64> {
    geo.country(target)?;
    let mut sum = 0.0;
    for &m in markets {
        if m == target {
            return Err(ModelError::TargetInPortfolio(target));
        }
        sum += geo.log_distance(m, target)?;
    }
    Ok(sum)
}

/// Sum of log distances from `target` to each of a firm's current markets.
pub fn firm_distance_sum(
    target: CountryId,
    firm_markets: &[CountryId],
    geo: &WorldGeometry,
) -> Result<f64> {
    log_distance_sum(target, firm_markets, geo)
}

/// Sum of log distances from `target` to each market the industry serves.
pub fn industry_distance_sum(
    target: CountryId,
    industry_markets: &[CountryId],
    geo: &WorldGeometry,
) -> Result<f64> {
    log_distance_sum(target, industry_markets, geo)
}

/// `sum_i e^{-N_i/L_i + 1} d'_{is}` over the industry's markets `(i, N_i)`.
///
/// Sparse markets (density below one) are up-weighted, dense ones
/// down-weighted.
pub fn density_weighted_distance(
    target: CountryId,
    industry_markets: &[(CountryId, f64)],
    geo: &WorldGeometry,
    conv: DistanceConvention,
) -> Result<f64> {
    geo.country(target)?;
    let mut sum = 0.0;
    for &(m, n) in industry_markets {
        if m == target {
            return Err(ModelError::TargetInPortfolio(target));
        }
        let w = density_weight(n, geo.gdp(m)?)?;
        sum += w * geo.distance(m, target, conv)?;
    }
    Ok(sum)
}

/// Chain-rule weight `sum_i e^{-N_i/L_i + 1} / L_i * d'_{is}`, the magnitude of
/// the derivative of the density-weighted distance with respect to a common
/// shift in the `N_i`.
pub fn density_chain_weight(
    target: CountryId,
    industry_markets: &[(CountryId, f64)],
    geo: &WorldGeometry,
    conv: DistanceConvention,
) -> Result<f64> {
    let mut sum = 0.0;
    for &(m, n) in industry_markets {
        if m == target {
            return Err(ModelError::TargetInPortfolio(target));
        }
        let size = geo.gdp(m)?;
        sum += density_weight(n, size)? / size * geo.distance(m, target, conv)?;
    }
    Ok(sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    const E: f64 = core::f64::consts::E;

    /// Home at index 0; distances given in scale units for readability.
    fn line_world(units: &[f64], gdp: &[f64]) -> WorldGeometry {
        let n = units.len() + 1;
        let mut countries = vec![Country::new("home", 1.0).home()];
        for (i, g) in gdp.iter().enumerate() {
            countries.push(Country::new(alloc::format!("c{i}"), *g));
        }
        // target is country 1; others sit at the given distance from it.
        let mut d = vec![0.0; n * n];
        for a in 0..n {
            for b in 0..n {
                if a != b {
                    d[a * n + b] = 50_000.0;
                }
            }
        }
        for (i, u) in units.iter().enumerate().skip(1) {
            let (a, b) = (1, i + 1);
            d[a * n + b] = u * DEFAULT_DISTANCE_SCALE;
            d[b * n + a] = u * DEFAULT_DISTANCE_SCALE;
        }
        WorldGeometry::from_matrix(countries, d).unwrap()
    }

    fn ids(v: &[u32]) -> Vec<CountryId> {
        v.iter().map(|&i| CountryId(i)).collect()
    }

    #[test]
    fn empty_sums_are_zero() {
        let w = line_world(&[0.0, 2.0], &[1.0, 1.0]);
        assert_eq!(firm_distance_sum(CountryId(1), &[], &w).unwrap(), 0.0);
        assert_eq!(industry_distance_sum(CountryId(1), &[], &w).unwrap(), 0.0);
        let dw = density_weighted_distance(CountryId(1), &[], &w, DistanceConvention::Scaled);
        assert_eq!(dw.unwrap(), 0.0);
    }

    #[test]
    fn log_sum_of_e_and_e_squared() {
        let w = line_world(&[0.0, E, E * E], &[1.0, 1.0, 1.0]);
        let s = firm_distance_sum(CountryId(1), &ids(&[2, 3]), &w).unwrap();
        assert!((s - 3.0).abs() < 1e-12, "{s}");
        let t = industry_distance_sum(CountryId(1), &ids(&[2, 3]), &w).unwrap();
        assert_eq!(s, t);
    }

    #[test]
    fn sub_unit_distance_gives_negative_log() {
        let w = line_world(&[0.0, 0.5], &[1.0, 1.0]);
        let s = firm_distance_sum(CountryId(1), &ids(&[2]), &w).unwrap();
        assert!((s - libm::log(0.5)).abs() < 1e-12);
        assert!(s < 0.0);
    }

    #[test]
    fn industry_sum_two_four_eight() {
        let w = line_world(&[0.0, 2.0, 4.0, 8.0], &[1.0; 4]);
        let s = industry_distance_sum(CountryId(1), &ids(&[2, 3, 4]), &w).unwrap();
        let expect = libm::log(2.0) + libm::log(4.0) + libm::log(8.0);
        assert!((s - expect).abs() < 1e-12);
        assert!((s - 4.158883083).abs() < 1e-9);
    }

    #[test]
    fn density_weight_examples() {
        // N/L = 1 -> weight 1
        let w = line_world(&[0.0, 7.0], &[1.0, 3.0]);
        let v = density_weighted_distance(
            CountryId(1),
            &[(CountryId(2), 3.0)],
            &w,
            DistanceConvention::Scaled,
        )
        .unwrap();
        assert!((v - 7.0).abs() < 1e-12);
        // N/L = 2 -> 5 e^{-1}
        let w = line_world(&[0.0, 5.0], &[1.0, 2.0]);
        let v = density_weighted_distance(
            CountryId(1),
            &[(CountryId(2), 4.0)],
            &w,
            DistanceConvention::Scaled,
        )
        .unwrap();
        assert!((v - 1.839397206).abs() < 1e-9, "{v}");
    }

    #[test]
    fn density_weight_rejects_nonpositive_size() {
        assert!(matches!(density_weight(1.0, 0.0), Err(ModelError::Domain { .. })));
        assert!(matches!(density_weight(1.0, -2.0), Err(ModelError::Domain { .. })));
    }

    #[test]
    fn unknown_country_is_lookup_error() {
        let w = line_world(&[0.0, 2.0], &[1.0, 1.0]);
        let e = firm_distance_sum(CountryId(9), &[], &w).unwrap_err();
        assert_eq!(e, ModelError::UnknownCountry(CountryId(9)));
        let e = firm_distance_sum(CountryId(1), &ids(&[7]), &w).unwrap_err();
        assert_eq!(e, ModelError::UnknownCountry(CountryId(7)));
    }

    #[test]
    fn target_in_portfolio_rejected() {
        let w = line_world(&[0.0, 2.0], &[1.0, 1.0]);
        let e = firm_distance_sum(CountryId(1), &ids(&[1]), &w).unwrap_err();
        assert_eq!(e, ModelError::TargetInPortfolio(CountryId(1)));
    }

    #[test]
    fn geometry_validation() {
        let c = || vec![Country::new("a", 1.0).home(), Country::new("b", 1.0)];
        assert!(WorldGeometry::from_matrix(c(), vec![0.0, 1.0, 2.0, 0.0]).is_err());
        assert!(WorldGeometry::from_matrix(c(), vec![0.0, 0.0, 0.0, 0.0]).is_err());
        assert!(WorldGeometry::from_matrix(c(), vec![1.0, 1.0, 1.0, 0.0]).is_err());
        let no_home = vec![Country::new("a", 1.0), Country::new("b", 1.0)];
        assert!(WorldGeometry::from_matrix(no_home, vec![0.0, 1.0, 1.0, 0.0]).is_err());
        let bad_gdp = vec![Country::new("a", 1.0).home(), Country::new("b", 0.0)];
        assert!(WorldGeometry::from_matrix(bad_gdp, vec![0.0, 1.0, 1.0, 0.0]).is_err());
    }

    #[test]
    fn great_circle_known_values() {
        // A quarter meridian.
        let d = great_circle_km((0.0, 0.0), (90.0, 0.0));
        assert!((d - EARTH_RADIUS_KM * core::f64::consts::FRAC_PI_2).abs() < 1e-6);
        // Symmetry and zero.
        let p = (31.2, 121.5);
        let q = (48.9, 2.35);
        assert_eq!(great_circle_km(p, q), great_circle_km(q, p));
        assert_eq!(great_circle_km(p, p), 0.0);
    }

    #[test]
    fn matrix_from_coordinates_is_symmetric() {
        let countries = vec![
            Country::new("cn", 10.0).at(35.0, 103.0).home(),
            Country::new("us", 15.0).at(38.0, -97.0),
            Country::new("de", 3.0).at(51.0, 9.0),
        ];
        let w = WorldGeometry::from_coordinates(countries).unwrap();
        for a in w.ids() {
            assert_eq!(w.km(a, a).unwrap(), 0.0);
            for b in w.ids() {
                assert_eq!(w.km(a, b).unwrap(), w.km(b, a).unwrap());
            }
        }
        assert_eq!(w.home(), CountryId(0));
    }
}
