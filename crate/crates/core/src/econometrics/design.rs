use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use super::linalg::{dot, Matrix};
use super::{EstimationError, Frame};

/// Name of the appended intercept column.
pub const INTERCEPT: &str = "intercept";

/// Residual share of a column's norm below which it counts as collinear
/// with the columns before it.
const COLLINEAR_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Probit,
    Poisson,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Probit => "probit",
            Family::Poisson => "poisson",
        }
    }

    pub fn parse(s: &str) -> Option<Family> {
        match s {
            "probit" => Some(Family::Probit),
            "poisson" => Some(Family::Poisson),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionSpec {
    pub dependent: String,
    pub regressors: Vec<String>,
    pub fixed_effects: Vec<String>,
    pub cluster: String,
    pub family: Family,
    /// Design columns (regressors or `fe[level]` dummies) to leave out.
    pub drop: Vec<String>,
}

impl RegressionSpec {
    pub fn new(family: Family, dependent: &str, regressors: &[&str], cluster: &str) -> Self {
        RegressionSpec {
            dependent: dependent.to_string(),
            regressors: regressors.iter().map(|s| s.to_string()).collect(),
            fixed_effects: Vec::new(),
            cluster: cluster.to_string(),
            family,
            drop: Vec::new(),
        }
    }

    pub fn with_fixed_effects(mut self, fe: &[&str]) -> Self {
        self.fixed_effects = fe.iter().map(|s| s.to_string()).collect();
        self
    }

    pub fn with_drop(mut self, drop: &[&str]) -> Self {
        self.drop = drop.iter().map(|s| s.to_string()).collect();
        self
    }
}

/// Dense design ready for fitting.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub x: Matrix,
    pub y: Vec<f64>,
    pub names: Vec<String>,
    /// Dense cluster index per row, numbered by sorted cluster code.
    pub cluster: Vec<usize>,
    pub n_clusters: usize,
    pub family: Family,
}

impl Design {
    pub fn n_obs(&self) -> usize {
        self.x.rows()
    }

    pub fn n_params(&self) -> usize {
        self.x.cols()
    }
}

fn integral_codes(name: &str, values: &[f64]) -> Result<Vec<i64>, EstimationError> {
    values
        .iter()
        .map(|&v| {
            if v.is_finite() && v == libm::trunc(v) && v.abs() < 9.0e15 {
                Ok(v as i64)
            } else {
                Err(EstimationError::NotCategorical(name.to_string()))
            }
        })
        .collect()
}

fn check_finite(name: &str, values: &[f64]) -> Result<(), EstimationError> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(row) => Err(EstimationError::NonFinite { column: name.to_string(), row }),
        None => Ok(()),
    }
}

fn check_response(family: Family, y: &[f64]) -> Result<(), EstimationError> {
    for (row, &value) in y.iter().enumerate() {
        let ok = match family {
            Family::Probit => value == 0.0 || value == 1.0,
            Family::Poisson => value.is_finite() && value >= 0.0 && value == libm::trunc(value),
        };
        if !ok {
            return Err(EstimationError::InvalidResponse { row, value });
        }
    }
    Ok(())
}

/// Builds the design for `spec`: regressors in the given order, then one
/// dummy per non-reference level of each fixed effect (the smallest code is
/// the reference), then the intercept.
///
/// A constant regressor, or any column that is a linear combination of the
/// intercept, the fixed effects and earlier regressors, is an error naming
/// the column unless the column is in the spec's drop list.
pub fn build_design(frame: &Frame, spec: &RegressionSpec) -> Result<Design, EstimationError> {
    let n = frame.n_rows();
    if n == 0 {
        return Err(EstimationError::NoRows);
    }
    if spec.regressors.iter().any(|r| *r == spec.dependent) {
        return Err(EstimationError::DependentInRegressors(spec.dependent.clone()));
    }

    let y = frame.column(&spec.dependent)?.to_vec();
    check_finite(&spec.dependent, &y)?;
    check_response(spec.family, &y)?;

    let codes = integral_codes(&spec.cluster, frame.column(&spec.cluster)?)?;
    let mut cluster_ids = BTreeMap::new();
    for &c in &codes {
        cluster_ids.insert(c, 0usize);
    }
    for (k, v) in cluster_ids.values_mut().enumerate() {
        *v = k;
    }
    let cluster: Vec<usize> = codes.iter().map(|c| cluster_ids[c]).collect();

    let mut known: Vec<String> = Vec::new();
    let mut regressors: Vec<(String, Vec<f64>)> = Vec::new();
    for name in &spec.regressors {
        let col = frame.column(name)?;
        known.push(name.clone());
        if spec.drop.contains(name) {
            continue;
        }
        check_finite(name, col)?;
        if col.iter().all(|&v| v == col[0]) {
            return Err(EstimationError::ConstantColumn(name.clone()));
        }
        regressors.push((name.clone(), col.to_vec()));
    }

    let mut dummies: Vec<(String, Vec<f64>)> = Vec::new();
    for fe in &spec.fixed_effects {
        let codes = integral_codes(fe, frame.column(fe)?)?;
        let mut levels: Vec<i64> = codes.clone();
        levels.sort_unstable();
        levels.dedup();
        for &level in levels.iter().skip(1) {
            let name = format!("{fe}[{level}]");
            known.push(name.clone());
            if spec.drop.contains(&name) {
                continue;
            }
            dummies.push((name, codes.iter().map(|&c| if c == level { 1.0 } else { 0.0 }).collect()));
        }
    }
    if let Some(unknown) = spec.drop.iter().find(|d| !known.contains(d)) {
        return Err(EstimationError::MissingColumn(unknown.clone()));
    }

    // Collinearity is checked with the intercept and fixed effects first so
    // that a regressor absorbed by them is the column that gets named.
    let intercept = (INTERCEPT.to_string(), vec![1.0; n]);
    {
        let mut order: Vec<&(String, Vec<f64>)> = Vec::with_capacity(regressors.len() + dummies.len() + 1);
        order.push(&intercept);
        order.extend(dummies.iter());
        order.extend(regressors.iter());
        let mut basis: Vec<Vec<f64>> = Vec::new();
        for (name, col) in order {
            let norm0 = dot(col, col);
            let mut r = col.clone();
            // two passes of modified Gram-Schmidt for stability
            for _ in 0..2 {
                for q in &basis {
                    let c = dot(q, &r);
                    for (ri, qi) in r.iter_mut().zip(q) {
                        *ri -= c * qi;
                    }
                }
            }
            let norm = dot(&r, &r);
            if !(norm > COLLINEAR_TOL * norm0) {
                return Err(EstimationError::Collinear(name.clone()));
            }
            let s = 1.0 / libm::sqrt(norm);
            r.iter_mut().for_each(|v| *v *= s);
            basis.push(r);
        }
    }

    let mut columns = regressors;
    columns.extend(dummies);
    columns.push(intercept);
    let k = columns.len();
    let mut x = Matrix::zeros(n, k);
    for (j, (_, col)) in columns.iter().enumerate() {
        for (i, &v) in col.iter().enumerate() {
            x[(i, j)] = v;
        }
    }
    Ok(Design {
        x,
        y,
        names: columns.into_iter().map(|(name, _)| name).collect(),
        cluster,
        n_clusters: cluster_ids.len(),
        family: spec.family,
    })
}
