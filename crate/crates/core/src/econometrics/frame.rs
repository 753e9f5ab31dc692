use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::EstimationError;

/// Named numeric columns of equal length.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Frame {
    n_rows: usize,
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
}

impl Frame {
    pub fn new() -> Self {
        Frame::default()
    }

    pub fn with_column(mut self, name: &str, values: Vec<f64>) -> Result<Self, EstimationError> {
        self.push(name, values)?;
        Ok(self)
    }

    pub fn push(&mut self, name: &str, values: Vec<f64>) -> Result<(), EstimationError> {
        if self.names.iter().any(|n| n == name) {
            return Err(EstimationError::DuplicateColumn(name.to_string()));
        }
        if self.columns.is_empty() {
            self.n_rows = values.len();
        } else if values.len() != self.n_rows {
            return Err(EstimationError::LengthMismatch {
                column: name.to_string(),
                expected: self.n_rows,
                found: values.len(),
            });
        }
        self.names.push(name.to_string());
        self.columns.push(values);
        Ok(())
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn get(&self, name: &str) -> Option<&[f64]> {
        self.names.iter().position(|n| n == name).map(|i| self.columns[i].as_slice())
    }

    pub fn column(&self, name: &str) -> Result<&[f64], EstimationError> {
        self.get(name).ok_or_else(|| EstimationError::MissingColumn(name.to_string()))
    }

    /// New frame holding the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Frame {
        Frame {
            n_rows: rows.len(),
            names: self.names.clone(),
            columns: self.columns.iter().map(|c| rows.iter().map(|&r| c[r]).collect()).collect(),
        }
    }
}
