//! Single-letter distortion tables.

use serde::{Deserialize, Serialize};

use crate::error::{IrdfError, Result};
use crate::joint::JointRealization;
use crate::logspace::decode;

/// Per-letter distortion `ρ[x][y]`, nonnegative and finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct DistortionSpec {
    table: Vec<Vec<f64>>,
}

impl DistortionSpec {
    pub fn new(table: Vec<Vec<f64>>) -> Result<Self> {
        let cols = table.first().map(Vec::len).unwrap_or(0);
        if table.is_empty() || cols == 0 {
            return Err(IrdfError::invalid("rho", "table must be nonempty"));
        }
        for (x, row) in table.iter().enumerate() {
            if row.len() != cols {
                return Err(IrdfError::invalid(
                    "rho",
                    format!("row {x} has {} entries, expected {cols}", row.len()),
                ));
            }
            if let Some(v) = row.iter().find(|v| !v.is_finite() || **v < 0.0) {
                return Err(IrdfError::invalid(
                    "rho",
                    format!("entry {v} in row {x} is negative or not finite"),
                ));
            }
        }
        Ok(DistortionSpec { table })
    }

    pub fn hamming(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(IrdfError::invalid("rho", "hamming size must be at least 1"));
        }
        DistortionSpec::new(
            (0..size)
                .map(|x| (0..size).map(|y| if x == y { 0.0 } else { 1.0 }).collect())
                .collect(),
        )
    }

    #[inline]
    pub fn x_size(&self) -> usize {
        self.table.len()
    }

    #[inline]
    pub fn y_size(&self) -> usize {
        self.table[0].len()
    }

    #[inline]
    pub fn rho(&self, x: usize, y: usize) -> f64 {
        self.table[x][y]
    }

    pub fn table(&self) -> &[Vec<f64>] {
        &self.table
    }

    pub fn min(&self) -> f64 {
        self.table
            .iter()
            .flatten()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.table.iter().flatten().copied().fold(0.0, f64::max)
    }
}

impl TryFrom<Vec<Vec<f64>>> for DistortionSpec {
    type Error = IrdfError;
    fn try_from(table: Vec<Vec<f64>>) -> Result<Self> {
        DistortionSpec::new(table)
    }
}

impl From<DistortionSpec> for Vec<Vec<f64>> {
    fn from(d: DistortionSpec) -> Self {
        d.table
    }
}

/// JSON form: `{"rho": [[...]]}` or `{"preset": "hamming"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum DistortionDoc {
    Table { rho: Vec<Vec<f64>> },
    Preset { preset: Preset },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Hamming,
}

impl DistortionDoc {
    /// Builds the table; presets take their size from the source alphabet.
    pub fn resolve(&self, x_size: usize) -> Result<DistortionSpec> {
        let spec = match self {
            DistortionDoc::Table { rho } => DistortionSpec::new(rho.clone())?,
            DistortionDoc::Preset {
                preset: Preset::Hamming,
            } => DistortionSpec::hamming(x_size)?,
        };
        if spec.x_size() != x_size {
            return Err(IrdfError::invalid(
                "rho",
                format!(
                    "has {} rows but the source alphabet has {x_size} symbols",
                    spec.x_size()
                ),
            ));
        }
        Ok(spec)
    }
}

fn check_shape(joint: &JointRealization, spec: &DistortionSpec) -> Result<()> {
    if joint.x_size() != spec.x_size() || joint.y_size() != spec.y_size() {
        return Err(IrdfError::ShapeMismatch(format!(
            "joint is over {}x{} symbols, distortion table is {}x{}",
            joint.x_size(),
            joint.y_size(),
            spec.x_size(),
            spec.y_size()
        )));
    }
    Ok(())
}

/// Per-sample average distortion `(1/n) E Σ_i ρ(X_i, Y_i)`.
pub fn expected_distortion(joint: &JointRealization, spec: &DistortionSpec) -> Result<f64> {
    check_shape(joint, spec)?;
    let n = joint.horizon();
    let (xs, ys) = (joint.x_size(), joint.y_size());
    let y_cells = joint.y_cells();
    let mut total = 0.0;
    for (cell, p) in joint.probs().enumerate() {
        if p == 0.0 {
            continue;
        }
        let x = decode(cell / y_cells, xs, n);
        let y = decode(cell % y_cells, ys, n);
        let d: f64 = x.iter().zip(&y).map(|(&a, &b)| spec.rho(a, b)).sum();
        total += p * d;
    }
    Ok(total / n as f64)
}
