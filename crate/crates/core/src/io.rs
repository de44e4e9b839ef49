//! JSON problem and result documents.
//!
//! Floats are written in the shortest form that parses back to the same bits,
//! so a problem file survives a write/read cycle unchanged.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fixed_point::{SolveMethod, SolveReport};
use crate::spd::SpdMatrix;
use crate::two_means::{MatrixTuple, WeightVector};

/// Largest `|aᵢⱼ − aⱼᵢ|` accepted in an input matrix, relative to `max(1, |aᵢⱼ|)`.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Input document: a weighted tuple plus optional mean parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub dimension: usize,
    /// Each matrix as a list of rows.
    pub matrices: Vec<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
}

impl ProblemFile {
    pub fn from_tuple(tuple: &MatrixTuple) -> Self {
        Self {
            dimension: tuple.dim(),
            matrices: tuple.matrices().iter().map(SpdMatrix::to_rows).collect(),
            weights: (!tuple.weights().is_uniform()).then(|| tuple.weights().as_slice().to_vec()),
            t: None,
            alpha: None,
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json() + "\n")?;
        Ok(())
    }

    /// Validates shapes and symmetry and builds the weighted tuple.
    pub fn to_tuple(&self) -> Result<MatrixTuple> {
        if self.matrices.is_empty() {
            return Err(Error::EmptyTuple);
        }
        let n = self.dimension;
        let mut ms = Vec::with_capacity(self.matrices.len());
        for (k, rows) in self.matrices.iter().enumerate() {
            if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                return Err(Error::Parse(format!("matrix {k} is not {n}x{n}")));
            }
            for i in 0..n {
                for j in 0..i {
                    let (a, b) = (rows[i][j], rows[j][i]);
                    if (a - b).abs() > SYMMETRY_TOL * a.abs().max(b.abs()).max(1.0) {
                        return Err(Error::Parse(format!(
                            "matrix {k} is not symmetric at ({i}, {j}): {a} vs {b}"
                        )));
                    }
                }
            }
            ms.push(SpdMatrix::from_rows(rows)?);
        }
        let weights = match &self.weights {
            Some(w) => WeightVector::new(w.clone())?,
            None => WeightVector::uniform(ms.len())?,
        };
        MatrixTuple::new(ms, weights)
    }
}

/// Mean parameters echoed into a result.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Parameters {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
}

/// Output document of a mean computation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub kind: String,
    pub parameters: Parameters,
    pub solution: Vec<Vec<f64>>,
    pub iterations: usize,
    pub residual: f64,
    pub fixed_point_residual: f64,
    pub contraction_estimate: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<f64>,
    pub method: SolveMethod,
    pub wall_time_seconds: f64,
}

impl ResultRecord {
    pub fn new(kind: &str, parameters: Parameters, report: &SolveReport, wall_time_seconds: f64) -> Self {
        Self {
            kind: kind.to_owned(),
            parameters,
            solution: report.solution.to_rows(),
            iterations: report.iterations,
            residual: report.residual,
            fixed_point_residual: report.fixed_point_residual,
            contraction_estimate: report.contraction_estimate,
            certificate: report.certificate,
            method: report.method,
            wall_time_seconds,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }

    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Equality ignoring the wall time.
    pub fn same_outcome(&self, other: &Self) -> bool {
        Self {
            wall_time_seconds: 0.0,
            ..self.clone()
        } == Self {
            wall_time_seconds: 0.0,
            ..other.clone()
        }
    }
}
