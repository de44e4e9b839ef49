//! `t`-sweeps of `G_t` between the arithmetic (`t = 0`) and harmonic (`t = 1`) means.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fixed_point::{g_mean, SolverOptions};
use crate::metrics::thompson;
use crate::two_means::{arithmetic_mean, harmonic_mean, MatrixTuple};

/// Relative slack allowed when checking that eigenvalue columns do not increase.
const MONOTONE_TOL: f64 = 1e-9;

/// Parses `a,b,c` or `start:stop:count` into a sorted, deduplicated grid in `[0, 1]`.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let bad = |what: &str| Error::Parse(format!("grid '{spec}': {what}"));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad(&format!("'{}' is not a number", s.trim())));
    let mut grid = if let Some((start, rest)) = spec.split_once(':') {
        let (stop, count) = rest.split_once(':').ok_or_else(|| bad("expected start:stop:count"))?;
        let (start, stop) = (num(start)?, num(stop)?);
        let count: usize = count.trim().parse().map_err(|_| bad("count must be a positive integer"))?;
        match count {
            0 => return Err(bad("count must be a positive integer")),
            1 => vec![start],
            _ => (0..count)
                .map(|i| start + (stop - start) * i as f64 / (count - 1) as f64)
                .collect(),
        }
    } else {
        spec.split(',').map(num).collect::<Result<Vec<_>>>()?
    };
    if let Some(&t) = grid.iter().find(|t| !(0.0..=1.0).contains(*t)) {
        return Err(Error::ParameterOutOfRange {
            name: "t",
            value: t,
            expected: "[0, 1]",
        });
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    Ok(grid)
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub t: f64,
    pub max_eigenvalue: Option<f64>,
    pub min_eigenvalue: Option<f64>,
    pub distance_to_arithmetic: Option<f64>,
    pub distance_to_harmonic: Option<f64>,
    pub iterations: Option<usize>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.error.is_none())
    }
}

/// Solves `G_t` at every grid point (in parallel), then checks that both
/// eigenvalue columns are weakly decreasing in `t`; a row that breaks this is
/// annotated with an error.
pub fn sweep(tuple: &MatrixTuple, grid: &[f64], opts: &SolverOptions) -> Result<SweepReport> {
    let arith = arithmetic_mean(tuple);
    let harm = harmonic_mean(tuple)?;
    let mut rows: Vec<SweepRow> = grid
        .par_iter()
        .map(|&t| {
            let solved = (|| {
                let r = g_mean(t, tuple, opts)?;
                let x = &r.solution;
                Ok::<_, Error>((
                    x.max_eigenvalue()?,
                    x.min_eigenvalue()?,
                    thompson(x, &arith)?,
                    thompson(x, &harm)?,
                    r.iterations,
                ))
            })();
            match solved {
                Ok((hi, lo, da, dh, it)) => SweepRow {
                    t,
                    max_eigenvalue: Some(hi),
                    min_eigenvalue: Some(lo),
                    distance_to_arithmetic: Some(da),
                    distance_to_harmonic: Some(dh),
                    iterations: Some(it),
                    error: None,
                },
                Err(e) => SweepRow {
                    t,
                    max_eigenvalue: None,
                    min_eigenvalue: None,
                    distance_to_arithmetic: None,
                    distance_to_harmonic: None,
                    iterations: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    rows.sort_by(|a, b| a.t.total_cmp(&b.t));

    let mut prev: Option<(f64, f64)> = None;
    for row in &mut rows {
        let (Some(hi), Some(lo)) = (row.max_eigenvalue, row.min_eigenvalue) else {
            continue;
        };
        if let Some((phi, plo)) = prev {
            if hi > phi * (1.0 + MONOTONE_TOL) || lo > plo * (1.0 + MONOTONE_TOL) {
                row.error = Some(format!(
                    "eigenvalues increased in t: max {phi} -> {hi}, min {plo} -> {lo}"
                ));
            }
        }
        prev = Some((hi, lo));
    }
    Ok(SweepReport { rows })
}
