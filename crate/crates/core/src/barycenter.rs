//! Right mean of the log-determinant α-divergence,
//! `argmin_X φ(X) = Σᵢ D_α(Aᵢ | X)`, which coincides with `G_t` at `t = (1−α)/2`
//! and uniform weights.

use nalgebra::DMatrix;

use crate::error::{check_dims, Error, Result};
use crate::fixed_point::{g_mean, SolveReport, SolverOptions};
use crate::metrics::{logdet_div, Alpha};
use crate::spd::{symmetrize, SpdMatrix};
use crate::two_means::MatrixTuple;

/// Gradient norm accepted per matrix at a certified right mean.
pub const GRADIENT_LIMIT: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct BarycenterProblem {
    alpha: Alpha,
    tuple: MatrixTuple,
}

impl BarycenterProblem {
    pub fn new(alpha: Alpha, matrices: Vec<SpdMatrix>) -> Result<Self> {
        if alpha.value().abs() >= 1.0 {
            return Err(Error::ParameterOutOfRange {
                name: "alpha",
                value: alpha.value(),
                expected: "(-1, 1)",
            });
        }
        Ok(Self {
            alpha,
            tuple: MatrixTuple::uniform(matrices)?,
        })
    }

    pub fn alpha(&self) -> Alpha {
        self.alpha
    }

    pub fn matrices(&self) -> &[SpdMatrix] {
        self.tuple.matrices()
    }

    pub fn len(&self) -> usize {
        self.tuple.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuple.is_empty()
    }

    /// The `G_t` parameter `t = (1−α)/2` of the equivalent fixed-point problem.
    pub fn t(&self) -> f64 {
        0.5 * (1.0 - self.alpha.value())
    }

    /// The matrices with uniform weights.
    pub fn tuple(&self) -> &MatrixTuple {
        &self.tuple
    }
}

/// `∇φ(X) = (2/(1−α)) [Σᵢ ((1−α)/2·Aᵢ + (1+α)/2·X)⁻¹ − n X⁻¹]`.
pub fn phi_gradient(p: &BarycenterProblem, x: &SpdMatrix) -> Result<DMatrix<f64>> {
    check_dims(p.tuple.dim(), x.dim())?;
    let al = p.alpha.value();
    let (wa, wx) = (0.5 * (1.0 - al), 0.5 * (1.0 + al));
    let n = x.dim();
    let mut acc = DMatrix::zeros(n, n);
    for a in p.matrices() {
        let m = SpdMatrix::from_trusted(a.matrix() * wa + x.matrix() * wx);
        acc += m.inverse()?.matrix();
    }
    acc -= x.inverse()?.matrix() * p.len() as f64;
    Ok(symmetrize(acc * (2.0 / (1.0 - al))))
}

/// `φ(X) = Σᵢ D_α(Aᵢ | X)`.
pub fn phi_value(p: &BarycenterProblem, x: &SpdMatrix) -> Result<f64> {
    check_dims(p.tuple.dim(), x.dim())?;
    p.matrices()
        .iter()
        .map(|a| logdet_div(p.alpha, a, x).map(|d| d.value))
        .sum()
}

/// Right mean computed as `G_{(1−α)/2}` with uniform weights and certified by
/// `‖∇φ‖_F ≤ 1e-8 · n`.
pub fn right_mean(p: &BarycenterProblem, opts: &SolverOptions) -> Result<SolveReport> {
    let report = g_mean(p.t(), &p.tuple, opts)?;
    let grad = phi_gradient(p, &report.solution)?.norm();
    let limit = GRADIENT_LIMIT * p.len() as f64;
    if !(grad <= limit) {
        return Err(Error::CertificateFailed {
            residual: grad,
            limit,
        });
    }
    Ok(report)
}
