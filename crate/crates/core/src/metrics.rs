//! Distances and divergences on the SPD cone.
//!
//! * Thompson metric `d(A,B) = ‖log(A^{-1/2} B A^{-1/2})‖` (spectral norm).
//! * Riemannian trace distance, the Frobenius norm of the same logarithm.
//! * Bures-Wasserstein distance `[tr(A + B − 2(A^{1/2} B A^{1/2})^{1/2})]^{1/2}`.
//! * Log-determinant α-divergence `D_α(A|B)` for `α ∈ [−1, 1]` and the Stein metric
//!   `d_S = √D₀`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{check_dims, Error, Result};
use crate::spd::{relative_eigenvalues, symmetrize, SpdMatrix};

/// Values in `[−DIVERGENCE_CLAMP, 0)` are treated as round-off and clamped to zero.
pub const DIVERGENCE_CLAMP: f64 = 1e-12;
/// Most negative trace argument tolerated by the Bures-Wasserstein distance.
pub const BW_TRACE_FLOOR: f64 = -1e-10;

/// Parameter of the log-determinant divergence family, `|α| ≤ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Alpha(f64);

impl Alpha {
    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && value.abs() <= 1.0 {
            Ok(Self(value))
        } else {
            Err(Error::ParameterOutOfRange {
                name: "alpha",
                value,
                expected: "[-1, 1]",
            })
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// True at the Stein-loss endpoints `α = ±1`.
    pub fn is_endpoint(self) -> bool {
        self.0.abs() == 1.0
    }
}

impl TryFrom<f64> for Alpha {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Alpha::new(v)
    }
}

impl From<Alpha> for f64 {
    fn from(a: Alpha) -> f64 {
        a.0
    }
}

/// A divergence value together with the α that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DivergenceValue {
    pub value: f64,
    pub alpha: Alpha,
}

impl DivergenceValue {
    fn checked(value: f64, alpha: Alpha) -> Result<Self> {
        if value.is_nan() {
            return Err(Error::NonFinite);
        }
        if value < -DIVERGENCE_CLAMP {
            return Err(Error::NegativeDivergence(value));
        }
        Ok(Self {
            value: value.max(0.0),
            alpha,
        })
    }
}

pub fn thompson(a: &SpdMatrix, b: &SpdMatrix) -> Result<f64> {
    check_dims(a.dim(), b.dim())?;
    if a == b {
        return Ok(0.0);
    }
    let mu = relative_eigenvalues(a, b)?;
    Ok(mu.iter().map(|m| m.ln().abs()).fold(0.0, f64::max))
}

pub fn riemannian(a: &SpdMatrix, b: &SpdMatrix) -> Result<f64> {
    check_dims(a.dim(), b.dim())?;
    let mu = relative_eigenvalues(a, b)?;
    Ok(mu.iter().map(|m| m.ln().powi(2)).sum::<f64>().sqrt())
}

pub fn bures_wasserstein(a: &SpdMatrix, b: &SpdMatrix) -> Result<f64> {
    check_dims(a.dim(), b.dim())?;
    let ra = a.sqrt()?;
    let inner = SpdMatrix::from_trusted(ra.matrix() * b.matrix() * ra.matrix());
    let cross: f64 = inner.eigenvalues()?.iter().map(|l| l.max(0.0).sqrt()).sum();
    let arg = a.trace() + b.trace() - 2.0 * cross;
    if arg < BW_TRACE_FLOOR {
        return Err(Error::NegativeTrace(arg));
    }
    Ok(arg.max(0.0).sqrt())
}

/// Log-determinant α-divergence. Interior α uses the determinant ratio with
/// weights `(1∓α)/2`; `α = ±1` dispatch to the Stein-loss closed forms.
pub fn logdet_div(alpha: Alpha, a: &SpdMatrix, b: &SpdMatrix) -> Result<DivergenceValue> {
    check_dims(a.dim(), b.dim())?;
    if a == b {
        return Ok(DivergenceValue { value: 0.0, alpha });
    }
    let al = alpha.value();
    let value = if al == -1.0 {
        stein_loss(a, b)?
    } else if al == 1.0 {
        stein_loss(b, a)?
    } else {
        let wa = 0.5 * (1.0 - al);
        let wb = 0.5 * (1.0 + al);
        let mix = SpdMatrix::from_trusted(a.matrix() * wa + b.matrix() * wb);
        let bracket = mix.logdet()? - wa * a.logdet()? - wb * b.logdet()?;
        4.0 / (1.0 - al * al) * bracket
    };
    DivergenceValue::checked(value, alpha)
}

/// `tr(A⁻¹B − I) − log det(A⁻¹B)`.
fn stein_loss(a: &SpdMatrix, b: &SpdMatrix) -> Result<f64> {
    let ainv = a.inverse()?;
    let tr = (ainv.matrix() * b.matrix()).trace() - a.dim() as f64;
    Ok(tr - (b.logdet()? - a.logdet()?))
}

pub fn stein_metric(a: &SpdMatrix, b: &SpdMatrix) -> Result<f64> {
    Ok(logdet_div(Alpha(0.0), a, b)?.value.sqrt())
}

/// Finite-difference probe of `B ↦ D_α(A|B)` at `B = A` along one direction.
#[derive(Debug, Clone, Serialize)]
pub struct QdivProbe {
    pub first_derivative: f64,
    pub second_derivative: f64,
    /// `tr((A^{-1/2} X A^{-1/2})²)`, the exact second derivative on the diagonal.
    pub analytic_second: f64,
    pub first_ok: bool,
    pub second_ok: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct QdivReport {
    pub alpha: f64,
    pub step: f64,
    pub probes: Vec<QdivProbe>,
}

impl QdivReport {
    pub fn passed(&self) -> bool {
        self.probes.iter().all(|p| p.first_ok && p.second_ok)
    }
}

/// Relative threshold on the first central difference, scaled by `1 + |D″|`.
pub const QDIV_FIRST_TOL: f64 = 1e-6;
/// Lower bound accepted for the second central difference.
pub const QDIV_SECOND_FLOOR: f64 = -1e-8;

/// Default finite-difference step `1e-4 · (1 + ‖A‖_F)`.
pub fn qdiv_default_step(a: &SpdMatrix) -> f64 {
    1e-4 * (1.0 + a.matrix().norm())
}

/// Checks the first- and second-order quantum-divergence conditions of `D_α` at
/// `B = A` by central differences along each direction.
pub fn qdiv_check(
    alpha: Alpha,
    a: &SpdMatrix,
    directions: &[DMatrix<f64>],
    h: f64,
) -> Result<QdivReport> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::ParameterOutOfRange {
            name: "h",
            value: h,
            expected: "positive finite",
        });
    }
    let a_inv = a.inverse()?;
    let mut probes = Vec::with_capacity(directions.len());
    for x in directions {
        if x.nrows() != a.dim() || x.ncols() != a.dim() {
            return Err(Error::DimensionMismatch {
                expected: a.dim(),
                found: x.nrows(),
            });
        }
        let x = symmetrize(x.clone());
        let shifted = |sign: f64| -> Result<SpdMatrix> {
            SpdMatrix::new(a.matrix() + &x * (sign * h)).map_err(|_| Error::StepTooLarge)
        };
        let plus = shifted(1.0)?;
        let minus = shifted(-1.0)?;
        let d_plus = logdet_div(alpha, a, &plus)?.value;
        let d_minus = logdet_div(alpha, a, &minus)?.value;
        let d_zero = logdet_div(alpha, a, a)?.value;
        let first = (d_plus - d_minus) / (2.0 * h);
        let second = (d_plus - 2.0 * d_zero + d_minus) / (h * h);
        let ax = a_inv.matrix() * &x;
        let analytic_second = (&ax * &ax).trace();
        probes.push(QdivProbe {
            first_derivative: first,
            second_derivative: second,
            analytic_second,
            first_ok: first.abs() <= QDIV_FIRST_TOL * (1.0 + second.abs()),
            second_ok: second >= QDIV_SECOND_FLOOR,
        });
    }
    Ok(QdivReport {
        alpha: alpha.value(),
        step: h,
        probes,
    })
}
