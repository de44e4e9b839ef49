use nalgebra::DMatrix;

use super::g_mean::g_mean_map;
use super::{g_mean, SolverOptions};
use crate::error::{check_dims, Error, Result};
use crate::metrics::thompson;
use crate::spd::{exp_symmetric, SpdMatrix};
use crate::two_means::{MatrixTuple, WeightVector};

/// Relative tolerance on the proportionality `(t − w₁)A = (w₂ − t)B`.
const PROPORTIONALITY_TOL: f64 = 1e-10;

/// Closed form of `G_t((w₁, w₂); A, B)` when `(t − w₁)A = (w₂ − t)B` and `t` lies
/// strictly between `w₁` and `w₂`: the solution is `√(t(t−w₁)/((1−t)(w₂−t))) · A`.
pub fn closed_form_two(t: f64, w1: f64, w2: f64, a: &SpdMatrix, b: &SpdMatrix) -> Result<SpdMatrix> {
    check_dims(a.dim(), b.dim())?;
    if !(w1 > 0.0 && w2 > 0.0 && (w1 + w2 - 1.0).abs() <= 1e-12) {
        return Err(Error::PreconditionViolated(format!(
            "weights ({w1}, {w2}) must be positive and sum to one"
        )));
    }
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::ParameterOutOfRange {
            name: "t",
            value: t,
            expected: "(0, 1)",
        });
    }
    let between = (w1 < t && t < w2) || (w2 < t && t < w1);
    if !between {
        return Err(Error::PreconditionViolated(format!(
            "t = {t} must lie strictly between w1 = {w1} and w2 = {w2}"
        )));
    }
    let lhs = a.matrix() * (t - w1);
    let rhs = b.matrix() * (w2 - t);
    let scale = lhs.norm().max(rhs.norm());
    if (&lhs - &rhs).norm() > PROPORTIONALITY_TOL * scale {
        return Err(Error::PreconditionViolated(
            "(t - w1) A = (w2 - t) B does not hold".into(),
        ));
    }
    let coeff = (t * (t - w1) / ((1.0 - t) * (w2 - t))).sqrt();
    a.scale(coeff)
}

/// Evaluates the Banach contraction bound for `f(X) = [Σ wᵢ((1−t)X + tAᵢ)⁻¹]⁻¹`.
///
/// Returns `(d(f(X), f(Y)), maxᵢ (1−t)α/((1−t)α + tβᵢ) · d(X, Y))` where
/// `α = max(λ₁(X), λ₁(Y))` and `βᵢ = λ_m(Aᵢ)`.
pub fn contraction_check(
    t: f64,
    tuple: &MatrixTuple,
    x: &SpdMatrix,
    y: &SpdMatrix,
) -> Result<(f64, f64)> {
    check_dims(tuple.dim(), x.dim())?;
    check_dims(tuple.dim(), y.dim())?;
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::ParameterOutOfRange {
            name: "t",
            value: t,
            expected: "(0, 1]",
        });
    }
    let lhs = thompson(&g_mean_map(t, tuple, x)?, &g_mean_map(t, tuple, y)?)?;
    let alpha = x.max_eigenvalue()?.max(y.max_eigenvalue()?);
    let factor = super::g_mean::contraction_factor(t, tuple, alpha)?;
    Ok((lhs, factor * thompson(x, y)?))
}

/// Log-Euclidean mean `exp(Σ wᵢ log Aᵢ)`.
pub fn log_euclidean_mean(tuple: &MatrixTuple) -> Result<SpdMatrix> {
    let n = tuple.dim();
    let mut acc = DMatrix::zeros(n, n);
    for (w, a) in tuple.iter() {
        acc += a.log()? * w;
    }
    exp_symmetric(&acc)
}

/// Thompson distances `d(G_t(ω; 𝔸^p)^{1/p}, exp(Σ wᵢ log Aᵢ))` for each `p`.
pub fn lie_trotter_limit(
    tuple: &MatrixTuple,
    t: f64,
    p_grid: &[f64],
    opts: &SolverOptions,
) -> Result<Vec<(f64, f64)>> {
    let target = log_euclidean_mean(tuple)?;
    p_grid
        .iter()
        .map(|&p| {
            if !(p > 0.0 && p <= 1.0) {
                return Err(Error::ParameterOutOfRange {
                    name: "p",
                    value: p,
                    expected: "(0, 1]",
                });
            }
            let g = g_mean(t, &tuple.powered(p)?, opts)?.solution;
            Ok((p, thompson(&g.powf(1.0 / p)?, &target)?))
        })
        .collect()
}

/// Builds a two-matrix tuple for the given weights (helper for callers of
/// [`closed_form_two`] who want to cross-check against the solver).
pub fn two_tuple(w1: f64, w2: f64, a: &SpdMatrix, b: &SpdMatrix) -> Result<MatrixTuple> {
    MatrixTuple::new(vec![a.clone(), b.clone()], WeightVector::new(vec![w1, w2])?)
}
