use nalgebra::DMatrix;

use super::{check_unit_interval, picard, SolveMethod, SolveReport, SolverOptions};
use crate::error::{check_dims, Error, Result};
use crate::spd::SpdMatrix;
use crate::two_means::{arithmetic_mean, harmonic_mean, MatrixTuple};

/// Largest accepted resolvent residual of a returned `G_t` solution.
pub const CERTIFICATE_LIMIT: f64 = 1e-8;

/// `f(X) = [Σ wᵢ((1−t)X + tAᵢ)⁻¹]⁻¹`, the map whose fixed point is `G_t`.
pub fn g_mean_map(t: f64, tuple: &MatrixTuple, x: &SpdMatrix) -> Result<SpdMatrix> {
    check_dims(tuple.dim(), x.dim())?;
    let n = tuple.dim();
    let mut acc = DMatrix::zeros(n, n);
    for (w, a) in tuple.iter() {
        let m = SpdMatrix::from_trusted(x.matrix() * (1.0 - t) + a.matrix() * t);
        acc += m.inverse()?.matrix() * w;
    }
    SpdMatrix::from_trusted(acc).inverse()
}

/// `h(X) = Σ wᵢ(tX⁻¹ + (1−t)Aᵢ⁻¹)⁻¹`, which has the same fixed point as
/// [`g_mean_map`] for `t ∈ (0, 1)`: `AᵢNᵢ⁻¹X = ((1−t)Aᵢ⁻¹ + tX⁻¹)⁻¹` with
/// `Nᵢ = (1−t)X + tAᵢ`, and `Σ wᵢ AᵢNᵢ⁻¹ = I` is equivalent to `Σ wᵢ XNᵢ⁻¹ = I`.
/// Its contraction factor scales with `t` instead of `1 − t`.
fn dual_map(t: f64, weights: &[f64], inverses: &[SpdMatrix], x: &SpdMatrix) -> Result<SpdMatrix> {
    let n = x.dim();
    let x_inv = x.inverse()?;
    let mut acc = DMatrix::zeros(n, n);
    for (w, a_inv) in weights.iter().zip(inverses) {
        let m = SpdMatrix::from_trusted(x_inv.matrix() * t + a_inv.matrix() * (1.0 - t));
        acc += m.inverse()?.matrix() * *w;
    }
    Ok(SpdMatrix::from_trusted(acc))
}

/// `‖Σ wᵢ[(1−t)I + tX^{-1/2}AᵢX^{-1/2}]⁻¹ − I‖_F`, zero exactly at `X = G_t(ω; 𝔸)`.
pub fn resolvent_residual(x: &SpdMatrix, t: f64, tuple: &MatrixTuple) -> Result<f64> {
    check_dims(tuple.dim(), x.dim())?;
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::ParameterOutOfRange {
            name: "t",
            value: t,
            expected: "(0, 1]",
        });
    }
    let n = x.dim();
    let x_is = x.inv_sqrt()?;
    let id = DMatrix::<f64>::identity(n, n);
    let mut acc = DMatrix::zeros(n, n);
    for (w, a) in tuple.iter() {
        let b = x_is.matrix() * a.matrix() * x_is.matrix();
        let m = SpdMatrix::from_trusted(&id * (1.0 - t) + b * t);
        acc += m.inverse()?.matrix() * w;
    }
    Ok((acc - id).norm())
}

/// Bound on the Thompson Lipschitz constant of [`g_mean_map`] around `x`:
/// `maxᵢ (1−t)α / ((1−t)α + tβᵢ)` with `α = λ₁(X)`, `βᵢ = λ_m(Aᵢ)`.
pub(crate) fn contraction_factor(t: f64, tuple: &MatrixTuple, alpha: f64) -> Result<f64> {
    if t >= 1.0 {
        return Ok(0.0);
    }
    let mut worst: f64 = 0.0;
    for a in tuple.matrices() {
        let beta = a.min_eigenvalue()?;
        let num = (1.0 - t) * alpha;
        worst = worst.max(num / (num + t * beta));
    }
    Ok(worst)
}

/// `G_t(ω; 𝔸)`.
///
/// * `t = 1` returns the harmonic mean, `t = 0` the arithmetic mean (the limit
///   `t → 0⁺`, flagged as [`SolveMethod::ArithmeticConvention`]).
/// * Single-matrix and constant tuples return the matrix itself.
/// * Otherwise the fixed point is found by Picard iteration: the map `f` for
///   `t ≥ 1/2`, the dual map `h` for `t < 1/2`, where `f` contracts slowly.
///
/// Every iterated solution is certified by [`resolvent_residual`] `≤ 1e-8`.
pub fn g_mean(t: f64, tuple: &MatrixTuple, opts: &SolverOptions) -> Result<SolveReport> {
    check_unit_interval("t", t)?;
    opts.validate()?;
    if t == 0.0 {
        return Ok(SolveReport::direct(
            arithmetic_mean(tuple),
            SolveMethod::ArithmeticConvention,
        ));
    }
    if tuple.len() == 1 || tuple.is_constant() {
        let a = tuple.matrices()[0].clone();
        let mut report = SolveReport::direct(a.clone(), SolveMethod::Direct);
        report.contraction_estimate = contraction_factor(t, tuple, a.max_eigenvalue()?)?;
        return Ok(report);
    }
    if t == 1.0 {
        return Ok(SolveReport::direct(harmonic_mean(tuple)?, SolveMethod::Direct));
    }

    let start = opts.start(tuple)?;
    let it = if t >= 0.5 {
        picard(start, opts, SolveMethod::ResolventPrimal, |x| {
            g_mean_map(t, tuple, x)
        })
        .map(|it| (it, SolveMethod::ResolventPrimal))
    } else {
        let weights = tuple.weights().as_slice();
        let inverses = tuple
            .matrices()
            .iter()
            .map(SpdMatrix::inverse)
            .collect::<Result<Vec<_>>>()?;
        picard(start, opts, SolveMethod::ResolventDual, |x| {
            dual_map(t, weights, &inverses, x)
        })
        .map(|it| (it, SolveMethod::ResolventDual))
    };
    let (it, method) = it.map_err(|e| annotate_best(e, t, tuple))?;

    let x = it.solution;
    let fx = g_mean_map(t, tuple, &x)?;
    let fixed_point_residual = (x.matrix() - fx.matrix()).norm();
    let certificate = resolvent_residual(&x, t, tuple)?;
    if !(certificate <= CERTIFICATE_LIMIT) {
        return Err(Error::CertificateFailed {
            residual: certificate,
            limit: CERTIFICATE_LIMIT,
        });
    }
    let contraction_estimate = contraction_factor(t, tuple, x.max_eigenvalue()?)?;
    Ok(SolveReport {
        solution: x,
        iterations: it.iterations,
        residual: it.residual,
        fixed_point_residual,
        contraction_estimate,
        certificate: Some(certificate),
        method,
    })
}

/// Fills in the diagnostics of the best iterate carried by `MaxIterExceeded`.
fn annotate_best(err: Error, t: f64, tuple: &MatrixTuple) -> Error {
    match err {
        Error::MaxIterExceeded { mut best } => {
            if let Ok(fx) = g_mean_map(t, tuple, &best.solution) {
                best.fixed_point_residual = (best.solution.matrix() - fx.matrix()).norm();
            }
            best.certificate = resolvent_residual(&best.solution, t, tuple).ok();
            if let Ok(alpha) = best.solution.max_eigenvalue() {
                best.contraction_estimate =
                    contraction_factor(t, tuple, alpha).unwrap_or(f64::NAN);
            }
            Error::MaxIterExceeded { best }
        }
        other => other,
    }
}
