//! Reference means used for comparison: matrix power mean, Cartan (Karcher) mean,
//! Wasserstein mean and Rényi power mean.

use nalgebra::DMatrix;

use super::{picard, SolveMethod, SolveReport, SolverOptions};
use crate::error::{check_dims, Error, Result};
use crate::metrics::thompson;
use crate::spd::{exp_symmetric, SpdMatrix};
use crate::two_means::{arithmetic_mean, geo_mean_with_roots, MatrixTuple};

/// `Σ wᵢ X #ₜ Aᵢ`.
fn power_map(t: f64, tuple: &MatrixTuple, x: &SpdMatrix) -> Result<SpdMatrix> {
    let n = x.dim();
    let (rx, rx_inv) = x.sqrt_and_inv_sqrt()?;
    let mut acc = DMatrix::zeros(n, n);
    for (w, a) in tuple.iter() {
        acc += geo_mean_with_roots(&rx, &rx_inv, a, t)?.matrix() * w;
    }
    Ok(SpdMatrix::from_trusted(acc))
}

/// Matrix power mean `P_t(ω; 𝔸)` for `t ∈ [−1, 1] \ {0}`.
///
/// For `t > 0` this is the fixed point of `X ↦ Σ wᵢ X #ₜ Aᵢ`, a Thompson
/// contraction with factor `1 − t`. Negative orders use `P_t(𝔸) = P_{−t}(𝔸⁻¹)⁻¹`.
pub fn power_mean(t: f64, tuple: &MatrixTuple, opts: &SolverOptions) -> Result<SolveReport> {
    if !(t.abs() <= 1.0 && t != 0.0) {
        return Err(Error::ParameterOutOfRange {
            name: "t",
            value: t,
            expected: "[-1, 1] without 0",
        });
    }
    opts.validate()?;
    if t < 0.0 {
        let mut r = power_mean(-t, &tuple.inverted()?, &opts.inverted_init()?)?;
        r.solution = r.solution.inverse()?;
        return Ok(r);
    }
    if tuple.len() == 1 || tuple.is_constant() {
        return Ok(SolveReport::direct(tuple.matrices()[0].clone(), SolveMethod::Direct));
    }
    if t == 1.0 {
        return Ok(SolveReport::direct(arithmetic_mean(tuple), SolveMethod::Direct));
    }
    let it = picard(opts.start(tuple)?, opts, SolveMethod::PowerFixedPoint, |x| {
        power_map(t, tuple, x)
    })?;
    let gx = power_map(t, tuple, &it.solution)?;
    Ok(SolveReport {
        fixed_point_residual: (it.solution.matrix() - gx.matrix()).norm(),
        solution: it.solution,
        iterations: it.iterations,
        residual: it.residual,
        contraction_estimate: 1.0 - t,
        certificate: None,
        method: SolveMethod::PowerFixedPoint,
    })
}

/// `Σ wᵢ log(X^{-1/2} Aᵢ X^{-1/2})`, the Karcher gradient expressed at the identity,
/// and the step length `θ = 2 / Σ wᵢ ((cᵢ+1)/(cᵢ−1)) log cᵢ` where `cᵢ` is the
/// condition number of `X^{-1/2} Aᵢ X^{-1/2}`.
fn karcher_direction(tuple: &MatrixTuple, x_inv_sqrt: &SpdMatrix) -> Result<(DMatrix<f64>, f64)> {
    let n = tuple.dim();
    let mut acc = DMatrix::zeros(n, n);
    let mut curvature = 0.0;
    for (w, a) in tuple.iter() {
        let b = SpdMatrix::from_trusted(x_inv_sqrt.matrix() * a.matrix() * x_inv_sqrt.matrix());
        let eig = b.eig()?;
        acc += eig.apply(f64::ln) * w;
        let hi = eig.eigenvalues.iter().copied().fold(f64::MIN, f64::max);
        let lo = eig.eigenvalues.iter().copied().fold(f64::MAX, f64::min);
        let log_c = (hi / lo).ln();
        // (c+1)/(c−1)·log c = log c / tanh(log c / 2), which tends to 2 as c → 1.
        curvature += w * if log_c < 1e-8 { 2.0 } else { log_c / (0.5 * log_c).tanh() };
    }
    Ok((acc, 2.0 / curvature))
}

/// `‖Σ wᵢ log(X^{-1/2} Aᵢ X^{-1/2})‖_F`.
pub fn karcher_residual(x: &SpdMatrix, tuple: &MatrixTuple) -> Result<f64> {
    check_dims(tuple.dim(), x.dim())?;
    Ok(karcher_direction(tuple, &x.inv_sqrt()?)?.0.norm())
}

/// Cartan mean `Λ(ω; 𝔸)`, the zero of the Karcher equation, by the exponential
/// update `X ← X^{1/2} exp(θ Σ wᵢ log(X^{-1/2}AᵢX^{-1/2})) X^{1/2}`. The step
/// `θ ∈ (0, 1]` adapts to the spread of the tuple as seen from `X` and equals 1
/// for commuting data near the mean.
///
/// Converged when the Karcher residual is at most `tol · n`, or when it has
/// stalled at round-off level for 100 iterations.
pub fn cartan_mean(tuple: &MatrixTuple, opts: &SolverOptions) -> Result<SolveReport> {
    opts.validate()?;
    if tuple.len() == 1 || tuple.is_constant() {
        return Ok(SolveReport::direct(tuple.matrices()[0].clone(), SolveMethod::Direct));
    }
    let target = opts.tol * tuple.len() as f64;
    let mut x = opts.start(tuple)?;
    let (mut rx, rx_inv) = x.sqrt_and_inv_sqrt()?;
    let (mut dir, mut theta) = karcher_direction(tuple, &rx_inv)?;
    let mut grad = dir.norm();
    let mut last_step = 0.0;
    let mut rate = 0.0;
    let mut prev_step = f64::NAN;
    let mut best = (grad, x.clone(), 0usize, 0.0);

    let report = |x: SpdMatrix, k: usize, step: f64, grad: f64, rate: f64| SolveReport {
        solution: x,
        iterations: k,
        residual: step,
        fixed_point_residual: grad,
        contraction_estimate: rate,
        certificate: None,
        method: SolveMethod::KarcherExponential,
    };

    for k in 0..=opts.max_iter {
        if grad <= target {
            return Ok(report(x, k, last_step, grad, rate));
        }
        if best.0 <= super::NOISE_CHECK && k - best.2 >= super::STALL_WINDOW {
            return Ok(report(best.1, k, best.3, best.0, rate));
        }
        if k == opts.max_iter {
            break;
        }
        let e = exp_symmetric(&(&dir * theta))?;
        let next = SpdMatrix::from_trusted(rx.matrix() * e.matrix() * rx.matrix());
        last_step = thompson(&x, &next)?;
        if prev_step > 0.0 {
            rate = (last_step / prev_step).clamp(0.0, 1.0 - f64::EPSILON);
        }
        prev_step = last_step;
        x = next;
        let (r, r_inv) = x.sqrt_and_inv_sqrt()?;
        rx = r;
        (dir, theta) = karcher_direction(tuple, &r_inv)?;
        grad = dir.norm();
        if grad < best.0 {
            best = (grad, x.clone(), k + 1, last_step);
        }
    }
    Err(Error::MaxIterExceeded {
        best: Box::new(report(best.1, opts.max_iter, best.3, best.0, rate)),
    })
}

/// `Σ wᵢ (X^{1/2} Aᵢ X^{1/2})^{1/2}` given `X^{1/2}`.
fn wasserstein_sum(tuple: &MatrixTuple, rx: &SpdMatrix) -> Result<DMatrix<f64>> {
    let n = tuple.dim();
    let mut acc = DMatrix::zeros(n, n);
    for (w, a) in tuple.iter() {
        let inner = SpdMatrix::from_trusted(rx.matrix() * a.matrix() * rx.matrix());
        acc += inner.sqrt()?.matrix() * w;
    }
    Ok(acc)
}

/// Wasserstein mean `Ω(ω; 𝔸)`, the solution of `X = Σ wᵢ(X^{1/2}AᵢX^{1/2})^{1/2}`.
///
/// Iterates `X ← X^{-1/2} K(X)² X^{-1/2}` with `K(X)` the right-hand side above;
/// its fixed points are exactly the solutions of `X² = K(X)²`.
pub fn wasserstein_mean(tuple: &MatrixTuple, opts: &SolverOptions) -> Result<SolveReport> {
    opts.validate()?;
    if tuple.len() == 1 || tuple.is_constant() {
        return Ok(SolveReport::direct(tuple.matrices()[0].clone(), SolveMethod::Direct));
    }
    let it = picard(
        opts.start(tuple)?,
        opts,
        SolveMethod::WassersteinFixedPoint,
        |x| {
            let (rx, rx_inv) = x.sqrt_and_inv_sqrt()?;
            let k = wasserstein_sum(tuple, &rx)?;
            Ok(SpdMatrix::from_trusted(
                rx_inv.matrix() * &k * &k * rx_inv.matrix(),
            ))
        },
    )?;
    let k = wasserstein_sum(tuple, &it.solution.sqrt()?)?;
    Ok(SolveReport {
        fixed_point_residual: (it.solution.matrix() - k).norm(),
        solution: it.solution,
        iterations: it.iterations,
        residual: it.residual,
        contraction_estimate: it.observed_rate,
        certificate: None,
        method: SolveMethod::WassersteinFixedPoint,
    })
}

/// `Σ wⱼ (Aⱼ^{(1−t)/2z} X^{t/z} Aⱼ^{(1−t)/2z})^z` with the outer factors precomputed.
fn renyi_map(t: f64, z: f64, weights: &[f64], outer: &[SpdMatrix], x: &SpdMatrix) -> Result<SpdMatrix> {
    let n = x.dim();
    let xp = x.powf(t / z)?;
    let mut acc = DMatrix::zeros(n, n);
    for (w, c) in weights.iter().zip(outer) {
        let inner = SpdMatrix::from_trusted(c.matrix() * xp.matrix() * c.matrix());
        acc += inner.powf(z)?.matrix() * *w;
    }
    Ok(SpdMatrix::from_trusted(acc))
}

/// Rényi power mean `R_{t,z}(ω; 𝔸)` for `0 < t ≤ z < 1`, the fixed point of
/// `X ↦ Σ wⱼ (Aⱼ^{(1−t)/2z} X^{t/z} Aⱼ^{(1−t)/2z})^z`. The map contracts the
/// Thompson metric by the factor `t`.
pub fn renyi_power_mean(
    t: f64,
    z: f64,
    tuple: &MatrixTuple,
    opts: &SolverOptions,
) -> Result<SolveReport> {
    if !(t > 0.0 && t <= z && z < 1.0) {
        return Err(Error::ParameterOutOfRange {
            name: "t, z",
            value: t,
            expected: "0 < t <= z < 1",
        });
    }
    opts.validate()?;
    if tuple.len() == 1 || tuple.is_constant() {
        return Ok(SolveReport::direct(tuple.matrices()[0].clone(), SolveMethod::Direct));
    }
    let outer = tuple
        .matrices()
        .iter()
        .map(|a| a.powf((1.0 - t) / (2.0 * z)))
        .collect::<Result<Vec<_>>>()?;
    let weights = tuple.weights().as_slice();
    let it = picard(opts.start(tuple)?, opts, SolveMethod::RenyiFixedPoint, |x| {
        renyi_map(t, z, weights, &outer, x)
    })?;
    let gx = renyi_map(t, z, weights, &outer, &it.solution)?;
    Ok(SolveReport {
        fixed_point_residual: (it.solution.matrix() - gx.matrix()).norm(),
        solution: it.solution,
        iterations: it.iterations,
        residual: it.residual,
        contraction_estimate: t,
        certificate: None,
        method: SolveMethod::RenyiFixedPoint,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::two_means::{harmonic_mean, WeightVector};

    fn s(x: f64) -> SpdMatrix {
        SpdMatrix::from_diagonal(&[x]).unwrap()
    }

    fn diag(d: &[f64]) -> SpdMatrix {
        SpdMatrix::from_diagonal(d).unwrap()
    }

    fn m2(a: f64, b: f64, c: f64) -> SpdMatrix {
        SpdMatrix::from_rows(&[vec![a, b], vec![b, c]]).unwrap()
    }

    fn pair_1_4() -> MatrixTuple {
        MatrixTuple::uniform(vec![s(1.0), s(4.0)]).unwrap()
    }

    fn mixed() -> MatrixTuple {
        MatrixTuple::new(
            vec![m2(2.0, 0.3, 1.0), m2(1.0, -0.4, 3.0), m2(0.5, 0.1, 0.7)],
            WeightVector::new(vec![0.2, 0.5, 0.3]).unwrap(),
        )
        .unwrap()
    }

    fn opts() -> SolverOptions {
        SolverOptions::default()
    }

    fn value(r: &SolveReport) -> f64 {
        r.solution.matrix()[(0, 0)]
    }

    #[test]
    fn power_mean_examples() {
        let t = mixed();
        let p1 = power_mean(1.0, &t, &opts()).unwrap();
        assert!((p1.solution.matrix() - arithmetic_mean(&t).matrix()).amax() < 1e-15);
        assert!((value(&power_mean(0.5, &pair_1_4(), &opts()).unwrap()) - 2.25).abs() < 1e-12);
        assert!((value(&power_mean(-1.0, &pair_1_4(), &opts()).unwrap()) - 1.6).abs() < 1e-14);
        let pm1 = power_mean(-1.0, &t, &opts()).unwrap();
        assert!(thompson(&pm1.solution, &harmonic_mean(&t).unwrap()).unwrap() < 1e-12);
        assert!(power_mean(0.0, &t, &opts()).is_err());
        assert!(power_mean(1.2, &t, &opts()).is_err());
    }

    #[test]
    fn power_mean_scalar_identity() {
        // x^t = Σ wᵢ aᵢ^t
        let r = power_mean(0.3, &pair_1_4(), &opts()).unwrap();
        let expect = (0.5 + 0.5 * 4f64.powf(0.3)).powf(1.0 / 0.3);
        assert!((value(&r) - expect).abs() < 1e-11);
        assert!(r.fixed_point_residual < 1e-12);
    }

    #[test]
    fn cartan_examples() {
        let a = m2(2.0, 0.3, 1.0);
        let t = MatrixTuple::uniform(vec![a.clone(), a.clone()]).unwrap();
        assert_eq!(cartan_mean(&t, &opts()).unwrap().solution, a);
        assert!((value(&cartan_mean(&pair_1_4(), &opts()).unwrap()) - 2.0).abs() < 1e-12);

        let triple = MatrixTuple::uniform(vec![
            m2(2.0, -1.0, 2.0),
            m2(3.0, -2.0, 3.0),
            m2(2.0, 1.0, 2.0),
        ])
        .unwrap();
        let r = cartan_mean(&triple, &opts()).unwrap();
        let x = r.solution.matrix();
        assert!((x[(0, 0)] - 1.95423082).abs() < 1e-6);
        assert!((x[(0, 1)] + 0.51198125).abs() < 1e-6);
        assert!(r.fixed_point_residual <= 3e-12);
    }

    #[test]
    fn cartan_karcher_residual_vanishes() {
        let t = mixed();
        let r = cartan_mean(&t, &opts()).unwrap();
        assert!(karcher_residual(&r.solution, &t).unwrap() <= 1e-12 * 3.0);
    }

    #[test]
    fn wasserstein_examples() {
        let a = m2(2.0, 0.3, 1.0);
        let t = MatrixTuple::uniform(vec![a.clone(), a.clone()]).unwrap();
        assert_eq!(wasserstein_mean(&t, &opts()).unwrap().solution, a);
        assert!((value(&wasserstein_mean(&pair_1_4(), &opts()).unwrap()) - 2.25).abs() < 1e-12);
        let t = MatrixTuple::uniform(vec![diag(&[1.0, 4.0]), diag(&[4.0, 1.0])]).unwrap();
        let r = wasserstein_mean(&t, &opts()).unwrap();
        assert!((r.solution.matrix() - diag(&[2.25, 2.25]).matrix()).amax() < 1e-12);
        let r = wasserstein_mean(&mixed(), &opts()).unwrap();
        assert!(r.fixed_point_residual < 1e-11);
        assert!(r.contraction_estimate < 1.0);
    }

    #[test]
    fn renyi_examples() {
        let a = m2(2.0, 0.3, 1.0);
        let t = MatrixTuple::uniform(vec![a.clone(), a.clone()]).unwrap();
        assert_eq!(renyi_power_mean(0.3, 0.6, &t, &opts()).unwrap().solution, a);

        let r = renyi_power_mean(0.25, 0.5, &pair_1_4(), &opts()).unwrap();
        let expect = (0.5 + 0.5 * 4f64.powf(0.75)).powf(4.0 / 3.0);
        assert!((value(&r) - expect).abs() < 1e-11);
        assert!((value(&r) - 2.37677015).abs() < 1e-8);

        assert!(renyi_power_mean(0.6, 0.5, &pair_1_4(), &opts()).is_err());
        assert!(renyi_power_mean(0.5, 1.0, &pair_1_4(), &opts()).is_err());
        assert!(renyi_power_mean(0.0, 0.5, &pair_1_4(), &opts()).is_err());
    }

    #[test]
    fn renyi_half_half_matches_wasserstein_on_commuting_tuples() {
        let t = MatrixTuple::new(
            vec![diag(&[1.0, 4.0, 0.5]), diag(&[4.0, 1.0, 2.0]), diag(&[0.3, 2.0, 9.0])],
            WeightVector::new(vec![0.2, 0.3, 0.5]).unwrap(),
        )
        .unwrap();
        let r = renyi_power_mean(0.5, 0.5, &t, &opts()).unwrap();
        let w = wasserstein_mean(&t, &opts()).unwrap();
        assert!(thompson(&r.solution, &w.solution).unwrap() < 1e-8);
    }
}
