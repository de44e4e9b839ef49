//! Structural properties of `G_t` and the solver's own certificates.

use super::{
    excess, loewner_violation_rel, random_t, random_tuple, solve, Invariant, DEFAULT_COND, T_GRID,
};
use crate::error::Result;
use crate::fixed_point::{
    closed_form_two, contraction_check, g_mean, resolvent_residual, two_tuple, SolverOptions,
};
use crate::metrics::thompson;
use crate::spd::SpdMatrix;
use crate::testkit::Sampler;
use crate::two_means::{arithmetic_mean, geo_mean, harmonic_mean, MatrixTuple};

pub(super) fn invariants() -> Vec<Invariant> {
    vec![
        Invariant::new("g_mean.idempotency", 1e-8, 100, idempotency),
        Invariant::new("g_mean.homogeneity", 1e-8, 100, homogeneity),
        Invariant::new("g_mean.permutation_invariance", 1e-8, 100, permutation_invariance),
        Invariant::new("g_mean.monotone_in_arguments", 1e-8, 100, monotone_in_arguments),
        Invariant::new("g_mean.nonexpansive", 1e-8, 100, nonexpansive),
        Invariant::new("g_mean.congruence_invariance", 1e-8, 100, congruence_invariance),
        Invariant::new("g_mean.self_duality", 1e-8, 100, self_duality),
        Invariant::new("g_mean.harmonic_le_g_le_arithmetic", 1e-8, 100, agh_sandwich),
        Invariant::new("g_mean.two_point_geometric_mean", 1e-8, 200, two_point_geometric),
        Invariant::new("g_mean.solver_certificate", 1e-8, 100, solver_certificate),
        Invariant::new("g_mean.scalar_bisection_oracle", 1e-12, 200, scalar_oracle),
        Invariant::new("g_mean.contraction_bound", 1e-10, 200, contraction_bound),
        Invariant::new("g_mean.closed_form_two", 1e-8, 100, closed_form),
    ]
}

fn idempotency(s: &mut Sampler) -> Result<f64> {
    let n = s.int(1, 6);
    let dim = s.int(1, 8);
    let a = s.spd_scaled(dim, DEFAULT_COND);
    let tuple = MatrixTuple::new(vec![a.clone(); n], s.weights(n))?;
    thompson(&solve(random_t(s), &tuple)?, &a)
}

fn homogeneity(s: &mut Sampler) -> Result<f64> {
    let tuple = random_tuple(s, DEFAULT_COND);
    let t = random_t(s);
    let g = solve(t, &tuple)?;
    let mut worst = 0.0f64;
    for c in [0.5, 2.0, 10.0] {
        worst = worst.max(thompson(&solve(t, &tuple.scaled(c)?)?, &g.scale(c)?)?);
    }
    Ok(worst)
}

fn permutation_invariance(s: &mut Sampler) -> Result<f64> {
    let tuple = random_tuple(s, DEFAULT_COND);
    let t = random_t(s);
    let mut perm: Vec<usize> = (0..tuple.len()).collect();
    for i in (1..perm.len()).rev() {
        perm.swap(i, s.int(0, i));
    }
    thompson(&solve(t, &tuple)?, &solve(t, &tuple.permuted(&perm)?)?)
}

fn monotone_in_arguments(s: &mut Sampler) -> Result<f64> {
    let tuple = random_tuple(s, DEFAULT_COND);
    let t = random_t(s);
    let dim = tuple.dim();
    let mut ms = Vec::with_capacity(tuple.len());
    for a in tuple.matrices() {
        let rank = s.int(1, dim);
        let scale = a.spectral_norm()? * s.uniform(0.01, 1.0);
        ms.push(SpdMatrix::new(a.matrix() + s.psd(dim, rank, scale))?);
    }
    let bigger = MatrixTuple::new(ms, tuple.weights().clone())?;
    loewner_violation_rel(&solve(t, &tuple)?, &solve(t, &bigger)?)
}

fn nonexpansive(s: &mut Sampler) -> Result<f64> {
    let a = random_tuple(s, DEFAULT_COND);
    let t = random_t(s);
    let ms = (0..a.len()).map(|_| s.spd_scaled(a.dim(), DEFAULT_COND)).collect();
    let b = MatrixTuple::new(ms, a.weights().clone())?;
    let mut rhs = 0.0f64;
    for (x, y) in a.matrices().iter().zip(b.matrices()) {
        rhs = rhs.max(thompson(x, y)?);
    }
    Ok(excess(thompson(&solve(t, &a)?, &solve(t, &b)?)?, rhs))
}

fn congruence_invariance(s: &mut Sampler) -> Result<f64> {
    let tuple = random_tuple(s, 1e3);
    let t = random_t(s);
    let x = s.invertible(tuple.dim());
    let lhs = solve(t, &tuple.congruence(&x)?)?;
    thompson(&lhs, &crate::spd::congruence(&x, &solve(t, &tuple)?)?)
}

fn self_duality(s: &mut Sampler) -> Result<f64> {
    let tuple = random_tuple(s, DEFAULT_COND);
    let t = random_t(s);
    let lhs = solve(1.0 - t, &tuple.inverted()?)?;
    thompson(&lhs, &solve(t, &tuple)?.inverse()?)
}

fn agh_sandwich(s: &mut Sampler) -> Result<f64> {
    let tuple = random_tuple(s, DEFAULT_COND);
    let g = solve(random_t(s), &tuple)?;
    Ok(loewner_violation_rel(&harmonic_mean(&tuple)?, &g)?
        .max(loewner_violation_rel(&g, &arithmetic_mean(&tuple))?))
}

fn two_point_geometric(s: &mut Sampler) -> Result<f64> {
    let dim = s.int(2, 8);
    let a = s.spd_scaled(dim, DEFAULT_COND);
    let b = s.spd_scaled(dim, DEFAULT_COND);
    let g = solve(0.5, &MatrixTuple::uniform(vec![a.clone(), b.clone()])?)?;
    thompson(&g, &geo_mean(&a, &b, 0.5)?)
}

fn solver_certificate(s: &mut Sampler) -> Result<f64> {
    let tuple = random_tuple(s, DEFAULT_COND);
    let t = random_t(s);
    let report = g_mean(t, &tuple, &SolverOptions::default())?;
    if !(report.contraction_estimate < 1.0) {
        return Ok(f64::INFINITY);
    }
    resolvent_residual(&report.solution, t, &tuple)
}

/// Root of the scalar equation `1/x = Σ wᵢ/((1−t)x + t aᵢ)` by bisection on
/// `[min aᵢ, max aᵢ]`, where `x Σ wᵢ/((1−t)x + t aᵢ) − 1` is increasing.
pub(crate) fn scalar_bisection(t: f64, weights: &[f64], values: &[f64]) -> f64 {
    let f = |x: f64| {
        let s: f64 = weights
            .iter()
            .zip(values)
            .map(|(w, a)| w / ((1.0 - t) * x + t * a))
            .sum();
        x * s - 1.0
    };
    let mut lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let mut hi = values.iter().copied().fold(0.0, f64::max);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn scalar_oracle(s: &mut Sampler) -> Result<f64> {
    let n = s.int(1, 6);
    let tuple = s.tuple(n, 1, DEFAULT_COND);
    let values: Vec<f64> = tuple.matrices().iter().map(|a| a.matrix()[(0, 0)]).collect();
    let mut worst = 0.0f64;
    for t in T_GRID {
        let g = solve(t, &tuple)?.matrix()[(0, 0)];
        let x = scalar_bisection(t, tuple.weights().as_slice(), &values);
        worst = worst.max((g - x).abs() / x);
    }
    Ok(worst)
}

fn contraction_bound(s: &mut Sampler) -> Result<f64> {
    let tuple = random_tuple(s, DEFAULT_COND);
    let t = random_t(s);
    let x = s.spd_scaled(tuple.dim(), DEFAULT_COND);
    let y = s.spd_scaled(tuple.dim(), DEFAULT_COND);
    let (lhs, bound) = contraction_check(t, &tuple, &x, &y)?;
    Ok((lhs - bound).max(0.0))
}

fn closed_form(s: &mut Sampler) -> Result<f64> {
    let w1 = s.uniform(0.05, 0.95);
    let w2 = 1.0 - w1;
    let (lo, hi) = (w1.min(w2), w1.max(w2));
    let t = lo + (hi - lo) * s.uniform(0.05, 0.95);
    let dim = s.int(1, 8);
    let a = s.spd_scaled(dim, DEFAULT_COND);
    let b = a.scale((t - w1) / (w2 - t))?;
    let expect = closed_form_two(t, w1, w2, &a, &b)?;
    thompson(&expect, &solve(t, &two_tuple(w1, w2, &a, &b)?)?)
}
