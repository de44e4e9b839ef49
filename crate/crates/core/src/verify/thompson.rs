//! Metric layer: Thompson and Stein distances plus the matrix-function and
//! two-matrix mean identities they rest on.

use nalgebra::DMatrix;

use super::{excess, loewner_violation_rel, mismatch, Invariant, DEFAULT_COND};
use crate::error::Result;
use crate::metrics::{stein_metric, thompson};
use crate::spd::{congruence, exp_symmetric, loewner_leq, SpdMatrix};
use crate::testkit::Sampler;
use crate::two_means::{arithmetic_mean, geo_mean, harmonic_mean};

pub(super) fn invariants() -> Vec<Invariant> {
    vec![
        Invariant::new("thompson.inverse_invariance", 1e-9, 200, inverse_invariance),
        Invariant::new("thompson.congruence_invariance", 1e-9, 200, congruence_invariance),
        Invariant::new("thompson.geodesic_parametrization", 1e-9, 200, geodesic_parametrization),
        Invariant::new("thompson.geodesic_convexity", 1e-10, 200, geodesic_convexity),
        Invariant::new("thompson.continuity", 1e-10, 200, continuity),
        Invariant::new("thompson.nonexpansive_sum", 1e-10, 200, nonexpansive_sum),
        Invariant::new("thompson.additive_contraction", 1e-10, 200, additive_contraction),
        Invariant::new("stein.triangle_inequality", 1e-10, 1000, stein_triangle),
        Invariant::new("stein.geodesic_contraction", 1e-10, 200, stein_geodesic_contraction),
        Invariant::new("spd.log_exp_round_trip", 1e-8, 500, log_exp_round_trip),
        Invariant::new("spd.power_additivity", 1e-9, 100, power_additivity),
        Invariant::new("spd.congruence_round_trip", 1e-9, 100, congruence_round_trip),
        Invariant::new("spd.loewner_reflexive_antisymmetric", 0.0, 100, loewner_axioms),
        Invariant::new("two_means.riccati", 1e-9, 100, riccati),
        Invariant::new("two_means.self_duality", 1e-9, 100, geo_self_duality),
        Invariant::new("two_means.harmonic_le_arithmetic", 1e-10, 100, harmonic_le_arithmetic),
        Invariant::new("two_means.norm_inequality", 1e-10, 100, norm_inequality),
    ]
}

/// Condition cap for identities between independently computed geometric means.
/// With the random scale spread the relative spectrum then stays below about 1e8.
const GEO_COND: f64 = 1e3;

fn matrices(s: &mut Sampler, k: usize, cond: f64) -> Vec<SpdMatrix> {
    let dim = s.int(1, 8);
    (0..k).map(|_| s.spd_scaled(dim, cond)).collect()
}

fn rel_frobenius(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm()
}

fn inverse_invariance(s: &mut Sampler) -> Result<f64> {
    let m = matrices(s, 2, DEFAULT_COND);
    let d = thompson(&m[0], &m[1])?;
    Ok(mismatch(thompson(&m[0].inverse()?, &m[1].inverse()?)?, d))
}

fn congruence_invariance(s: &mut Sampler) -> Result<f64> {
    let m = matrices(s, 2, 1e3);
    let x = s.invertible(m[0].dim());
    let d = thompson(&m[0], &m[1])?;
    Ok(mismatch(thompson(&congruence(&x, &m[0])?, &congruence(&x, &m[1])?)?, d))
}

fn geodesic_parametrization(s: &mut Sampler) -> Result<f64> {
    let m = matrices(s, 2, DEFAULT_COND);
    let (a, b) = (s.uniform(0.0, 1.0), s.uniform(0.0, 1.0));
    let lhs = thompson(&geo_mean(&m[0], &m[1], a)?, &geo_mean(&m[0], &m[1], b)?)?;
    Ok(mismatch(lhs, (a - b).abs() * thompson(&m[0], &m[1])?))
}

fn geodesic_convexity(s: &mut Sampler) -> Result<f64> {
    let m = matrices(s, 4, DEFAULT_COND);
    let t = s.uniform(0.0, 1.0);
    let lhs = thompson(&geo_mean(&m[0], &m[1], t)?, &geo_mean(&m[2], &m[3], t)?)?;
    let rhs = (1.0 - t) * thompson(&m[0], &m[2])? + t * thompson(&m[1], &m[3])?;
    Ok(excess(lhs, rhs))
}

/// `d(A#ₛB, C#ₜD) ≤ (1−t)d(A,C) + t·d(B,D) + |s−t|·d(A,B)`, the triangle
/// inequality through `A#ₜB`. The variant ending in `|s−t|·d(C,D)` is false
/// (see the test below).
fn continuity(s: &mut Sampler) -> Result<f64> {
    let m = matrices(s, 4, DEFAULT_COND);
    let (a, t) = (s.uniform(0.0, 1.0), s.uniform(0.0, 1.0));
    let lhs = thompson(&geo_mean(&m[0], &m[1], a)?, &geo_mean(&m[2], &m[3], t)?)?;
    Ok(excess(lhs, continuity_bound(&m, a, t)?))
}

fn continuity_bound(m: &[SpdMatrix], s: f64, t: f64) -> Result<f64> {
    Ok((1.0 - t) * thompson(&m[0], &m[2])?
        + t * thompson(&m[1], &m[3])?
        + (s - t).abs() * thompson(&m[0], &m[1])?)
}

fn sum(ms: &[SpdMatrix]) -> Result<SpdMatrix> {
    let mut acc = ms[0].clone();
    for m in &ms[1..] {
        acc = acc.add(m)?;
    }
    Ok(acc)
}

fn nonexpansive_sum(s: &mut Sampler) -> Result<f64> {
    let k = s.int(1, 5);
    let m = matrices(s, 2 * k, DEFAULT_COND);
    let (a, b) = m.split_at(k);
    let mut rhs = 0.0f64;
    for (x, y) in a.iter().zip(b) {
        rhs = rhs.max(thompson(x, y)?);
    }
    Ok(excess(thompson(&sum(a)?, &sum(b)?)?, rhs))
}

fn additive_contraction(s: &mut Sampler) -> Result<f64> {
    let m = matrices(s, 3, DEFAULT_COND);
    let (a, x, y) = (&m[0], &m[1], &m[2]);
    let alpha = x.max_eigenvalue()?.max(y.max_eigenvalue()?);
    let beta = a.min_eigenvalue()?;
    let lhs = thompson(&a.add(x)?, &a.add(y)?)?;
    Ok(excess(lhs, alpha / (alpha + beta) * thompson(x, y)?))
}

fn stein_triangle(s: &mut Sampler) -> Result<f64> {
    let m = matrices(s, 3, DEFAULT_COND);
    let lhs = stein_metric(&m[0], &m[2])?;
    Ok(excess(lhs, stein_metric(&m[0], &m[1])? + stein_metric(&m[1], &m[2])?))
}

fn stein_geodesic_contraction(s: &mut Sampler) -> Result<f64> {
    let m = matrices(s, 3, DEFAULT_COND);
    let mut worst = 0.0f64;
    for t in [0.25, 0.5, 0.75] {
        let lhs = stein_metric(&geo_mean(&m[0], &m[1], t)?, &geo_mean(&m[0], &m[2], t)?)?;
        worst = worst.max(excess(lhs, t.sqrt() * stein_metric(&m[1], &m[2])?));
    }
    Ok(worst)
}

fn log_exp_round_trip(s: &mut Sampler) -> Result<f64> {
    let a = &matrices(s, 1, 1e6)[0];
    Ok(rel_frobenius(exp_symmetric(&a.log()?)?.matrix(), a.matrix()))
}

fn power_additivity(s: &mut Sampler) -> Result<f64> {
    let a = &matrices(s, 1, DEFAULT_COND)[0];
    let (p, q) = (s.uniform(-2.0, 2.0), s.uniform(-2.0, 2.0));
    let (ap, aq) = (a.powf(p)?, a.powf(q)?);
    let prod = ap.matrix() * aq.matrix();
    let scale = ap.matrix().norm() * aq.matrix().norm();
    Ok((a.powf(p + q)?.matrix() - prod).norm() / scale)
}

fn congruence_round_trip(s: &mut Sampler) -> Result<f64> {
    let a = &matrices(s, 1, DEFAULT_COND)[0];
    let x = s.invertible(a.dim());
    let x_inv = x.clone().try_inverse().expect("invertible by construction");
    let back = congruence(&x, &congruence(&x_inv, a)?)?;
    Ok(rel_frobenius(back.matrix(), a.matrix()))
}

fn loewner_axioms(s: &mut Sampler) -> Result<f64> {
    let a = &matrices(s, 1, DEFAULT_COND)[0];
    if !loewner_leq(a, a, 0.0)? {
        return Ok(1.0);
    }
    let tol = 1e-9 * a.spectral_norm()?;
    let e = s.symmetric(a.dim());
    let e = &e * (0.5 * tol / e.norm());
    let b = SpdMatrix::new(a.matrix() + e)?;
    if !(loewner_leq(a, &b, tol)? && loewner_leq(&b, a, tol)?) {
        return Ok(1.0);
    }
    let gap = crate::spd::symmetric_eigenvalues(&(a.matrix() - b.matrix()))?
        .into_iter()
        .fold(0.0f64, |m, x| m.max(x.abs()));
    Ok((gap - tol).max(0.0))
}

fn riccati(s: &mut Sampler) -> Result<f64> {
    let m = matrices(s, 2, GEO_COND);
    let x = geo_mean(&m[0], &m[1], 0.5)?;
    let lhs = x.matrix() * m[0].inverse()?.matrix() * x.matrix();
    Ok(rel_frobenius(&lhs, m[1].matrix()))
}

fn geo_self_duality(s: &mut Sampler) -> Result<f64> {
    let m = matrices(s, 2, GEO_COND);
    let t = s.uniform(0.0, 1.0);
    let lhs = geo_mean(&m[0], &m[1], t)?.inverse()?;
    thompson(&lhs, &geo_mean(&m[0].inverse()?, &m[1].inverse()?, t)?)
}

fn harmonic_le_arithmetic(s: &mut Sampler) -> Result<f64> {
    let tuple = super::random_tuple(s, DEFAULT_COND);
    loewner_violation_rel(&harmonic_mean(&tuple)?, &arithmetic_mean(&tuple))
}

fn norm_inequality(s: &mut Sampler) -> Result<f64> {
    let m = matrices(s, 2, DEFAULT_COND);
    let t = s.uniform(0.0, 1.0);
    let lhs = geo_mean(&m[0], &m[1], t)?.spectral_norm()?;
    let rhs = m[0].spectral_norm()?.powf(1.0 - t) * m[1].spectral_norm()?.powf(t);
    Ok(excess(lhs, rhs))
}
