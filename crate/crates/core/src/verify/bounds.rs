//! Norm and eigenvalue bounds, positive maps, and the two limit behaviours.

use nalgebra::DMatrix;

use super::{excess, loewner_violation_rel, random_t, random_tuple, solve, Invariant, DEFAULT_COND};
use crate::error::Result;
use crate::fixed_point::{lie_trotter_limit, SolverOptions};
use crate::metrics::thompson;
use crate::spd::{loewner_gap, SpdMatrix};
use crate::testkit::{apply_positive_map, map_tuple, Sampler};
use crate::two_means::{arithmetic_mean, MatrixTuple};

pub(super) fn invariants() -> Vec<Invariant> {
    vec![
        Invariant::new("g_mean.spectral_norm_bound", 1e-8, 100, norm_bound),
        Invariant::new("g_mean.positive_map_inequality", 1e-8, 100, positive_map_inequality),
        Invariant::new("positive_map.order_preserving", 1e-10, 100, positive_map_order),
        Invariant::new("g_mean.eigenvalue_lower_bound", 1e-8, 100, lower_bound),
        Invariant::new("g_mean.eigenvalue_upper_bound", 1e-8, 100, upper_bound),
        Invariant::new("g_mean.lower_bound_above_identity", 1e-8, 100, lower_bound_above_identity),
        Invariant::new("g_mean.upper_bound_below_identity", 1e-8, 100, upper_bound_below_identity),
        Invariant::new("g_mean.arithmetic_limit", 0.0, 50, arithmetic_limit),
        Invariant::new("g_mean.lie_trotter_trend", 0.0, 50, lie_trotter_trend),
    ]
}

/// `Σ wᵢ Aᵢ^p`.
fn power_sum(tuple: &MatrixTuple, p: f64) -> Result<SpdMatrix> {
    let n = tuple.dim();
    let mut acc = DMatrix::zeros(n, n);
    for (w, a) in tuple.iter() {
        acc += a.powf(p)?.matrix() * w;
    }
    SpdMatrix::new(acc)
}

fn extreme_eigenvalues(tuple: &MatrixTuple) -> Result<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for a in tuple.matrices() {
        lo = lo.min(a.min_eigenvalue()?);
        hi = hi.max(a.max_eigenvalue()?);
    }
    Ok((lo, hi))
}

fn norm_bound(s: &mut Sampler) -> Result<f64> {
    let tuple = random_tuple(s, DEFAULT_COND);
    let t = random_t(s);
    let lhs = solve(1.0 - t, &tuple)?.spectral_norm()?;
    let mut sum = 0.0;
    for (w, a) in tuple.iter() {
        sum += w * a.spectral_norm()?.powf(t);
    }
    Ok(excess(lhs, sum.powf(1.0 / t)))
}

fn positive_map_inequality(s: &mut Sampler) -> Result<f64> {
    let tuple = random_tuple(s, DEFAULT_COND);
    let t = random_t(s);
    let phi = s.positive_map(tuple.dim());
    let lhs = apply_positive_map(&phi, &solve(t, &tuple)?)?;
    loewner_violation_rel(&lhs, &solve(t, &map_tuple(&phi, &tuple)?)?)
}

fn positive_map_order(s: &mut Sampler) -> Result<f64> {
    let dim = s.int(1, 8);
    let a = s.spd_scaled(dim, DEFAULT_COND);
    let rank = s.int(1, dim);
    let b = SpdMatrix::new(a.matrix() + s.psd(dim, rank, a.spectral_norm()?))?;
    let phi = s.positive_map(dim);
    loewner_violation_rel(&apply_positive_map(&phi, &a)?, &apply_positive_map(&phi, &b)?)
}

fn lower_bound(s: &mut Sampler) -> Result<f64> {
    let tuple = random_tuple(s, DEFAULT_COND);
    let t = random_t(s);
    let (lo, _) = extreme_eigenvalues(&tuple)?;
    let bound = power_sum(&tuple, -t)?.inverse()?.scale(lo.powf(1.0 - t))?;
    loewner_violation_rel(&bound, &solve(t, &tuple)?)
}

fn upper_bound(s: &mut Sampler) -> Result<f64> {
    let tuple = random_tuple(s, DEFAULT_COND);
    let t = random_t(s);
    let (_, hi) = extreme_eigenvalues(&tuple)?;
    let bound = power_sum(&tuple, t)?.scale(hi.powf(1.0 - t))?;
    loewner_violation_rel(&solve(1.0 - t, &tuple)?, &bound)
}

/// Tuple whose members all lie above (`above = true`) or below the identity.
fn tuple_beside_identity(s: &mut Sampler, above: bool) -> MatrixTuple {
    let n = s.int(1, 6);
    let dim = s.int(1, 8);
    let cond = 10f64.powf(s.uniform(0.0, 4.0));
    let ms = (0..n)
        .map(|_| {
            let slack = s.uniform(1.0, 2.0);
            if above {
                s.spd(dim, cond, cond * slack)
            } else {
                s.spd(dim, cond, 1.0 / slack)
            }
        })
        .collect();
    let w = s.weights(n);
    MatrixTuple::new(ms, w).expect("consistent dimensions")
}

fn lower_bound_above_identity(s: &mut Sampler) -> Result<f64> {
    let tuple = tuple_beside_identity(s, true);
    let t = random_t(s);
    let g = solve(t, &tuple)?;
    if loewner_gap(&SpdMatrix::identity(g.dim()), &g)? < 0.0 {
        return Ok(0.0);
    }
    loewner_violation_rel(&power_sum(&tuple, -t)?.inverse()?, &g)
}

fn upper_bound_below_identity(s: &mut Sampler) -> Result<f64> {
    let tuple = tuple_beside_identity(s, false);
    let t = random_t(s);
    let g = solve(t, &tuple)?;
    if loewner_gap(&g, &SpdMatrix::identity(g.dim()))? < 0.0 {
        return Ok(0.0);
    }
    loewner_violation_rel(&g, &power_sum(&tuple, 1.0 - t)?)
}

/// Zero when `values` is strictly decreasing and ends below `cap`, otherwise a
/// positive measure of the first failure.
fn decreasing_below(values: &[f64], cap: f64) -> f64 {
    let mut worst = 0.0f64;
    for w in values.windows(2) {
        if !(w[1] < w[0]) {
            worst = worst.max(w[1] - w[0] + f64::MIN_POSITIVE);
        }
    }
    let last = values[values.len() - 1];
    if !(last < cap) {
        worst = worst.max(last - cap + f64::MIN_POSITIVE);
    }
    worst
}

fn arithmetic_limit(s: &mut Sampler) -> Result<f64> {
    let n = s.int(2, 6);
    let dim = s.int(1, 8);
    let tuple = s.normalized_tuple(n, dim, 10.0);
    let target = arithmetic_mean(&tuple);
    let d = [1e-1, 1e-2, 1e-3, 1e-4]
        .iter()
        .map(|&t| thompson(&solve(t, &tuple)?, &target))
        .collect::<Result<Vec<_>>>()?;
    Ok(decreasing_below(&d, 1e-3))
}

/// Non-commuting pairs approach the log-Euclidean mean with a strictly
/// decreasing distance. Commuting pairs do too, and at `t = 1/2` with equal
/// weights the distance is zero for every `p` because `G_{1/2}` is then `A#B`.
fn lie_trotter_trend(s: &mut Sampler) -> Result<f64> {
    const P_GRID: [f64; 3] = [1e-1, 1e-2, 1e-3];
    let dim = s.int(2, 8);
    let opts = SolverOptions::default();
    let distances = |tuple: &MatrixTuple, t: f64| -> Result<Vec<f64>> {
        Ok(lie_trotter_limit(tuple, t, &P_GRID, &opts)?.into_iter().map(|(_, d)| d).collect())
    };
    let pair = MatrixTuple::new(vec![s.spd(dim, 10.0, 1.0), s.spd(dim, 10.0, 1.0)], s.weights(2))?;
    let t = s.uniform(0.05, 0.95);
    let mut worst = decreasing_below(&distances(&pair, t)?, 1e-3);

    let diag = |s: &mut Sampler| {
        let v: Vec<f64> = (0..dim).map(|_| s.uniform(0.1, 1.0)).collect();
        SpdMatrix::from_diagonal(&v)
    };
    let commuting = MatrixTuple::new(vec![diag(s)?, diag(s)?], s.weights(2))?;
    worst = worst.max(decreasing_below(&distances(&commuting, t)?, 1e-3));
    let balanced = MatrixTuple::uniform(commuting.matrices().to_vec())?;
    for d in distances(&balanced, 0.5)? {
        worst = worst.max((d - 1e-8).max(0.0));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::decreasing_below;

    #[test]
    fn trend_detector() {
        assert_eq!(decreasing_below(&[3.0, 2.0, 1e-4], 1e-3), 0.0);
        assert!(decreasing_below(&[3.0, 3.0, 1e-4], 1e-3) > 0.0);
        assert!(decreasing_below(&[3.0, 2.0, 1e-2], 1e-3) > 0.0);
    }
}
