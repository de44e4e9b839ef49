//! Loewner orderings between `G_t`, the power means and the Cartan mean.

use super::{loewner_violation_rel, random_tuple, solve, Invariant, DEFAULT_COND, T_GRID};
use crate::error::Result;
use crate::fixed_point::{cartan_mean, power_mean, SolverOptions};
use crate::spd::SpdMatrix;
use crate::testkit::Sampler;
use crate::two_means::{arithmetic_mean, MatrixTuple};

pub(super) fn invariants() -> Vec<Invariant> {
    vec![
        Invariant::new("g_mean.monotone_in_t", 1e-8, 100, monotone_in_t),
        Invariant::new("g_mean.above_power_mean_neg_t", 1e-8, 100, above_power_mean),
        Invariant::new("g_mean.one_minus_t_below_power_mean", 1e-8, 100, below_power_mean),
        Invariant::new("cartan.below_arithmetic", 1e-8, 100, cartan_below_arithmetic),
        Invariant::new("power_mean.chain_through_cartan", 1e-8, 100, power_chain),
    ]
}

const POWER_GRID: [f64; 4] = [0.25, 0.5, 0.75, 1.0];

fn power(t: f64, tuple: &MatrixTuple) -> Result<SpdMatrix> {
    Ok(power_mean(t, tuple, &SolverOptions::default())?.solution)
}

fn cartan(tuple: &MatrixTuple) -> Result<SpdMatrix> {
    Ok(cartan_mean(tuple, &SolverOptions::default())?.solution)
}

fn monotone_in_t(s: &mut Sampler) -> Result<f64> {
    let tuple = random_tuple(s, DEFAULT_COND);
    let g = T_GRID
        .iter()
        .map(|&t| solve(t, &tuple))
        .collect::<Result<Vec<_>>>()?;
    let mut worst = 0.0f64;
    for (i, small) in g.iter().enumerate() {
        for big_t in &g[i + 1..] {
            worst = worst.max(loewner_violation_rel(big_t, small)?);
        }
    }
    Ok(worst)
}

fn above_power_mean(s: &mut Sampler) -> Result<f64> {
    let tuple = random_tuple(s, DEFAULT_COND);
    let mut worst = 0.0f64;
    for t in POWER_GRID {
        worst = worst.max(loewner_violation_rel(&power(-t, &tuple)?, &solve(t, &tuple)?)?);
    }
    Ok(worst)
}

fn below_power_mean(s: &mut Sampler) -> Result<f64> {
    let tuple = random_tuple(s, DEFAULT_COND);
    let mut worst = 0.0f64;
    for t in POWER_GRID {
        worst = worst.max(loewner_violation_rel(&solve(1.0 - t, &tuple)?, &power(t, &tuple)?)?);
    }
    Ok(worst)
}

fn cartan_below_arithmetic(s: &mut Sampler) -> Result<f64> {
    let tuple = random_tuple(s, DEFAULT_COND);
    loewner_violation_rel(&cartan(&tuple)?, &arithmetic_mean(&tuple))
}

fn power_chain(s: &mut Sampler) -> Result<f64> {
    let tuple = random_tuple(s, DEFAULT_COND);
    let mut worst = 0.0f64;
    let lambda = cartan(&tuple)?;
    for p in [0.25, 0.75] {
        let chain = [
            power(-1.0, &tuple)?,
            power(-p, &tuple)?,
            lambda.clone(),
            power(p, &tuple)?,
            power(1.0, &tuple)?,
        ];
        for w in chain.windows(2) {
            worst = worst.max(loewner_violation_rel(&w[0], &w[1])?);
        }
    }
    Ok(worst)
}
