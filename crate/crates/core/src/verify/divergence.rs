//! Log-determinant divergence and its right mean.

use nalgebra::DMatrix;

use super::{mismatch, Invariant, DEFAULT_COND};
use crate::barycenter::{phi_gradient, phi_value, right_mean, BarycenterProblem};
use crate::error::Result;
use crate::fixed_point::{g_mean, resolvent_residual, Init, SolverOptions};
use crate::metrics::{logdet_div, qdiv_check, qdiv_default_step, thompson, Alpha};
use crate::spd::{congruence, SpdMatrix};
use crate::testkit::Sampler;

pub(super) fn invariants() -> Vec<Invariant> {
    vec![
        Invariant::new("divergence.vanishing_first_derivative", 1e-6, 100, qdiv_first),
        Invariant::new("divergence.nonnegative_second_derivative", 1e-8, 100, qdiv_second),
        Invariant::new("divergence.congruence_invariance", 1e-9, 100, congruence_invariance),
        Invariant::new("divergence.inversion_swaps_arguments", 1e-10, 100, inversion),
        Invariant::new("divergence.power_contraction", 1e-10, 100, power_contraction),
        Invariant::new("divergence.endpoint_continuity", 1e-4, 100, endpoint_continuity),
        Invariant::new("barycenter.gradient_certificate", 1e-8, 100, gradient_certificate),
        Invariant::new("barycenter.bridge_identity", 1e-8, 100, bridge_identity),
        Invariant::new("barycenter.gradient_finite_difference", 1e-5, 100, gradient_fd),
        Invariant::new("barycenter.local_optimality", 1e-12, 100, local_optimality),
        Invariant::new("barycenter.multi_start_agreement", 1e-8, 20, multi_start),
    ]
}

const RIGHT_MEAN_ALPHAS: [f64; 5] = [-0.9, -0.5, 0.0, 0.5, 0.9];

/// Interior α in `[-0.99, 0.99]`, or an endpoint one time in five.
fn random_alpha(s: &mut Sampler) -> Alpha {
    let v = if s.uniform(0.0, 1.0) < 0.2 {
        s.pick(&[-1.0, 1.0])
    } else {
        s.uniform(-0.99, 0.99)
    };
    Alpha::new(v).expect("within [-1, 1]")
}

fn unit_direction(s: &mut Sampler, dim: usize) -> DMatrix<f64> {
    let x = s.symmetric(dim);
    let n = x.norm();
    x / n
}

/// Worst `(|D′| / (1 + |D″|), −D″)` over three unit directions at a
/// well-conditioned base point.
fn qdiv_probe(s: &mut Sampler) -> Result<(f64, f64)> {
    let alpha = random_alpha(s);
    let dim = s.int(1, 8);
    let a = s.spd(dim, 10.0, 1.0);
    let dirs: Vec<_> = (0..3).map(|_| unit_direction(s, dim)).collect();
    let report = qdiv_check(alpha, &a, &dirs, qdiv_default_step(&a))?;
    let mut worst = (0.0f64, 0.0f64);
    for p in &report.probes {
        worst.0 = worst.0.max(p.first_derivative.abs() / (1.0 + p.second_derivative.abs()));
        worst.1 = worst.1.max(-p.second_derivative);
    }
    Ok(worst)
}

fn qdiv_first(s: &mut Sampler) -> Result<f64> {
    Ok(qdiv_probe(s)?.0)
}

fn qdiv_second(s: &mut Sampler) -> Result<f64> {
    Ok(qdiv_probe(s)?.1)
}

fn pair(s: &mut Sampler, cond: f64) -> (SpdMatrix, SpdMatrix) {
    let dim = s.int(1, 8);
    (s.spd_scaled(dim, cond), s.spd_scaled(dim, cond))
}

fn div(alpha: Alpha, a: &SpdMatrix, b: &SpdMatrix) -> Result<f64> {
    Ok(logdet_div(alpha, a, b)?.value)
}

fn congruence_invariance(s: &mut Sampler) -> Result<f64> {
    let alpha = random_alpha(s);
    let (a, b) = pair(s, 1e3);
    let x = s.invertible(a.dim());
    let lhs = div(alpha, &congruence(&x, &a)?, &congruence(&x, &b)?)?;
    Ok(mismatch(lhs, div(alpha, &a, &b)?))
}

fn inversion(s: &mut Sampler) -> Result<f64> {
    let alpha = random_alpha(s);
    let (a, b) = pair(s, DEFAULT_COND);
    let lhs = div(alpha, &a.inverse()?, &b.inverse()?)?;
    Ok(mismatch(lhs, div(alpha, &b, &a)?))
}

fn power_contraction(s: &mut Sampler) -> Result<f64> {
    let alpha = random_alpha(s);
    let (a, b) = pair(s, DEFAULT_COND);
    let full = div(alpha, &a, &b)?;
    let mut worst = 0.0f64;
    for k in 1..=9 {
        let t = f64::from(k) / 10.0;
        let lhs = div(alpha, &a.powf(t)?, &b.powf(t)?)?;
        worst = worst.max((lhs - t * full).max(0.0) / full.max(1.0));
    }
    Ok(worst)
}

/// The gap is first order in `1 − |α|` with a constant that grows with the
/// spread of the relative spectrum, so this runs on well-conditioned pairs.
fn endpoint_continuity(s: &mut Sampler) -> Result<f64> {
    let dim = s.int(1, 8);
    let (a, b) = (s.spd(dim, 10.0, 1.0), s.spd(dim, 10.0, 1.0));
    let mut worst = 0.0f64;
    for end in [-1.0, 1.0] {
        let near = Alpha::new(end * (1.0 - 1e-6))?;
        let exact = div(Alpha::new(end)?, &a, &b)?;
        worst = worst.max(mismatch(div(near, &a, &b)?, exact));
    }
    Ok(worst)
}

fn problem(s: &mut Sampler) -> Result<BarycenterProblem> {
    let alpha = Alpha::new(s.pick(&RIGHT_MEAN_ALPHAS))?;
    let n = s.int(1, 6);
    let dim = s.int(1, 8);
    let ms = (0..n).map(|_| s.spd(dim, 1e2, 1.0)).collect();
    BarycenterProblem::new(alpha, ms)
}

fn gradient_certificate(s: &mut Sampler) -> Result<f64> {
    let p = problem(s)?;
    let x = g_mean(p.t(), p.tuple(), &SolverOptions::default())?.solution;
    Ok(phi_gradient(&p, &x)?.norm() / p.len() as f64)
}

fn bridge_identity(s: &mut Sampler) -> Result<f64> {
    let p = problem(s)?;
    let opts = SolverOptions::default();
    let r = right_mean(&p, &opts)?;
    if r.solution != g_mean(p.t(), p.tuple(), &opts)?.solution {
        return Ok(f64::INFINITY);
    }
    resolvent_residual(&r.solution, p.t(), p.tuple())
}

fn gradient_fd(s: &mut Sampler) -> Result<f64> {
    let p = problem(s)?;
    let x = s.spd(p.tuple().dim(), 10.0, 1.0);
    let dir = unit_direction(s, x.dim());
    let h = 1e-5 * x.min_eigenvalue()?;
    let plus = SpdMatrix::new(x.matrix() + &dir * h)?;
    let minus = SpdMatrix::new(x.matrix() - &dir * h)?;
    let fd = (phi_value(&p, &plus)? - phi_value(&p, &minus)?) / (2.0 * h);
    let grad = phi_gradient(&p, &x)?;
    let scale = grad.norm().max(1e-3);
    Ok((fd - grad.dot(&dir)).abs() / scale)
}

fn local_optimality(s: &mut Sampler) -> Result<f64> {
    let p = problem(s)?;
    let x = right_mean(&p, &SolverOptions::default())?.solution;
    let v = phi_value(&p, &x)?;
    let h = 1e-3 * x.spectral_norm()?;
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let dir = unit_direction(s, x.dim());
        let y = SpdMatrix::new(x.matrix() + dir * h)?;
        worst = worst.max((v - phi_value(&p, &y)?).max(0.0) / v.max(1.0));
    }
    Ok(worst)
}

fn multi_start(s: &mut Sampler) -> Result<f64> {
    let p = problem(s)?;
    let base = right_mean(&p, &SolverOptions::default())?.solution;
    let mut worst = 0.0f64;
    for _ in 0..5 {
        let start = s.spd_scaled(p.tuple().dim(), 1e2);
        let opts = SolverOptions {
            init: Init::Custom(start),
            ..SolverOptions::default()
        };
        worst = worst.max(thompson(&right_mean(&p, &opts)?.solution, &base)?);
    }
    Ok(worst)
}
