//! Fixed-point matrix means.
//!
//! The central object is `G_t(ω; 𝔸)`, the unique SPD solution of
//!
//! ```text
//! X = [ Σ wᵢ ((1−t) X + t Aᵢ)⁻¹ ]⁻¹ ,   t ∈ (0, 1]
//! ```
//!
//! which interpolates between the arithmetic mean (`t → 0⁺`) and the harmonic mean
//! (`t = 1`). The power, Cartan, Wasserstein and Rényi power means are provided as
//! comparison baselines, each solved by its own fixed-point iteration.

mod baselines;
mod g_mean;
mod special;

pub use baselines::{cartan_mean, karcher_residual, power_mean, renyi_power_mean, wasserstein_mean};
pub use g_mean::{g_mean, g_mean_map, resolvent_residual, CERTIFICATE_LIMIT};
pub use special::{closed_form_two, contraction_check, lie_trotter_limit, log_euclidean_mean, two_tuple};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::thompson;
use crate::spd::SpdMatrix;
use crate::two_means::{arithmetic_mean, harmonic_mean, MatrixTuple};

/// Starting point of an iteration.
#[derive(Debug, Clone, PartialEq)]
pub enum Init {
    ArithmeticMean,
    HarmonicMean,
    Identity,
    Custom(SpdMatrix),
}

/// Iteration control shared by every solver.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    /// Convergence threshold on the Thompson distance between successive iterates.
    pub tol: f64,
    pub max_iter: usize,
    pub init: Init,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 10_000,
            init: Init::ArithmeticMean,
        }
    }
}

impl SolverOptions {
    pub fn new(tol: f64, max_iter: usize, init: Init) -> Result<Self> {
        let opts = Self {
            tol,
            max_iter,
            init,
        };
        opts.validate()?;
        Ok(opts)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::ParameterOutOfRange {
                name: "tol",
                value: self.tol,
                expected: "positive finite",
            });
        }
        if self.max_iter == 0 {
            return Err(Error::ParameterOutOfRange {
                name: "max_iter",
                value: 0.0,
                expected: ">= 1",
            });
        }
        Ok(())
    }

    pub(crate) fn start(&self, tuple: &MatrixTuple) -> Result<SpdMatrix> {
        let x = match &self.init {
            Init::ArithmeticMean => arithmetic_mean(tuple),
            Init::HarmonicMean => harmonic_mean(tuple)?,
            Init::Identity => SpdMatrix::identity(tuple.dim()),
            Init::Custom(m) => {
                crate::error::check_dims(tuple.dim(), m.dim())?;
                m.clone()
            }
        };
        Ok(x)
    }

    /// Same options with the custom starting point (if any) replaced by its inverse.
    pub(crate) fn inverted_init(&self) -> Result<Self> {
        let init = match &self.init {
            Init::Custom(m) => Init::Custom(m.inverse()?),
            Init::ArithmeticMean => Init::HarmonicMean,
            Init::HarmonicMean => Init::ArithmeticMean,
            Init::Identity => Init::Identity,
        };
        Ok(Self {
            init,
            ..self.clone()
        })
    }
}

/// How a solution was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    /// Single matrix, constant tuple, or a closed-form endpoint.
    Direct,
    /// `t = 0`: the arithmetic mean by convention, no equation is solved.
    ArithmeticConvention,
    /// Iteration of `X ↦ [Σ wᵢ((1−t)X + tAᵢ)⁻¹]⁻¹`.
    ResolventPrimal,
    /// Iteration of the dual form `X ↦ Σ wᵢ(tX⁻¹ + (1−t)Aᵢ⁻¹)⁻¹`.
    ResolventDual,
    PowerFixedPoint,
    KarcherExponential,
    WassersteinFixedPoint,
    RenyiFixedPoint,
}

/// Solution of a mean computation plus convergence diagnostics.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub solution: SpdMatrix,
    pub iterations: usize,
    /// Thompson distance between the last two iterates.
    pub residual: f64,
    /// Frobenius norm of the defining equation's residual at the solution.
    pub fixed_point_residual: f64,
    /// Contraction factor of the iteration map, in `[0, 1)`.
    pub contraction_estimate: f64,
    /// Resolvent-form residual, a solver-independent certificate (G_t only).
    pub certificate: Option<f64>,
    pub method: SolveMethod,
}

impl SolveReport {
    pub(crate) fn direct(solution: SpdMatrix, method: SolveMethod) -> Self {
        Self {
            solution,
            iterations: 0,
            residual: 0.0,
            fixed_point_residual: 0.0,
            contraction_estimate: 0.0,
            certificate: None,
            method,
        }
    }

    /// Whether the solution is the `t = 0` arithmetic-mean convention.
    pub fn is_convention(&self) -> bool {
        self.method == SolveMethod::ArithmeticConvention
    }
}

pub(crate) struct Iterated {
    pub solution: SpdMatrix,
    pub iterations: usize,
    pub residual: f64,
    /// Ratio of the last two step sizes, clamped into `[0, 1)`.
    pub observed_rate: f64,
}

/// Plain Picard iteration `X ← step(X)` stopped when the Thompson distance between
/// successive iterates is at most `opts.tol`, or once steps have reached the
/// round-off level of the Thompson distance (see [`noise_floor`] and
/// [`STALL_WINDOW`]). Every iterate is symmetrized by construction of [`SpdMatrix`].
pub(crate) fn picard(
    start: SpdMatrix,
    opts: &SolverOptions,
    method: SolveMethod,
    mut step: impl FnMut(&SpdMatrix) -> Result<SpdMatrix>,
) -> Result<Iterated> {
    opts.validate()?;
    let mut x = start;
    let mut best = (f64::INFINITY, x.clone(), 0usize);
    let mut prev_residual = f64::NAN;
    for k in 1..=opts.max_iter {
        let next = step(&x)?;
        let residual = thompson(&x, &next)?;
        let observed_rate = if prev_residual > 0.0 {
            (residual / prev_residual).clamp(0.0, 1.0 - f64::EPSILON)
        } else {
            0.0
        };
        if residual < best.0 {
            best = (residual, next.clone(), k);
        }
        x = next;
        if residual <= opts.tol || (residual <= NOISE_CHECK && residual <= noise_floor(&x)?) {
            return polish(x, k, residual, observed_rate, opts.max_iter, &mut step);
        }
        if best.0 <= NOISE_CHECK && k - best.2 >= STALL_WINDOW {
            return Ok(Iterated {
                solution: best.1,
                iterations: k,
                residual: best.0,
                observed_rate,
            });
        }
        prev_residual = residual;
    }
    Err(Error::MaxIterExceeded {
        best: Box::new(SolveReport {
            solution: best.1,
            iterations: opts.max_iter,
            residual: best.0,
            fixed_point_residual: f64::NAN,
            contraction_estimate: f64::NAN,
            certificate: None,
            method,
        }),
    })
}

/// Iterations without a new smallest step, once steps are below [`NOISE_CHECK`],
/// after which the iteration is declared stalled at round-off and the best
/// iterate is returned.
pub(crate) const STALL_WINDOW: usize = 100;

/// Steps above this size are never attributed to round-off.
pub(crate) const NOISE_CHECK: f64 = 1e-9;

/// Resolution of the Thompson distance at `x`: `8 ε κ(x)`. Successive iterates
/// closer than this cannot be told apart, so the iteration stops there even if
/// `tol` is smaller.
fn noise_floor(x: &SpdMatrix) -> Result<f64> {
    let ev = x.eigenvalues()?;
    Ok(8.0 * f64::EPSILON * ev[0] / ev[ev.len() - 1])
}

/// Polishing ends after this many iterations without a new smallest step.
const POLISH_WINDOW: usize = 20;

/// Continues past the stopping point while steps keep reaching new minima
/// (bounded by `max_iter`) and returns the iterate after the smallest step. This
/// removes the `tol · ρ/(1−ρ)` bias of slow contractions; once steps reach
/// round-off it ends after [`POLISH_WINDOW`] iterations.
fn polish(
    x: SpdMatrix,
    iterations: usize,
    residual: f64,
    observed_rate: f64,
    max_iter: usize,
    step: &mut impl FnMut(&SpdMatrix) -> Result<SpdMatrix>,
) -> Result<Iterated> {
    let mut best = Iterated {
        solution: x.clone(),
        iterations,
        residual,
        observed_rate,
    };
    let (mut x, mut k, mut prev) = (x, iterations, residual);
    while best.residual > 0.0 && k < max_iter && k - best.iterations < POLISH_WINDOW {
        let next = step(&x)?;
        let r = thompson(&x, &next)?;
        k += 1;
        if r < best.residual {
            best = Iterated {
                solution: next.clone(),
                iterations: k,
                residual: r,
                observed_rate: if prev > 0.0 {
                    (r / prev).clamp(0.0, 1.0 - f64::EPSILON)
                } else {
                    0.0
                },
            };
        }
        prev = r;
        x = next;
    }
    best.iterations = k;
    Ok(best)
}

pub(crate) fn check_unit_interval(name: &'static str, t: f64) -> Result<()> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(Error::ParameterOutOfRange {
            name,
            value: t,
            expected: "[0, 1]",
        })
    }
}
