//! Evidence gathering for two open relationships of `G_t`. Nothing here is
//! asserted: each run reports what it observed.
//!
//! * `g-vs-cartan`: is `G_t ≥ Λ` for `t ≤ 1/2` and `G_t ≤ Λ` for `t ≥ 1/2`?
//! * `log-majorization`: for `t ∈ [1/2, 1]`, does `G_t(½, ½; Aᵖ, Bᵖ)^{1/p}` stay
//!   weakly log-majorized by the log-Euclidean mean of `A, B` as `p → 0⁺`?

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fixed_point::{cartan_mean, g_mean, log_euclidean_mean, SolverOptions};
use crate::metrics::thompson;
use crate::spd::{loewner_gap, SpdMatrix};
use crate::testkit::Sampler;
use crate::two_means::{MatrixTuple, WeightVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Conjecture {
    #[serde(rename = "g-vs-cartan")]
    GVsCartan,
    #[serde(rename = "log-majorization")]
    LogMajorization,
}

impl Conjecture {
    pub const NAMES: [&'static str; 2] = ["g-vs-cartan", "log-majorization"];
}

impl fmt::Display for Conjecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Conjecture::GVsCartan => Self::NAMES[0],
            Conjecture::LogMajorization => Self::NAMES[1],
        })
    }
}

impl FromStr for Conjecture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "g-vs-cartan" => Ok(Conjecture::GVsCartan),
            "log-majorization" => Ok(Conjecture::LogMajorization),
            other => Err(Error::PreconditionViolated(format!(
                "unknown conjecture '{other}', expected one of {}",
                Self::NAMES.join(", ")
            ))),
        }
    }
}

/// Loewner relation of `G_t` to `Λ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    Equal,
    /// `G_t ≥ Λ`
    Above,
    /// `G_t ≤ Λ`
    Below,
    Incomparable,
}

impl Relation {
    fn classify(g: &SpdMatrix, lambda: &SpdMatrix) -> Result<(Self, f64, f64)> {
        let lo = loewner_gap(lambda, g)?;
        let hi = -loewner_gap(g, lambda)?;
        let tol = RELATION_TOL * g.spectral_norm()?.max(lambda.spectral_norm()?);
        let rel = match (lo >= -tol, hi <= tol) {
            (true, true) => Relation::Equal,
            (true, false) => Relation::Above,
            (false, true) => Relation::Below,
            (false, false) => Relation::Incomparable,
        };
        Ok((rel, lo, hi))
    }

    /// Whether this relation is the one conjectured at `t`.
    fn conforms(self, t: f64) -> bool {
        self == Relation::Equal
            || (t < 0.5 && self == Relation::Above)
            || (t > 0.5 && self == Relation::Below)
    }
}

/// Eigenvalues of `G_t − Λ` within this multiple of the scale count as zero.
const RELATION_TOL: f64 = 1e-9;

const CARTAN_T_GRID: [f64; 5] = [0.1, 0.25, 0.5, 0.75, 0.9];
const MAJORIZATION_T_GRID: [f64; 3] = [0.5, 0.75, 1.0];
pub const P_GRID: [f64; 7] = [1.0, 0.5, 0.25, 0.1, 0.05, 0.01, 0.001];

#[derive(Debug, Clone, Serialize)]
pub struct CartanInstance {
    pub instance: usize,
    pub t: f64,
    pub relation: Option<Relation>,
    /// Smallest and largest eigenvalue of `G_t − Λ`.
    pub eigen_range: Option<(f64, f64)>,
    pub conforms: Option<bool>,
    pub error: Option<String>,
    /// Inputs and both means, kept for non-conforming instances.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Witness {
    pub weights: Vec<f64>,
    pub matrices: Vec<Vec<Vec<f64>>>,
    pub g_mean: Vec<Vec<f64>>,
    pub cartan_mean: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MajorizationInstance {
    pub instance: usize,
    pub t: f64,
    /// `(p, gap, Thompson distance)` per grid point; the gap is the largest
    /// excess of the partial log-eigenvalue sums of `G_t(Aᵖ, Bᵖ)^{1/p}` over
    /// those of the log-Euclidean mean, 0 when weak log-majorization holds.
    pub profile: Vec<(f64, f64, f64)>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "conjecture", rename_all = "kebab-case")]
pub enum ExploreReport {
    GVsCartan {
        seed: u64,
        count: usize,
        conforming: usize,
        non_conforming: usize,
        failed: usize,
        instances: Vec<CartanInstance>,
    },
    LogMajorization {
        seed: u64,
        count: usize,
        /// Instances with a positive gap at some `p`.
        with_gap: usize,
        max_gap: f64,
        failed: usize,
        instances: Vec<MajorizationInstance>,
    },
}

/// Random instances drawn from `(seed, k)` for `k < count`, or the given
/// tuple evaluated once at `t` when `fixed` is set.
pub fn explore(
    conjecture: Conjecture,
    seed: u64,
    count: usize,
    fixed: Option<(&MatrixTuple, f64)>,
    opts: &SolverOptions,
) -> Result<ExploreReport> {
    if count == 0 && fixed.is_none() {
        return Err(Error::ParameterOutOfRange {
            name: "count",
            value: 0.0,
            expected: ">= 1",
        });
    }
    match conjecture {
        Conjecture::GVsCartan => {
            let instances: Vec<CartanInstance> = match fixed {
                Some((tuple, t)) => vec![cartan_instance(0, t, tuple, opts)],
                None => (0..count)
                    .into_par_iter()
                    .map(|k| {
                        let mut s = Sampler::new(seed, k as u64);
                        let t = s.pick(&CARTAN_T_GRID);
                        let n = s.int(2, 4);
                        let dim = s.int(2, 4);
                        cartan_instance(k, t, &s.tuple(n, dim, 1e2), opts)
                    })
                    .collect(),
            };
            let conforming = instances.iter().filter(|i| i.conforms == Some(true)).count();
            let non_conforming = instances.iter().filter(|i| i.conforms == Some(false)).count();
            Ok(ExploreReport::GVsCartan {
                seed,
                count: instances.len(),
                conforming,
                non_conforming,
                failed: instances.len() - conforming - non_conforming,
                instances,
            })
        }
        Conjecture::LogMajorization => {
            let instances: Vec<MajorizationInstance> = match fixed {
                Some((tuple, t)) => {
                    if tuple.len() != 2 {
                        return Err(Error::PreconditionViolated(format!(
                            "log-majorization needs exactly two matrices, got {}",
                            tuple.len()
                        )));
                    }
                    let m = tuple.matrices();
                    vec![majorization_instance(0, t, &m[0], &m[1], opts)]
                }
                None => (0..count)
                    .into_par_iter()
                    .map(|k| {
                        let mut s = Sampler::new(seed, k as u64);
                        let t = s.pick(&MAJORIZATION_T_GRID);
                        let dim = s.int(2, 4);
                        let (a, b) = (s.spd_scaled(dim, 1e2), s.spd_scaled(dim, 1e2));
                        majorization_instance(k, t, &a, &b, opts)
                    })
                    .collect(),
            };
            let with_gap = instances
                .iter()
                .filter(|i| i.profile.iter().any(|&(_, gap, _)| gap > 0.0))
                .count();
            let max_gap = instances
                .iter()
                .flat_map(|i| i.profile.iter().map(|&(_, gap, _)| gap))
                .fold(0.0, f64::max);
            Ok(ExploreReport::LogMajorization {
                seed,
                count: instances.len(),
                with_gap,
                max_gap,
                failed: instances.iter().filter(|i| i.error.is_some()).count(),
                instances,
            })
        }
    }
}

fn cartan_instance(k: usize, t: f64, tuple: &MatrixTuple, opts: &SolverOptions) -> CartanInstance {
    let outcome = (|| {
        let g = g_mean(t, tuple, opts)?.solution;
        let lambda = cartan_mean(tuple, opts)?.solution;
        let (rel, lo, hi) = Relation::classify(&g, &lambda)?;
        Ok::<_, Error>((g, lambda, rel, lo, hi))
    })();
    match outcome {
        Ok((g, lambda, rel, lo, hi)) => {
            let conforms = rel.conforms(t);
            CartanInstance {
                instance: k,
                t,
                relation: Some(rel),
                eigen_range: Some((lo, hi)),
                conforms: Some(conforms),
                error: None,
                witness: (!conforms).then(|| Witness {
                    weights: tuple.weights().as_slice().to_vec(),
                    matrices: tuple.matrices().iter().map(SpdMatrix::to_rows).collect(),
                    g_mean: g.to_rows(),
                    cartan_mean: lambda.to_rows(),
                }),
            }
        }
        Err(e) => CartanInstance {
            instance: k,
            t,
            relation: None,
            eigen_range: None,
            conforms: None,
            error: Some(e.to_string()),
            witness: None,
        },
    }
}

fn majorization_instance(
    k: usize,
    t: f64,
    a: &SpdMatrix,
    b: &SpdMatrix,
    opts: &SolverOptions,
) -> MajorizationInstance {
    let outcome = (|| {
        let pair = MatrixTuple::new(vec![a.clone(), b.clone()], WeightVector::uniform(2)?)?;
        let target = log_euclidean_mean(&pair)?;
        P_GRID
            .iter()
            .map(|&p| {
                let g = g_mean(t, &pair.powered(p)?, opts)?.solution.powf(1.0 / p)?;
                Ok((p, weak_log_majorization_gap(&g, &target)?, thompson(&g, &target)?))
            })
            .collect::<Result<Vec<_>>>()
    })();
    match outcome {
        Ok(profile) => MajorizationInstance {
            instance: k,
            t,
            profile,
            error: None,
        },
        Err(e) => MajorizationInstance {
            instance: k,
            t,
            profile: Vec::new(),
            error: Some(e.to_string()),
        },
    }
}

/// Relative log-sum slack below which partial sums count as equal.
const GAP_TOL: f64 = 1e-10;

/// `max_k Σ_{i≤k} (log λᵢ(X) − log λᵢ(Y))` over decreasingly ordered
/// eigenvalues, clamped at 0 after removing round-off.
pub fn weak_log_majorization_gap(x: &SpdMatrix, y: &SpdMatrix) -> Result<f64> {
    let sorted_logs = |m: &SpdMatrix| -> Result<Vec<f64>> {
        let mut v = m.eigenvalues()?;
        v.sort_by(|a, b| b.total_cmp(a));
        Ok(v.into_iter().map(f64::ln).collect())
    };
    let (lx, ly) = (sorted_logs(x)?, sorted_logs(y)?);
    let (mut sx, mut sy, mut gap) = (0.0, 0.0, 0.0f64);
    for (a, b) in lx.iter().zip(&ly) {
        sx += a;
        sy += b;
        let slack = GAP_TOL * (1.0 + sx.abs().max(sy.abs()));
        if sx - sy > slack {
            gap = gap.max(sx - sy);
        }
    }
    Ok(gap)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triple() -> MatrixTuple {
        let m = |a, b| SpdMatrix::from_row_slice(2, &[a, b, b, a]).unwrap();
        MatrixTuple::uniform(vec![m(2.0, -1.0), m(3.0, -2.0), m(2.0, 1.0)]).unwrap()
    }

    #[test]
    fn names_round_trip() {
        for name in Conjecture::NAMES {
            assert_eq!(name.parse::<Conjecture>().unwrap().to_string(), name);
        }
        assert!("other".parse::<Conjecture>().is_err());
    }

    #[test]
    fn triple_separates_g_from_cartan() {
        let tuple = triple();
        let r = explore(Conjecture::GVsCartan, 0, 1, Some((&tuple, 0.5)), &SolverOptions::default())
            .unwrap();
        let ExploreReport::GVsCartan { instances, non_conforming, .. } = r else {
            panic!("wrong report kind")
        };
        assert_eq!(non_conforming, 1);
        assert_ne!(instances[0].relation, Some(Relation::Equal));
        let w = instances[0].witness.as_ref().unwrap();
        assert!((w.g_mean[0][1] + 0.53074303).abs() < 1e-6);
        assert!((w.cartan_mean[0][1] + 0.51198125).abs() < 1e-6);
    }

    #[test]
    fn constant_tuples_are_equal() {
        let a = SpdMatrix::from_row_slice(2, &[3.0, 1.0, 1.0, 2.0]).unwrap();
        let tuple = MatrixTuple::uniform(vec![a.clone(), a.clone(), a]).unwrap();
        for t in CARTAN_T_GRID {
            let r = explore(Conjecture::GVsCartan, 0, 1, Some((&tuple, t)), &SolverOptions::default())
                .unwrap();
            let ExploreReport::GVsCartan { instances, .. } = r else { panic!() };
            assert_eq!(instances[0].relation, Some(Relation::Equal));
        }
    }

    #[test]
    fn commuting_pairs_have_no_gap() {
        let a = SpdMatrix::from_diagonal(&[4.0, 0.5, 2.0]).unwrap();
        let b = SpdMatrix::from_diagonal(&[0.25, 3.0, 2.0]).unwrap();
        let pair = MatrixTuple::uniform(vec![a, b]).unwrap();
        for t in MAJORIZATION_T_GRID {
            let r = explore(Conjecture::LogMajorization, 0, 1, Some((&pair, t)), &SolverOptions::default())
                .unwrap();
            let ExploreReport::LogMajorization { max_gap, failed, .. } = r else { panic!() };
            assert_eq!((max_gap, failed), (0.0, 0));
        }
    }

    #[test]
    fn gap_detects_a_larger_spectrum() {
        let x = SpdMatrix::from_diagonal(&[3.0, 1.0]).unwrap();
        let y = SpdMatrix::from_diagonal(&[2.0, 1.5]).unwrap();
        assert!((weak_log_majorization_gap(&x, &y).unwrap() - 1.5f64.ln()).abs() < 1e-15);
        assert_eq!(weak_log_majorization_gap(&y, &x).unwrap(), 0.0);
    }

    #[test]
    fn random_runs_are_deterministic() {
        let opts = SolverOptions::default();
        let a = serde_json::to_string(&explore(Conjecture::GVsCartan, 5, 6, None, &opts).unwrap()).unwrap();
        let b = serde_json::to_string(&explore(Conjecture::GVsCartan, 5, 6, None, &opts).unwrap()).unwrap();
        assert_eq!(a, b);
    }
}
