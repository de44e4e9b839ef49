//! Seeded property suites. Each invariant is checked on a batch of random
//! instances; every instance reports a violation (0 when the property holds
//! exactly) and the invariant passes when the largest violation is within its
//! tolerance. Failing instances can be replayed from `(seed, stream)`.

mod bounds;
mod divergence;
mod ordering;
mod properties;
mod thompson;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fixed_point::{g_mean, SolverOptions};
use crate::spd::{loewner_gap, SpdMatrix};
use crate::testkit::Sampler;
use crate::two_means::MatrixTuple;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Thompson,
    Properties,
    Ordering,
    Bounds,
    Divergence,
    All,
}

impl Suite {
    pub const NAMES: [&'static str; 6] = [
        "thompson",
        "properties",
        "ordering",
        "bounds",
        "divergence",
        "all",
    ];

    fn members(self) -> Vec<Suite> {
        match self {
            Suite::All => vec![
                Suite::Thompson,
                Suite::Properties,
                Suite::Ordering,
                Suite::Bounds,
                Suite::Divergence,
            ],
            s => vec![s],
        }
    }

    fn invariants(self) -> Vec<Invariant> {
        match self {
            Suite::Thompson => thompson::invariants(),
            Suite::Properties => properties::invariants(),
            Suite::Ordering => ordering::invariants(),
            Suite::Bounds => bounds::invariants(),
            Suite::Divergence => divergence::invariants(),
            Suite::All => Vec::new(),
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let i = match self {
            Suite::Thompson => 0,
            Suite::Properties => 1,
            Suite::Ordering => 2,
            Suite::Bounds => 3,
            Suite::Divergence => 4,
            Suite::All => 5,
        };
        f.write_str(Self::NAMES[i])
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "thompson" => Suite::Thompson,
            "properties" => Suite::Properties,
            "ordering" => Suite::Ordering,
            "bounds" => Suite::Bounds,
            "divergence" => Suite::Divergence,
            "all" => Suite::All,
            other => {
                return Err(Error::PreconditionViolated(format!(
                    "unknown suite '{other}', expected one of {}",
                    Self::NAMES.join(", ")
                )))
            }
        })
    }
}

/// One instance check: draws its inputs from the sampler and returns the violation.
type Check = fn(&mut Sampler) -> Result<f64>;

pub(crate) struct Invariant {
    name: &'static str,
    tolerance: f64,
    /// Instances run per 100 of the requested count.
    per_hundred: usize,
    check: Check,
}

impl Invariant {
    const fn new(name: &'static str, tolerance: f64, per_hundred: usize, check: Check) -> Self {
        Self {
            name,
            tolerance,
            per_hundred,
            check,
        }
    }

    fn instances(&self, count: usize) -> usize {
        (count * self.per_hundred).div_ceil(100).max(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Replay {
    pub seed: u64,
    pub stream: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct InvariantResult {
    pub suite: Suite,
    pub invariant: &'static str,
    pub instances: usize,
    pub max_violation: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// Instance with the largest violation, present when the invariant failed.
    pub replay: Option<Replay>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub suite: Suite,
    pub seed: u64,
    pub count: usize,
    pub results: Vec<InvariantResult>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.results.iter().all(|r| r.pass)
    }

    pub fn first_failure(&self) -> Option<&InvariantResult> {
        self.results.iter().find(|r| !r.pass)
    }
}

/// Stream of instance `k` of an invariant: FNV-1a of the name, offset by `k`.
fn stream_of(name: &str, k: usize) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in name.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h.wrapping_add(k as u64)
}

fn run_invariant(suite: Suite, inv: &Invariant, seed: u64, count: usize) -> InvariantResult {
    let n = inv.instances(count);
    let outcomes: Vec<(u64, Result<f64>)> = (0..n)
        .into_par_iter()
        .map(|k| {
            let stream = stream_of(inv.name, k);
            (stream, (inv.check)(&mut Sampler::new(seed, stream)))
        })
        .collect();
    let mut worst = (0.0f64, None::<u64>);
    let mut error = None;
    for (stream, outcome) in outcomes {
        let v = match outcome {
            Ok(v) if v.is_nan() => f64::INFINITY,
            Ok(v) => v,
            Err(e) => {
                error.get_or_insert_with(|| format!("stream {stream}: {e}"));
                f64::INFINITY
            }
        };
        if worst.1.is_none() || v > worst.0 {
            worst = (v, Some(stream));
        }
    }
    let pass = worst.0 <= inv.tolerance;
    InvariantResult {
        suite,
        invariant: inv.name,
        instances: n,
        max_violation: worst.0,
        tolerance: inv.tolerance,
        pass,
        replay: (!pass).then(|| Replay {
            seed,
            stream: worst.1.expect("at least one instance"),
        }),
        error,
    }
}

/// Runs every invariant of `suite` with `count` as the base instance count
/// (invariants that need larger samples scale it up).
pub fn run(suite: Suite, seed: u64, count: usize) -> Result<VerifyReport> {
    if count == 0 {
        return Err(Error::ParameterOutOfRange {
            name: "count",
            value: 0.0,
            expected: ">= 1",
        });
    }
    let mut results = Vec::new();
    for s in suite.members() {
        for inv in s.invariants() {
            results.push(run_invariant(s, &inv, seed, count));
        }
    }
    Ok(VerifyReport {
        suite,
        seed,
        count,
        results,
    })
}

/// Names of all invariants in `suite`, in report order.
pub fn invariant_names(suite: Suite) -> Vec<&'static str> {
    suite
        .members()
        .into_iter()
        .flat_map(|s| s.invariants().into_iter().map(|i| i.name))
        .collect()
}

/// Re-runs a single instance of the named invariant and returns its violation.
pub fn replay(invariant: &str, replay: Replay) -> Result<f64> {
    let inv = Suite::All
        .members()
        .into_iter()
        .flat_map(Suite::invariants)
        .find(|i| i.name == invariant)
        .ok_or_else(|| Error::PreconditionViolated(format!("unknown invariant '{invariant}'")))?;
    (inv.check)(&mut Sampler::new(replay.seed, replay.stream))
}

// Shared instance helpers.

const DEFAULT_COND: f64 = 1e4;
const T_GRID: [f64; 10] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0];

/// Random weighted tuple: 1–6 matrices of size 1–8, condition number up to `cond`.
fn random_tuple(s: &mut Sampler, cond: f64) -> MatrixTuple {
    let n = s.int(1, 6);
    let dim = s.int(1, 8);
    s.tuple(n, dim, cond)
}

fn random_t(s: &mut Sampler) -> f64 {
    s.uniform(0.02, 1.0)
}

fn solve(t: f64, tuple: &MatrixTuple) -> Result<SpdMatrix> {
    Ok(g_mean(t, tuple, &SolverOptions::default())?.solution)
}

/// How far `A ≤ B` fails: `max(0, −λ_min(B − A))`.
fn loewner_violation(a: &SpdMatrix, b: &SpdMatrix) -> Result<f64> {
    Ok((-loewner_gap(a, b)?).max(0.0))
}

/// Same as [`loewner_violation`] after dividing both sides by `‖B‖`.
fn loewner_violation_rel(a: &SpdMatrix, b: &SpdMatrix) -> Result<f64> {
    Ok(loewner_violation(a, b)? / b.spectral_norm()?.max(1.0))
}

/// `max(0, lhs − rhs) / max(1, |rhs|)`.
fn excess(lhs: f64, rhs: f64) -> f64 {
    (lhs - rhs).max(0.0) / rhs.abs().max(1.0)
}

/// `|a − b| / max(1, |b|)`.
fn mismatch(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for name in Suite::NAMES {
            assert_eq!(name.parse::<Suite>().unwrap().to_string(), name);
        }
        assert!("nope".parse::<Suite>().is_err());
    }

    #[test]
    fn invariant_names_are_unique() {
        let names = invariant_names(Suite::All);
        let mut sorted = names.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), names.len());
    }

    #[test]
    fn report_is_deterministic() {
        let a = run(Suite::Thompson, 7, 3).unwrap();
        let b = run(Suite::Thompson, 7, 3).unwrap();
        for (x, y) in a.results.iter().zip(&b.results) {
            assert_eq!(x.max_violation.to_bits(), y.max_violation.to_bits());
        }
    }

    #[test]
    fn replay_reproduces_an_instance() {
        let name = invariant_names(Suite::Thompson)[0];
        let r = Replay { seed: 3, stream: stream_of(name, 0) };
        assert_eq!(replay(name, r).unwrap().to_bits(), replay(name, r).unwrap().to_bits());
        assert!(replay("missing", r).is_err());
    }
}
