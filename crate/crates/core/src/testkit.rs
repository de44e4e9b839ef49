//! Deterministic random instances for the property suites.
//!
//! All randomness comes from ChaCha8 keyed by a 64-bit seed, with an independent
//! 64-bit stream id per instance (`ChaCha8Rng::seed_from_u64(seed)` followed by
//! `set_stream(stream)`). Instance `k` of a suite therefore replays exactly from
//! `(seed, k)` on any platform and regardless of thread scheduling.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::error::{check_dims, Error, Result};
use crate::spd::{symmetric_eigenvalues, symmetrize, SpdMatrix};
use crate::two_means::{MatrixTuple, WeightVector};

/// Smallest weight produced by the generators before renormalization.
pub const WEIGHT_FLOOR: f64 = 1e-6;

/// Seeded generator for instance `stream` of a run with master `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Parameters of [`random_spd`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpdGenSpec {
    dim: usize,
    cond_max: f64,
    scale: f64,
    seed: u64,
}

impl SpdGenSpec {
    pub fn new(dim: usize, cond_max: f64, scale: f64, seed: u64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::ParameterOutOfRange {
                name: "dim",
                value: 0.0,
                expected: ">= 1",
            });
        }
        if !(cond_max >= 1.0 && cond_max.is_finite()) {
            return Err(Error::ParameterOutOfRange {
                name: "cond_max",
                value: cond_max,
                expected: ">= 1",
            });
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::ParameterOutOfRange {
                name: "scale",
                value: scale,
                expected: "> 0",
            });
        }
        Ok(Self {
            dim,
            cond_max,
            scale,
            seed,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cond_max(&self) -> f64 {
        self.cond_max
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

/// `Q diag(λ) Qᵀ` with `Q` from the QR factorization of a Gaussian matrix and
/// `λ` log-uniform in `[scale/cond_max, scale]`.
pub fn random_spd(spec: &SpdGenSpec) -> SpdMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    spd_from_rng(&mut rng, spec.dim, spec.cond_max, spec.scale)
}

fn spd_from_rng<R: Rng>(rng: &mut R, dim: usize, cond_max: f64, scale: f64) -> SpdMatrix {
    let q = orthogonal(rng, dim);
    let log_c = cond_max.ln();
    let lambdas: Vec<f64> = (0..dim)
        .map(|_| {
            if log_c == 0.0 {
                scale
            } else {
                scale * (-log_c * rng.random::<f64>()).exp()
            }
        })
        .collect();
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(lambdas));
    SpdMatrix::from_trusted(&q * d * q.transpose())
}

fn gaussian_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

fn orthogonal<R: Rng>(rng: &mut R, dim: usize) -> DMatrix<f64> {
    gaussian_matrix(rng, dim, dim).qr().q()
}

/// Normalized exponentials, floored at `1e-6` and renormalized.
pub fn random_weights(n: usize, seed: u64) -> Result<WeightVector> {
    weights_from_rng(&mut ChaCha8Rng::seed_from_u64(seed), n)
}

fn weights_from_rng<R: Rng>(rng: &mut R, n: usize) -> Result<WeightVector> {
    if n == 0 {
        return Err(Error::InvalidWeights("no weights".into()));
    }
    let raw: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = raw.iter().sum();
    WeightVector::new(raw.iter().map(|x| (x / total).max(WEIGHT_FLOOR)).collect())
}

/// A positive linear map `Φ`.
#[derive(Debug, Clone, PartialEq)]
pub enum PositiveMapSpec {
    /// `A ↦ VᵀAV` for a full-column-rank `dim × k` matrix `V`.
    Compression(DMatrix<f64>),
    /// Keeps the diagonal blocks indexed by a partition of `{0, …, dim−1}`.
    Pinching(Vec<Vec<usize>>),
    /// `A ↦ (c · tr A / dim) I`.
    TraceScale(f64),
}

pub fn apply_positive_map(spec: &PositiveMapSpec, a: &SpdMatrix) -> Result<SpdMatrix> {
    let m = a.dim();
    match spec {
        PositiveMapSpec::Compression(v) => {
            check_dims(m, v.nrows())?;
            let gram = v.transpose() * v;
            let ev = symmetric_eigenvalues(&gram)?;
            let (lo, hi) = (ev[ev.len() - 1], ev[0]);
            if v.ncols() == 0 || !(lo > 1e-12 * hi) {
                return Err(Error::RankDeficient);
            }
            SpdMatrix::new(symmetrize(v.transpose() * a.matrix() * v))
        }
        PositiveMapSpec::Pinching(blocks) => {
            let mut block_of = vec![usize::MAX; m];
            for (b, idx) in blocks.iter().enumerate() {
                for &i in idx {
                    if i >= m || block_of[i] != usize::MAX {
                        return Err(Error::PreconditionViolated(
                            "pinching blocks must partition the index set".into(),
                        ));
                    }
                    block_of[i] = b;
                }
            }
            if block_of.contains(&usize::MAX) {
                return Err(Error::PreconditionViolated(
                    "pinching blocks must partition the index set".into(),
                ));
            }
            let src = a.matrix();
            let out = DMatrix::from_fn(m, m, |i, j| {
                if block_of[i] == block_of[j] {
                    src[(i, j)]
                } else {
                    0.0
                }
            });
            Ok(SpdMatrix::from_trusted(out))
        }
        PositiveMapSpec::TraceScale(c) => {
            if !(*c > 0.0 && c.is_finite()) {
                return Err(Error::ParameterOutOfRange {
                    name: "c",
                    value: *c,
                    expected: "> 0",
                });
            }
            SpdMatrix::identity(m).scale(c * a.trace() / m as f64)
        }
    }
}

/// Applies `Φ` to every matrix of a tuple, keeping the weights.
pub fn map_tuple(spec: &PositiveMapSpec, tuple: &MatrixTuple) -> Result<MatrixTuple> {
    tuple.try_map(|a| apply_positive_map(spec, a))
}

/// Convenience sampler over one ChaCha8 stream.
#[derive(Debug, Clone)]
pub struct Sampler {
    rng: ChaCha8Rng,
}

impl Sampler {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self {
            rng: stream_rng(seed, stream),
        }
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.rng.random::<f64>()
    }

    /// Integer in `lo..=hi`.
    pub fn int(&mut self, lo: usize, hi: usize) -> usize {
        self.rng.random_range(lo..=hi)
    }

    pub fn pick<T: Copy>(&mut self, items: &[T]) -> T {
        items[self.rng.random_range(0..items.len())]
    }

    /// SPD matrix with eigenvalues in `[scale/cond_max, scale]`.
    pub fn spd(&mut self, dim: usize, cond_max: f64, scale: f64) -> SpdMatrix {
        spd_from_rng(&mut self.rng, dim, cond_max, scale)
    }

    /// SPD matrix with a random overall scale in `[1e-1, 1e1]`.
    pub fn spd_scaled(&mut self, dim: usize, cond_max: f64) -> SpdMatrix {
        let scale = 10f64.powf(self.uniform(-1.0, 1.0));
        self.spd(dim, cond_max, scale)
    }

    pub fn weights(&mut self, n: usize) -> WeightVector {
        weights_from_rng(&mut self.rng, n).expect("n >= 1")
    }

    /// Weighted tuple of `n` matrices of size `dim`.
    pub fn tuple(&mut self, n: usize, dim: usize, cond_max: f64) -> MatrixTuple {
        let ms = (0..n).map(|_| self.spd_scaled(dim, cond_max)).collect();
        let w = self.weights(n);
        MatrixTuple::new(ms, w).expect("consistent dimensions")
    }

    /// Tuple whose members all satisfy `‖Aᵢ‖ ≤ 1`.
    pub fn normalized_tuple(&mut self, n: usize, dim: usize, cond_max: f64) -> MatrixTuple {
        let ms = (0..n).map(|_| self.spd(dim, cond_max, 1.0)).collect();
        let w = self.weights(n);
        MatrixTuple::new(ms, w).expect("consistent dimensions")
    }

    /// Symmetric matrix with standard Gaussian entries.
    pub fn symmetric(&mut self, dim: usize) -> DMatrix<f64> {
        symmetrize(gaussian_matrix(&mut self.rng, dim, dim))
    }

    /// Positive semidefinite `GGᵀ · scale / dim` with `G` Gaussian of rank at most `rank`.
    pub fn psd(&mut self, dim: usize, rank: usize, scale: f64) -> DMatrix<f64> {
        let g = gaussian_matrix(&mut self.rng, dim, rank.max(1));
        symmetrize(&g * g.transpose() * (scale / dim as f64))
    }

    /// Well-conditioned invertible matrix `Q₁ diag(σ) Q₂` with `σ ∈ [0.2, 5]`.
    pub fn invertible(&mut self, dim: usize) -> DMatrix<f64> {
        let q1 = orthogonal(&mut self.rng, dim);
        let q2 = orthogonal(&mut self.rng, dim);
        let sig: Vec<f64> = (0..dim).map(|_| 5f64.powf(self.uniform(-1.0, 1.0))).collect();
        q1 * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(sig)) * q2
    }

    /// Full-column-rank `dim × k` matrix with Gaussian entries.
    pub fn compression(&mut self, dim: usize, k: usize) -> DMatrix<f64> {
        gaussian_matrix(&mut self.rng, dim, k)
    }

    /// Random partition of `0..dim` into contiguous blocks after a shuffle.
    pub fn partition(&mut self, dim: usize) -> Vec<Vec<usize>> {
        let mut idx: Vec<usize> = (0..dim).collect();
        for i in (1..dim).rev() {
            let j = self.rng.random_range(0..=i);
            idx.swap(i, j);
        }
        let mut blocks = Vec::new();
        let mut start = 0;
        while start < dim {
            let len = self.rng.random_range(1..=dim - start);
            blocks.push(idx[start..start + len].to_vec());
            start += len;
        }
        blocks
    }

    /// One of the three positive-map families, sized for `dim`.
    pub fn positive_map(&mut self, dim: usize) -> PositiveMapSpec {
        match self.rng.random_range(0..3) {
            0 => {
                let k = self.int(1, dim);
                PositiveMapSpec::Compression(self.compression(dim, k))
            }
            1 => PositiveMapSpec::Pinching(self.partition(dim)),
            _ => PositiveMapSpec::TraceScale(self.uniform(0.1, 3.0)),
        }
    }
}
