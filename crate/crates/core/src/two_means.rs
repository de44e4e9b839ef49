//! Weights, matrix tuples and the closed-form means: the weighted geometric mean
//! of two matrices and the weighted arithmetic and harmonic means of a tuple.

use nalgebra::DMatrix;

use crate::error::{check_dims, Error, Result};
use crate::spd::{congruence, SpdMatrix};

/// Tolerance on `Σ wᵢ = 1` after renormalization.
const WEIGHT_SUM_TOL: f64 = 1e-14;

/// Positive probability vector.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    /// Accepts any strictly positive finite weights and renormalizes them to sum to one.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidWeights("no weights".into()));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::InvalidWeights(format!(
                "weights must be positive and finite, got {w}"
            )));
        }
        let total: f64 = weights.iter().sum();
        let mut w: Vec<f64> = weights.iter().map(|x| x / total).collect();
        // Push the rounding residue into the largest weight.
        let residue = 1.0 - w.iter().sum::<f64>();
        if residue.abs() > WEIGHT_SUM_TOL / 4.0 {
            let imax = argmax(&w);
            w[imax] += residue;
        }
        Ok(Self(w))
    }

    pub fn uniform(n: usize) -> Result<Self> {
        Self::new(vec![1.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn is_uniform(&self) -> bool {
        let u = 1.0 / self.0.len() as f64;
        self.0.iter().all(|w| (w - u).abs() <= 1e-12)
    }

    fn permuted(&self, perm: &[usize]) -> Self {
        Self(perm.iter().map(|&i| self.0[i]).collect())
    }
}

fn argmax(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0)
}

/// Ordered tuple `(A₁, …, Aₙ)` of equal-dimension SPD matrices with weights.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixTuple {
    matrices: Vec<SpdMatrix>,
    weights: WeightVector,
}

impl MatrixTuple {
    pub fn new(matrices: Vec<SpdMatrix>, weights: WeightVector) -> Result<Self> {
        let first = matrices.first().ok_or(Error::EmptyTuple)?;
        let dim = first.dim();
        for m in &matrices {
            check_dims(dim, m.dim())?;
        }
        check_dims(matrices.len(), weights.len())?;
        Ok(Self { matrices, weights })
    }

    pub fn uniform(matrices: Vec<SpdMatrix>) -> Result<Self> {
        let w = WeightVector::uniform(matrices.len().max(1))?;
        Self::new(matrices, w)
    }

    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.matrices[0].dim()
    }

    pub fn matrices(&self) -> &[SpdMatrix] {
        &self.matrices
    }

    pub fn weights(&self) -> &WeightVector {
        &self.weights
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &SpdMatrix)> {
        self.weights.as_slice().iter().copied().zip(self.matrices.iter())
    }

    /// True when every matrix equals the first one.
    pub fn is_constant(&self) -> bool {
        self.matrices.iter().all(|m| m == &self.matrices[0])
    }

    /// Applies `f` to every matrix, keeping the weights.
    pub fn try_map(&self, f: impl Fn(&SpdMatrix) -> Result<SpdMatrix>) -> Result<Self> {
        let matrices = self.matrices.iter().map(f).collect::<Result<Vec<_>>>()?;
        Self::new(matrices, self.weights.clone())
    }

    /// `𝔸⁻¹`, elementwise inverses.
    pub fn inverted(&self) -> Result<Self> {
        self.try_map(SpdMatrix::inverse)
    }

    /// `𝔸^p`, elementwise powers.
    pub fn powered(&self, p: f64) -> Result<Self> {
        self.try_map(|a| a.powf(p))
    }

    /// `S 𝔸 Sᵀ`.
    pub fn congruence(&self, s: &DMatrix<f64>) -> Result<Self> {
        self.try_map(|a| congruence(s, a))
    }

    /// `c 𝔸` for `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        self.try_map(|a| a.scale(c))
    }

    /// `(𝔸_σ, ω_σ)` with `σ(i) = perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.len()];
        if perm.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                found: perm.len(),
            });
        }
        for &p in perm {
            if p >= self.len() || std::mem::replace(&mut seen[p], true) {
                return Err(Error::PreconditionViolated("not a permutation".into()));
            }
        }
        Self::new(
            perm.iter().map(|&i| self.matrices[i].clone()).collect(),
            self.weights.permuted(perm),
        )
    }

    /// Same matrices with different weights.
    pub fn with_weights(&self, weights: WeightVector) -> Result<Self> {
        Self::new(self.matrices.clone(), weights)
    }
}

/// Weighted geometric mean `A #ₜ B = A^{1/2} (A^{-1/2} B A^{-1/2})ᵗ A^{1/2}`.
pub fn geo_mean(a: &SpdMatrix, b: &SpdMatrix, t: f64) -> Result<SpdMatrix> {
    check_dims(a.dim(), b.dim())?;
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::ParameterOutOfRange {
            name: "t",
            value: t,
            expected: "[0, 1]",
        });
    }
    if t == 0.0 {
        return Ok(a.clone());
    }
    if t == 1.0 {
        return Ok(b.clone());
    }
    // Whiten by the better-conditioned argument, using A #ₜ B = B #₁₋ₜ A.
    let (ea, eb) = (a.eig()?, b.eig()?);
    if condition(&eb.eigenvalues) < condition(&ea.eigenvalues) {
        let (rb, rb_inv) = roots(&eb);
        geo_mean_with_roots(&rb, &rb_inv, a, 1.0 - t)
    } else {
        let (ra, ra_inv) = roots(&ea);
        geo_mean_with_roots(&ra, &ra_inv, b, t)
    }
}

fn condition(descending: &[f64]) -> f64 {
    descending[0] / descending[descending.len() - 1]
}

fn roots(e: &crate::spd::EigDecomposition) -> (SpdMatrix, SpdMatrix) {
    (
        SpdMatrix::from_trusted(e.apply(f64::sqrt)),
        SpdMatrix::from_trusted(e.apply(|x| 1.0 / x.sqrt())),
    )
}

pub(crate) fn geo_mean_with_roots(
    ra: &SpdMatrix,
    ra_inv: &SpdMatrix,
    b: &SpdMatrix,
    t: f64,
) -> Result<SpdMatrix> {
    let inner = SpdMatrix::from_trusted(ra_inv.matrix() * b.matrix() * ra_inv.matrix());
    let p = inner.powf(t)?;
    Ok(SpdMatrix::from_trusted(ra.matrix() * p.matrix() * ra.matrix()))
}

/// `𝒜(ω; 𝔸) = Σ wᵢ Aᵢ`.
pub fn arithmetic_mean(tuple: &MatrixTuple) -> SpdMatrix {
    if tuple.len() == 1 {
        return tuple.matrices()[0].clone();
    }
    let n = tuple.dim();
    let sum = tuple
        .iter()
        .fold(DMatrix::zeros(n, n), |acc, (w, a)| acc + a.matrix() * w);
    SpdMatrix::from_trusted(sum)
}

/// `ℋ(ω; 𝔸) = [Σ wᵢ Aᵢ⁻¹]⁻¹`.
pub fn harmonic_mean(tuple: &MatrixTuple) -> Result<SpdMatrix> {
    if tuple.len() == 1 {
        return Ok(tuple.matrices()[0].clone());
    }
    arithmetic_mean(&tuple.inverted()?).inverse()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::thompson;
    use crate::spd::loewner_leq;

    fn s(x: f64) -> SpdMatrix {
        SpdMatrix::from_diagonal(&[x]).unwrap()
    }

    fn diag(d: &[f64]) -> SpdMatrix {
        SpdMatrix::from_diagonal(d).unwrap()
    }

    #[test]
    fn weights_renormalize_and_reject_nonpositive() {
        let w = WeightVector::new(vec![1.0, 3.0]).unwrap();
        assert_eq!(w.as_slice(), &[0.25, 0.75]);
        let w = WeightVector::new(vec![1.0; 7]).unwrap();
        assert!((w.as_slice().iter().sum::<f64>() - 1.0).abs() <= 1e-14);
        assert!(WeightVector::new(vec![1.0, 0.0]).is_err());
        assert!(WeightVector::new(vec![1.0, -1.0]).is_err());
        assert!(WeightVector::new(vec![]).is_err());
        assert!(WeightVector::new(vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn tuple_validation() {
        assert!(matches!(
            MatrixTuple::uniform(vec![]),
            Err(Error::EmptyTuple)
        ));
        assert!(MatrixTuple::uniform(vec![s(1.0), SpdMatrix::identity(2)]).is_err());
        let t = MatrixTuple::new(vec![s(1.0), s(2.0)], WeightVector::uniform(3).unwrap());
        assert!(t.is_err());
        let t = MatrixTuple::uniform(vec![s(1.0), s(2.0)]).unwrap();
        assert!(t.permuted(&[0, 0]).is_err());
        assert_eq!(t.permuted(&[1, 0]).unwrap().matrices()[0], s(2.0));
    }

    #[test]
    fn geo_mean_examples() {
        let a = SpdMatrix::from_rows(&[vec![2.0, 0.5], vec![0.5, 1.0]]).unwrap();
        let b = SpdMatrix::from_rows(&[vec![1.0, -0.2], vec![-0.2, 3.0]]).unwrap();
        assert_eq!(geo_mean(&a, &b, 0.0).unwrap(), a);
        let g = geo_mean(&SpdMatrix::identity(2), &b, 0.5).unwrap();
        assert!(thompson(&g, &b.sqrt().unwrap()).unwrap() < 1e-14);
        let g = geo_mean(&diag(&[1.0, 4.0]), &diag(&[4.0, 1.0]), 0.5).unwrap();
        assert!((g.matrix() - diag(&[2.0, 2.0]).matrix()).amax() < 1e-14);
        assert!(geo_mean(&a, &b, 1.5).is_err());
    }

    #[test]
    fn riccati_characterization() {
        let a = SpdMatrix::from_rows(&[vec![2.0, 0.5], vec![0.5, 1.0]]).unwrap();
        let b = SpdMatrix::from_rows(&[vec![1.0, -0.2], vec![-0.2, 3.0]]).unwrap();
        let x = geo_mean(&a, &b, 0.5).unwrap();
        let xax = x.matrix() * a.inverse().unwrap().matrix() * x.matrix();
        assert!((xax - b.matrix()).norm() / b.matrix().norm() < 1e-12);
    }

    #[test]
    fn arithmetic_examples() {
        let a = SpdMatrix::from_rows(&[vec![2.0, 0.5], vec![0.5, 1.0]]).unwrap();
        let t = MatrixTuple::new(
            vec![a.clone(), a.clone(), a.clone()],
            WeightVector::new(vec![0.2, 0.5, 0.3]).unwrap(),
        )
        .unwrap();
        assert!((arithmetic_mean(&t).matrix() - a.matrix()).amax() < 1e-15);
        let t = MatrixTuple::uniform(vec![s(1.0), s(4.0)]).unwrap();
        assert_eq!(arithmetic_mean(&t), s(2.5));
        // 1/4 · 4 + 3/4 · 8/3 = 3
        let t = MatrixTuple::new(
            vec![s(4.0), s(8.0 / 3.0)],
            WeightVector::new(vec![0.25, 0.75]).unwrap(),
        )
        .unwrap();
        assert!((arithmetic_mean(&t).matrix()[(0, 0)] - 3.0).abs() < 1e-15);
    }

    #[test]
    fn harmonic_examples() {
        let a = SpdMatrix::from_rows(&[vec![2.0, 0.5], vec![0.5, 1.0]]).unwrap();
        let t = MatrixTuple::uniform(vec![a.clone(), a.clone()]).unwrap();
        assert!((harmonic_mean(&t).unwrap().matrix() - a.matrix()).amax() < 1e-14);
        let t = MatrixTuple::uniform(vec![s(1.0), s(4.0)]).unwrap();
        assert!((harmonic_mean(&t).unwrap().matrix()[(0, 0)] - 1.6).abs() < 1e-15);
        let t = MatrixTuple::uniform(vec![diag(&[1.0, 4.0]), diag(&[4.0, 1.0])]).unwrap();
        let h = harmonic_mean(&t).unwrap();
        assert!((h.matrix() - diag(&[1.6, 1.6]).matrix()).amax() < 1e-14);
        assert!(loewner_leq(&h, &arithmetic_mean(&t), 1e-10).unwrap());
    }
}
