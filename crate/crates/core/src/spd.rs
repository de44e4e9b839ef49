//! Symmetric positive definite matrices and the spectral calculus built on them.
//!
//! Every mean and metric in this crate is expressed through three primitives:
//! a Cholesky factorization (positivity test, log-determinant, inverse), a cyclic
//! Jacobi eigensolver (matrix functions `A^p`, `log A`, `exp S`), and congruence
//! `S A Sᵀ`. Values of [`SpdMatrix`] are immutable once built.

use std::fmt;

use nalgebra::DMatrix;

use crate::error::{check_dims, Error, Result};

/// Off-diagonal stopping threshold of the Jacobi sweeps, relative to `‖A‖_F`.
const JACOBI_REL_TOL: f64 = 1e-14;
/// Sweep cap of the Jacobi eigensolver.
const JACOBI_MAX_SWEEPS: usize = 100;
/// Smallest accepted Cholesky pivot, relative to the largest diagonal entry.
const CHOLESKY_PIVOT_REL: f64 = 1e-13;
/// Relative determinant threshold below which a transform counts as singular.
const SINGULAR_REL_DET: f64 = 1e-14;

/// A real symmetric positive definite matrix.
///
/// Construction symmetrizes the input as `(M + Mᵀ)/2` and then rejects it unless a
/// Cholesky factorization succeeds with every pivot above `1e-13 · max diag`.
#[derive(Clone, PartialEq)]
pub struct SpdMatrix {
    m: DMatrix<f64>,
}

impl fmt::Debug for SpdMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SpdMatrix{:?}", self.to_rows())
    }
}

impl SpdMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::NotSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        if m.nrows() == 0 {
            return Err(Error::PreconditionViolated("empty matrix".into()));
        }
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        let m = symmetrize(m);
        cholesky_lower(&m)?;
        Ok(Self { m })
    }

    /// Wraps a matrix that is SPD by construction (output of a spectral map or a
    /// sum of SPD terms). Only symmetrizes; callers own the positivity argument.
    pub(crate) fn from_trusted(m: DMatrix<f64>) -> Self {
        Self { m: symmetrize(m) }
    }

    pub fn from_row_slice(dim: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: entries.len(),
            });
        }
        Self::new(DMatrix::from_row_slice(dim, dim, entries))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        for r in rows {
            check_dims(dim, r.len())?;
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::from_row_slice(dim, &flat)
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            m: DMatrix::identity(dim, dim),
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(
            diag,
        )))
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.m
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim())
            .map(|i| self.m.row(i).iter().copied().collect())
            .collect()
    }

    pub fn trace(&self) -> f64 {
        self.m.trace()
    }

    /// Positive multiple `c·A`.
    pub fn scale(&self, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::ParameterOutOfRange {
                name: "scale",
                value: c,
                expected: "positive finite",
            });
        }
        Ok(Self::from_trusted(&self.m * c))
    }

    /// `A + B`, which stays in the cone.
    pub fn add(&self, other: &SpdMatrix) -> Result<Self> {
        check_dims(self.dim(), other.dim())?;
        Ok(Self::from_trusted(&self.m + &other.m))
    }

    /// Lower Cholesky factor `L` with `A = L Lᵀ`.
    pub fn cholesky(&self) -> Result<DMatrix<f64>> {
        cholesky_lower(&self.m)
    }

    /// `log det A` as twice the sum of the logarithms of the Cholesky pivots.
    pub fn logdet(&self) -> Result<f64> {
        let l = self.cholesky()?;
        Ok(2.0 * l.diagonal().iter().map(|d| d.ln()).sum::<f64>())
    }

    /// Inverse via the Cholesky factor.
    pub fn inverse(&self) -> Result<Self> {
        let l = self.cholesky()?;
        let n = self.dim();
        let linv = l
            .solve_lower_triangular(&DMatrix::identity(n, n))
            .ok_or(Error::NotPositiveDefinite)?;
        Ok(Self::from_trusted(linv.transpose() * linv))
    }

    pub fn eig(&self) -> Result<EigDecomposition> {
        sym_eig(self)
    }

    /// Eigenvalues in descending order.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        symmetric_eigenvalues(&self.m)
    }

    /// Largest eigenvalue, which is also the spectral norm.
    pub fn max_eigenvalue(&self) -> Result<f64> {
        Ok(self.eigenvalues()?[0])
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(*self.eigenvalues()?.last().expect("non-empty"))
    }

    pub fn spectral_norm(&self) -> Result<f64> {
        self.max_eigenvalue()
    }

    pub fn powf(&self, p: f64) -> Result<Self> {
        Ok(Self::from_trusted(mat_fn(self, MatFn::Power(p))?))
    }

    pub fn sqrt(&self) -> Result<Self> {
        Ok(Self::from_trusted(mat_fn(self, MatFn::Sqrt)?))
    }

    /// `A^{-1/2}`.
    pub fn inv_sqrt(&self) -> Result<Self> {
        self.powf(-0.5)
    }

    /// `log A` (symmetric, not necessarily definite).
    pub fn log(&self) -> Result<DMatrix<f64>> {
        mat_fn(self, MatFn::Log)
    }

    /// `(A^{1/2}, A^{-1/2})` from a single eigendecomposition.
    pub fn sqrt_and_inv_sqrt(&self) -> Result<(Self, Self)> {
        let e = self.eig()?;
        Ok((
            Self::from_trusted(e.apply(f64::sqrt)),
            Self::from_trusted(e.apply(|x| 1.0 / x.sqrt())),
        ))
    }
}

/// Symmetric eigendecomposition `A = V diag(λ) Vᵀ` with eigenvalues descending and
/// eigenvectors in the columns of `basis`.
#[derive(Debug, Clone)]
pub struct EigDecomposition {
    pub eigenvalues: Vec<f64>,
    pub basis: DMatrix<f64>,
}

impl EigDecomposition {
    /// `V diag(f(λ)) Vᵀ`.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let mut scaled = self.basis.clone();
        for (j, &l) in self.eigenvalues.iter().enumerate() {
            let fl = f(l);
            scaled.column_mut(j).scale_mut(fl);
        }
        symmetrize(scaled * self.basis.transpose())
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        self.apply(|x| x)
    }
}

/// Scalar function applied through the spectral decomposition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MatFn {
    Power(f64),
    Log,
    Exp,
    Sqrt,
    Inverse,
}

impl MatFn {
    fn eval(self, x: f64) -> f64 {
        match self {
            MatFn::Power(p) => {
                if p == 0.0 {
                    1.0
                } else if p == 1.0 {
                    x
                } else {
                    x.powf(p)
                }
            }
            MatFn::Log => x.ln(),
            MatFn::Exp => x.exp(),
            MatFn::Sqrt => x.sqrt(),
            MatFn::Inverse => 1.0 / x,
        }
    }
}

pub fn sym_eig(a: &SpdMatrix) -> Result<EigDecomposition> {
    symmetric_eig(&a.m)
}

/// Jacobi eigendecomposition of an arbitrary real symmetric matrix (the upper
/// triangle is authoritative).
pub fn symmetric_eig(a: &DMatrix<f64>) -> Result<EigDecomposition> {
    let (vals, vecs) = jacobi(a, true)?;
    let vecs = vecs.expect("vectors requested");
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&i, &j| vals[j].total_cmp(&vals[i]));
    let n = vals.len();
    let mut basis = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        basis.set_column(dst, &vecs.column(src));
    }
    Ok(EigDecomposition {
        eigenvalues: order.iter().map(|&i| vals[i]).collect(),
        basis,
    })
}

/// Eigenvalues only, descending.
pub fn symmetric_eigenvalues(a: &DMatrix<f64>) -> Result<Vec<f64>> {
    let (mut vals, _) = jacobi(a, false)?;
    vals.sort_by(|x, y| y.total_cmp(x));
    Ok(vals)
}

fn jacobi(a: &DMatrix<f64>, want_vectors: bool) -> Result<(Vec<f64>, Option<DMatrix<f64>>)> {
    let n = a.nrows();
    let mut m = symmetrize(a.clone());
    let mut v = want_vectors.then(|| DMatrix::<f64>::identity(n, n));
    let threshold = JACOBI_REL_TOL * m.norm();

    let off_norm = |m: &DMatrix<f64>| -> f64 {
        let mut s = 0.0;
        for j in 0..n {
            for i in 0..j {
                s += 2.0 * m[(i, j)] * m[(i, j)];
            }
        }
        s.sqrt()
    };

    let mut converged = n < 2;
    for _ in 0..JACOBI_MAX_SWEEPS {
        if converged || off_norm(&m) <= threshold {
            converged = true;
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // M ← Jᵀ M J with J the rotation in the (p, q) plane.
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                m[(p, q)] = 0.0;
                m[(q, p)] = 0.0;
                if let Some(v) = v.as_mut() {
                    for k in 0..n {
                        let vkp = v[(k, p)];
                        let vkq = v[(k, q)];
                        v[(k, p)] = c * vkp - s * vkq;
                        v[(k, q)] = s * vkp + c * vkq;
                    }
                }
            }
        }
    }
    if !converged && off_norm(&m) > threshold {
        return Err(Error::IllConditioned {
            sweeps: JACOBI_MAX_SWEEPS,
        });
    }
    Ok(((0..n).map(|i| m[(i, i)]).collect(), v))
}

/// `V diag(f(λ)) Vᵀ` for an SPD argument.
pub fn mat_fn(a: &SpdMatrix, f: MatFn) -> Result<DMatrix<f64>> {
    if f == MatFn::Power(1.0) {
        return Ok(a.m.clone());
    }
    if f == MatFn::Power(0.0) {
        return Ok(DMatrix::identity(a.dim(), a.dim()));
    }
    Ok(sym_eig(a)?.apply(|x| f.eval(x)))
}

/// Spectral function of a general symmetric matrix. Only `Exp` and integer-free
/// maps that are defined on the whole real line make sense here; `Log`, `Sqrt`
/// and fractional powers of negative eigenvalues produce NaN and are rejected.
pub fn mat_fn_symmetric(s: &DMatrix<f64>, f: MatFn) -> Result<DMatrix<f64>> {
    let out = symmetric_eig(s)?.apply(|x| f.eval(x));
    if out.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(out)
}

/// `exp S` of a symmetric matrix, which is always SPD.
pub fn exp_symmetric(s: &DMatrix<f64>) -> Result<SpdMatrix> {
    Ok(SpdMatrix::from_trusted(mat_fn_symmetric(s, MatFn::Exp)?))
}

/// `S A Sᵀ` for an invertible `S`.
pub fn congruence(s: &DMatrix<f64>, a: &SpdMatrix) -> Result<SpdMatrix> {
    if s.nrows() != s.ncols() {
        return Err(Error::NotSquare {
            rows: s.nrows(),
            cols: s.ncols(),
        });
    }
    check_dims(a.dim(), s.nrows())?;
    let relative_det = relative_determinant(s);
    if !(relative_det > SINGULAR_REL_DET) {
        return Err(Error::SingularTransform { relative_det });
    }
    SpdMatrix::new(s * &a.m * s.transpose())
}

/// `|det S|` divided by the Hadamard bound `∏ ‖row_i‖`, a scale-free number in [0, 1].
pub(crate) fn relative_determinant(s: &DMatrix<f64>) -> f64 {
    let hadamard: f64 = (0..s.nrows()).map(|i| s.row(i).norm()).product();
    if hadamard == 0.0 {
        return 0.0;
    }
    s.clone().determinant().abs() / hadamard
}

/// Loewner order test `A ≤ B`: the smallest eigenvalue of `B − A` is at least `-tol`.
pub fn loewner_leq(a: &SpdMatrix, b: &SpdMatrix, tol: f64) -> Result<bool> {
    Ok(loewner_gap(a, b)? >= -tol)
}

/// Smallest eigenvalue of `B − A`; negative values measure how far `A ≤ B` fails.
pub fn loewner_gap(a: &SpdMatrix, b: &SpdMatrix) -> Result<f64> {
    check_dims(a.dim(), b.dim())?;
    let d = &b.m - &a.m;
    Ok(*symmetric_eigenvalues(&d)?.last().expect("non-empty"))
}

/// Lower Cholesky factor with the pivot threshold used for positivity checks.
pub(crate) fn cholesky_lower(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let max_diag = (0..n).map(|i| a[(i, i)]).fold(f64::MIN, f64::max);
    if !(max_diag > 0.0) {
        return Err(Error::NotPositiveDefinite);
    }
    let floor = CHOLESKY_PIVOT_REL * max_diag;
    let mut l = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > floor) {
            return Err(Error::NotPositiveDefinite);
        }
        let djj = d.sqrt();
        l[(j, j)] = djj;
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / djj;
        }
    }
    Ok(l)
}

pub(crate) fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    let t = m.transpose();
    (m + t) * 0.5
}

/// `L⁻¹ B L⁻ᵀ` where `A = L Lᵀ`; its spectrum equals that of `A^{-1/2} B A^{-1/2}`.
pub(crate) fn whitened(a: &SpdMatrix, b: &SpdMatrix) -> Result<DMatrix<f64>> {
    check_dims(a.dim(), b.dim())?;
    let l = a.cholesky()?;
    let y = l
        .solve_lower_triangular(&b.m)
        .ok_or(Error::NotPositiveDefinite)?;
    let c = l
        .solve_lower_triangular(&y.transpose())
        .ok_or(Error::NotPositiveDefinite)?;
    Ok(symmetrize(c))
}

/// Eigenvalues of `A^{-1/2} B A^{-1/2}`, descending.
pub fn relative_eigenvalues(a: &SpdMatrix, b: &SpdMatrix) -> Result<Vec<f64>> {
    symmetric_eigenvalues(&whitened(a, b)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> SpdMatrix {
        SpdMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn rel_err(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        (a - b).norm() / b.norm().max(1e-300)
    }

    #[test]
    fn rejects_indefinite_and_nonsquare() {
        assert!(matches!(
            SpdMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]),
            Err(Error::NotPositiveDefinite)
        ));
        assert!(matches!(
            SpdMatrix::new(DMatrix::zeros(2, 3)),
            Err(Error::NotSquare { .. })
        ));
        assert!(matches!(
            SpdMatrix::from_rows(&[vec![f64::NAN]]),
            Err(Error::NonFinite)
        ));
    }

    #[test]
    fn construction_symmetrizes() {
        let a = SpdMatrix::new(DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 0.0, 2.0])).unwrap();
        assert_eq!(a.matrix()[(0, 1)], 0.5);
        assert_eq!(a.matrix()[(1, 0)], 0.5);
    }

    #[test]
    fn eig_examples() {
        let e = sym_eig(&SpdMatrix::identity(2)).unwrap();
        assert_eq!(e.eigenvalues, vec![1.0, 1.0]);

        let e = sym_eig(&SpdMatrix::from_diagonal(&[1.0, 4.0]).unwrap()).unwrap();
        assert_eq!(e.eigenvalues, vec![4.0, 1.0]);

        let a = m(&[&[2.0, -1.0], &[-1.0, 2.0]]);
        let e = sym_eig(&a).unwrap();
        assert!((e.eigenvalues[0] - 3.0).abs() < 1e-14);
        assert!((e.eigenvalues[1] - 1.0).abs() < 1e-14);
        let vtv = e.basis.transpose() * &e.basis;
        assert!((vtv - DMatrix::identity(2, 2)).amax() < 1e-12);
        assert!(rel_err(&e.reconstruct(), a.matrix()) < 1e-10);
    }

    #[test]
    fn mat_fn_examples() {
        let l = mat_fn(&SpdMatrix::identity(2), MatFn::Log).unwrap();
        assert_eq!(l.amax(), 0.0);

        let s = mat_fn(&SpdMatrix::from_diagonal(&[1.0, 4.0]).unwrap(), MatFn::Sqrt).unwrap();
        assert!((s - DMatrix::from_diagonal(&nalgebra::dvector![1.0, 2.0])).amax() < 1e-15);

        let p = mat_fn(&m(&[&[9.0]]), MatFn::Power(-0.5)).unwrap();
        assert!((p[(0, 0)] - 1.0 / 3.0).abs() < 1e-15);

        let inv = mat_fn(&m(&[&[4.0]]), MatFn::Inverse).unwrap();
        assert_eq!(inv[(0, 0)], 0.25);
    }

    #[test]
    fn exp_accepts_indefinite_symmetric() {
        let s = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let e = exp_symmetric(&s).unwrap();
        // exp([[0,1],[1,0]]) = [[cosh 1, sinh 1],[sinh 1, cosh 1]]
        assert!((e.matrix()[(0, 0)] - 1f64.cosh()).abs() < 1e-14);
        assert!((e.matrix()[(0, 1)] - 1f64.sinh()).abs() < 1e-14);
        assert!(mat_fn_symmetric(&s, MatFn::Log).is_err());
    }

    #[test]
    fn congruence_examples() {
        let a = m(&[&[2.0, 0.5], &[0.5, 1.0]]);
        let id = DMatrix::identity(2, 2);
        assert_eq!(congruence(&id, &a).unwrap(), a);

        let two = DMatrix::identity(2, 2) * 2.0;
        let d = congruence(&two, &SpdMatrix::from_diagonal(&[1.0, 4.0]).unwrap()).unwrap();
        assert_eq!(d, SpdMatrix::from_diagonal(&[4.0, 16.0]).unwrap());

        let s = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        let r = congruence(&s, &SpdMatrix::identity(2)).unwrap();
        assert_eq!(r, m(&[&[2.0, 1.0], &[1.0, 1.0]]));

        let singular = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(matches!(
            congruence(&singular, &a),
            Err(Error::SingularTransform { .. })
        ));
        assert!(matches!(
            congruence(&DMatrix::identity(3, 3), &a),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn loewner_examples() {
        let i = SpdMatrix::identity(2);
        let two = i.scale(2.0).unwrap();
        assert!(loewner_leq(&i, &two, 0.0).unwrap());
        assert!(!loewner_leq(&two, &i, 0.0).unwrap());
        let a = SpdMatrix::from_diagonal(&[1.0, 4.0]).unwrap();
        let b = SpdMatrix::from_diagonal(&[2.0, 2.0]).unwrap();
        assert!(!loewner_leq(&a, &b, 1e-12).unwrap());
        assert!(!loewner_leq(&b, &a, 1e-12).unwrap());
        assert!(matches!(
            loewner_leq(&a, &SpdMatrix::identity(3), 0.0),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn logdet_matches_eigenvalues() {
        let a = m(&[&[2.0, -1.0], &[-1.0, 2.0]]);
        assert!((a.logdet().unwrap() - 3f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn inverse_and_relative_eigenvalues() {
        let a = m(&[&[4.0, 1.0], &[1.0, 3.0]]);
        let prod = a.matrix() * a.inverse().unwrap().matrix();
        assert!((prod - DMatrix::identity(2, 2)).amax() < 1e-14);

        let mu = relative_eigenvalues(
            &SpdMatrix::from_diagonal(&[1.0, 4.0]).unwrap(),
            &SpdMatrix::from_diagonal(&[2.0, 2.0]).unwrap(),
        )
        .unwrap();
        assert!((mu[0] - 2.0).abs() < 1e-15 && (mu[1] - 0.5).abs() < 1e-15);
    }
}
