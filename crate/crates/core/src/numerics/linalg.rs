//! Hermitian matrices, eigendecomposition and pseudo-determinants.
//!
//! The eigensolver itself is nalgebra's Hermitian QR iteration; this module adds
//! the descending order, rank threshold and round-off clamping that the rest of
//! the crate relies on.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex;

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Relative eigenvalue threshold below which a mode counts as zero.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Relative tolerance of the Hermitian symmetry check.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// A square complex matrix that is Hermitian up to `HERMITIAN_TOL`.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix(CMatrix);

impl HermitianMatrix {
    /// Validates symmetry and wraps the matrix unchanged.
    pub fn new(m: CMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        let asymmetry = max_relative_asymmetry(&m);
        if asymmetry > HERMITIAN_TOL {
            return Err(Error::NotHermitian { asymmetry });
        }
        Ok(Self(m))
    }

    /// Takes the Hermitian part `(M + M^H) / 2`. Used after matrix products whose
    /// exact result is Hermitian but whose floating-point result is not.
    pub fn from_hermitian_part(m: &CMatrix) -> Self {
        assert!(m.is_square(), "Hermitian part of a non-square matrix");
        Self(hermitian_part(m))
    }

    pub fn identity(n: usize) -> Self {
        Self(CMatrix::identity(n, n))
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let v = CVector::from_iterator(diag.len(), diag.iter().map(|&x| C64::new(x, 0.0)));
        Self(CMatrix::from_diagonal(&v))
    }

    pub fn zeros(n: usize) -> Self {
        Self(CMatrix::zeros(n, n))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_inner(self) -> CMatrix {
        self.0
    }

    /// Real part of the trace (the imaginary part is zero for Hermitian input).
    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.0[(i, i)].re).sum()
    }

    pub fn entry(&self, i: usize, j: usize) -> C64 {
        self.0[(i, j)]
    }
}

/// Eigendecomposition of a PSD Hermitian matrix with eigenvalues in descending order.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    /// Unitary matrix whose columns are the eigenvectors, in eigenvalue order.
    pub eigenvectors: CMatrix,
    pub rank: usize,
    pub rank_tol: f64,
}

impl Spectrum {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn lambda_max(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    /// Eigenvalues counted in the rank, largest first.
    pub fn positive(&self) -> &[f64] {
        &self.eigenvalues[..self.rank]
    }

    /// Smallest eigenvalue counted in the rank.
    pub fn min_positive(&self) -> Option<f64> {
        self.positive().last().copied()
    }

    pub fn is_full_rank(&self) -> bool {
        self.rank == self.dim()
    }

    /// Sum of the logs of the eigenvalues counted in the rank; zero when the rank is zero.
    pub fn pseudo_logdet(&self) -> f64 {
        self.positive().iter().map(|l| l.ln()).sum()
    }

    /// `U diag(f(lambda)) U^H`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let mut scaled = self.eigenvectors.clone();
        for (j, &l) in self.eigenvalues.iter().enumerate() {
            scaled.column_mut(j).scale_mut(f(l));
        }
        hermitian_part(&(scaled * self.eigenvectors.adjoint()))
    }

    pub fn reconstruct(&self) -> CMatrix {
        self.map(|l| l)
    }

    /// Hermitian square root `U Lambda^{1/2} U^H`.
    pub fn sqrt(&self) -> CMatrix {
        self.map(|l| l.max(0.0).sqrt())
    }

    /// Columns of the eigenvector matrix spanning the range.
    pub fn range_basis(&self) -> CMatrix {
        self.eigenvectors.columns(0, self.rank).into_owned()
    }
}

/// Hermitian eigendecomposition with round-off clamping.
///
/// Eigenvalues in `[-rank_tol * lambda_max, 0)` are set to zero; anything more
/// negative is reported as [`Error::IndefiniteMatrix`].
pub fn eigh(m: &HermitianMatrix, rank_tol: f64) -> Result<Spectrum> {
    let n = m.dim();
    if n == 0 {
        return Ok(Spectrum {
            eigenvalues: Vec::new(),
            eigenvectors: CMatrix::zeros(0, 0),
            rank: 0,
            rank_tol,
        });
    }
    let eig = SymmetricEigen::new(m.as_matrix().clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let mut eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut eigenvectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        eigenvectors.set_column(dst, &eig.eigenvectors.column(src));
    }

    let lambda_max = eigenvalues[0].max(0.0);
    let floor = rank_tol * lambda_max;
    for l in eigenvalues.iter_mut() {
        if *l < 0.0 {
            if -*l <= floor || (lambda_max == 0.0 && *l > -f64::MIN_POSITIVE) {
                *l = 0.0;
            } else {
                return Err(Error::IndefiniteMatrix {
                    eigenvalue: *l,
                    lambda_max,
                    tol: rank_tol,
                });
            }
        }
    }
    let rank = eigenvalues.iter().filter(|&&l| l > floor).count();
    Ok(Spectrum {
        eigenvalues,
        eigenvectors,
        rank,
        rank_tol,
    })
}

/// Log pseudo-determinant in nats: sum of `ln(lambda)` over eigenvalues above threshold.
pub fn pseudo_logdet(m: &HermitianMatrix, rank_tol: f64) -> Result<f64> {
    Ok(eigh(m, rank_tol)?.pseudo_logdet())
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `||a - b||_F / ||b||_F`, or the absolute norm when `b` is zero.
pub fn relative_frobenius_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    let diff = frobenius(&(a - b));
    let scale = frobenius(b);
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

fn max_relative_asymmetry(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return 0.0;
    }
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst / scale
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::random::{random_unitary, SimRng};

    #[test]
    fn identity_spectrum() {
        let s = eigh(&HermitianMatrix::identity(3), DEFAULT_RANK_TOL).unwrap();
        assert_eq!(s.rank, 3);
        for l in &s.eigenvalues {
            assert!((l - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn diagonal_rank_deficient() {
        let s = eigh(
            &HermitianMatrix::from_real_diagonal(&[1.0, 0.0, 2.0]),
            DEFAULT_RANK_TOL,
        )
        .unwrap();
        assert_eq!(s.eigenvalues, vec![2.0, 1.0, 0.0]);
        assert_eq!(s.rank, 2);
        assert_eq!(s.min_positive(), Some(1.0));
    }

    #[test]
    fn known_unitary_round_trip() {
        let mut rng = SimRng::new(11);
        let q = random_unitary(&mut rng, 8);
        let lambdas = [5.0, 3.0, 2.5, 1.0, 0.5, 0.25, 0.1, 0.0];
        let d = HermitianMatrix::from_real_diagonal(&lambdas);
        let m = HermitianMatrix::from_hermitian_part(&(&q * d.as_matrix() * q.adjoint()));
        let s = eigh(&m, DEFAULT_RANK_TOL).unwrap();
        for (got, want) in s.eigenvalues.iter().zip(lambdas.iter()) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
        assert!(relative_frobenius_diff(&s.reconstruct(), m.as_matrix()) < 1e-10);
        assert_eq!(s.rank, 7);
    }

    #[test]
    fn clamps_roundoff_but_rejects_indefinite() {
        let tiny = HermitianMatrix::from_real_diagonal(&[1.0, -1e-14]);
        let s = eigh(&tiny, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(s.eigenvalues, vec![1.0, 0.0]);

        let bad = HermitianMatrix::from_real_diagonal(&[1.0, -1e-3]);
        assert!(matches!(
            eigh(&bad, DEFAULT_RANK_TOL),
            Err(Error::IndefiniteMatrix { .. })
        ));
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut m = CMatrix::identity(2, 2);
        m[(0, 1)] = C64::new(0.0, 1.0);
        m[(1, 0)] = C64::new(0.0, 1.0);
        assert!(matches!(
            HermitianMatrix::new(m),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn pseudo_logdet_examples() {
        let tol = DEFAULT_RANK_TOL;
        assert_eq!(pseudo_logdet(&HermitianMatrix::identity(4), tol).unwrap(), 0.0);
        let v = pseudo_logdet(&HermitianMatrix::from_real_diagonal(&[2.0, 0.0]), tol).unwrap();
        assert!((v - 2f64.ln()).abs() < 1e-15);
        let v = pseudo_logdet(&HermitianMatrix::from_real_diagonal(&[3.0, 0.1]), tol).unwrap();
        assert!((v - 0.3f64.ln()).abs() < 1e-14);
        assert_eq!(pseudo_logdet(&HermitianMatrix::zeros(3), tol).unwrap(), 0.0);
    }

    #[test]
    fn sqrt_squares_back() {
        let mut rng = SimRng::new(5);
        let q = random_unitary(&mut rng, 6);
        let d = HermitianMatrix::from_real_diagonal(&[4.0, 2.0, 1.0, 0.5, 0.3, 0.2]);
        let m = HermitianMatrix::from_hermitian_part(&(&q * d.as_matrix() * q.adjoint()));
        let s = eigh(&m, DEFAULT_RANK_TOL).unwrap();
        let r = s.sqrt();
        assert!(relative_frobenius_diff(&(&r * &r), m.as_matrix()) < 1e-12);
    }
}
