//! Complex dense linear algebra used throughout the crate.
//!
//! Everything here works on `nalgebra` dynamic matrices of `Complex<f64>`.
//! Hermitian positive semidefinite matrices are the common currency: spatial
//! correlation matrices, pilot-signal covariances and estimate covariances.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::error::{Error, Result};

pub type C64 = nalgebra::Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Eigenvalues this far below zero (relative to the matrix scale) are
/// treated as rounding noise and clamped.
pub const PSD_TOLERANCE: f64 = 1e-10;

/// Largest absolute entry, or 1 for an all-zero matrix.
fn scale_of(m: &CMatrix) -> f64 {
    let s = m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()));
    if s > 0.0 {
        s
    } else {
        1.0
    }
}

/// Largest entrywise deviation `|m - m^H|`.
pub fn hermitian_asymmetry(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// `(m + m^H) / 2`.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

fn check_square(m: &CMatrix, context: &str) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::Dimension(format!(
            "{context}: expected a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

/// Checks that `m` is Hermitian to `PSD_TOLERANCE` (relative to its largest entry).
pub fn ensure_hermitian(m: &CMatrix, context: &str) -> Result<()> {
    check_square(m, context)?;
    let asymmetry = hermitian_asymmetry(m);
    if asymmetry > PSD_TOLERANCE * scale_of(m) {
        return Err(Error::NotHermitian {
            asymmetry,
            context: context.to_string(),
        });
    }
    Ok(())
}

/// Eigenvalues (ascending) of the Hermitian part of `m`.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let mut values: Vec<f64> = SymmetricEigen::new(hermitian_part(m))
        .eigenvalues
        .iter()
        .copied()
        .collect();
    values.sort_by(f64::total_cmp);
    values
}

pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    hermitian_eigenvalues(m)
        .first()
        .copied()
        .unwrap_or(f64::INFINITY)
}

/// Cholesky factorization that fails on non-positive pivots. The complex
/// `Cholesky::new` takes complex square roots of negative pivots instead of
/// failing, so the factor diagonal is checked explicitly.
fn positive_cholesky(m: CMatrix) -> Option<Cholesky<C64, Dyn>> {
    let chol = Cholesky::new(m)?;
    let l = chol.l_dirty();
    let ok = (0..l.nrows()).all(|i| {
        let d = l[(i, i)];
        d.re > 0.0 && d.im.abs() <= 1e-12 * d.re && d.re.is_finite()
    });
    ok.then_some(chol)
}

/// Checks Hermitian symmetry and positive semidefiniteness.
///
/// PSD-ness is certified by a Cholesky factorization of `m + tol·scale·I`,
/// which succeeds iff the smallest eigenvalue exceeds `-tol·scale`. The
/// eigendecomposition is only run to report the offending eigenvalue.
pub fn ensure_psd(m: &CMatrix, context: &str) -> Result<()> {
    ensure_hermitian(m, context)?;
    let n = m.nrows();
    let shift = C64::new(PSD_TOLERANCE * scale_of(m), 0.0);
    let shifted = hermitian_part(m) + CMatrix::identity(n, n) * shift;
    if positive_cholesky(shifted).is_none() {
        return Err(Error::NotPositiveSemidefinite {
            min_eigenvalue: min_eigenvalue(m),
            context: context.to_string(),
        });
    }
    Ok(())
}

/// Principal square root of a Hermitian PSD matrix by eigendecomposition.
///
/// Slightly negative eigenvalues (within `PSD_TOLERANCE` of the matrix scale)
/// are clamped to zero; anything more negative is an error.
pub fn hermitian_sqrt(m: &CMatrix, context: &str) -> Result<CMatrix> {
    ensure_hermitian(m, context)?;
    let scale = scale_of(m);
    let eig = SymmetricEigen::new(hermitian_part(m));
    let mut vectors = eig.eigenvectors.clone();
    for (j, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda < -PSD_TOLERANCE * scale {
            return Err(Error::NotPositiveSemidefinite {
                min_eigenvalue: lambda,
                context: context.to_string(),
            });
        }
        let root = lambda.max(0.0).sqrt();
        vectors.column_mut(j).scale_mut(root);
    }
    Ok(&vectors * eig.eigenvectors.adjoint())
}

/// `a b` through four real products, which use the blocked real kernel.
pub fn matmul(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ai) = (a.map(|z| z.re), a.map(|z| z.im));
    let (br, bi) = (b.map(|z| z.re), b.map(|z| z.im));
    let re: DMatrix<f64> = &ar * &br - &ai * &bi;
    let im: DMatrix<f64> = &ar * &bi + &ai * &br;
    re.zip_map(&im, C64::new)
}

/// `tr(a b)` in O(n²) without forming the product.
pub fn trace_of_product(a: &CMatrix, b: &CMatrix) -> C64 {
    debug_assert_eq!(a.ncols(), b.nrows());
    debug_assert_eq!(a.nrows(), b.ncols());
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

/// `tr(a b^H) = Σ a_ij conj(b_ij)`.
pub fn trace_of_product_adjoint(a: &CMatrix, b: &CMatrix) -> C64 {
    debug_assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).map(|(x, y)| x * y.conj()).sum()
}

pub fn trace(m: &CMatrix) -> C64 {
    m.diagonal().iter().sum()
}

/// Cholesky factor of a Hermitian positive-definite matrix.
#[derive(Clone, Debug)]
pub struct HpdFactor {
    chol: Cholesky<C64, Dyn>,
}

impl HpdFactor {
    pub fn new(m: &CMatrix, context: &str) -> Result<Self> {
        ensure_hermitian(m, context)?;
        positive_cholesky(hermitian_part(m))
            .map(|chol| Self { chol })
            .ok_or_else(|| Error::Singular(context.to_string()))
    }

    pub fn dim(&self) -> usize {
        self.chol.l_dirty().nrows()
    }

    /// Solves `m x = b`.
    pub fn solve(&self, b: &CVector) -> CVector {
        self.chol.solve(b)
    }

    pub fn solve_mut(&self, b: &mut CVector) {
        self.chol.solve_mut(b)
    }

    /// Explicit inverse, materialized only where matrix products need it.
    pub fn inverse(&self) -> CMatrix {
        hermitian_part(&self.chol.inverse())
    }
}

/// Frobenius norm.
pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}
