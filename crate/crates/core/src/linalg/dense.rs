use faer::linalg::solvers::Solve;
use faer::{Mat, Side};

use super::{norm2, DenseMatrix, SparseMatrix};
use crate::error::{Error, Result};

/// Default relative threshold for numerical rank decisions.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Ascending eigenvalues with B-orthonormal eigenvector columns.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DenseMatrix,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn eigenvector(&self, k: usize) -> Vec<f64> {
        (0..self.eigenvectors.nrows())
            .map(|i| self.eigenvectors[(i, k)])
            .collect()
    }
}

pub fn max_abs(a: &DenseMatrix) -> f64 {
    let mut m: f64 = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max(a[(i, j)].abs());
        }
    }
    m
}

/// `(A + Aᵀ) / 2`.
pub fn symmetrize(a: &DenseMatrix) -> DenseMatrix {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| 0.5 * (a[(i, j)] + a[(j, i)]))
}

fn check_square(a: &DenseMatrix, b: &[f64]) -> Result<()> {
    if a.nrows() != a.ncols() || a.nrows() != b.len() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} system with right-hand side of length {}",
            a.nrows(),
            a.ncols(),
            b.len()
        )));
    }
    Ok(())
}

fn col(b: &[f64]) -> Mat<f64> {
    Mat::from_fn(b.len(), 1, |i, _| b[i])
}

fn to_vec(x: &Mat<f64>) -> Vec<f64> {
    (0..x.nrows()).map(|i| x[(i, 0)]).collect()
}

/// Solves `A x = b` for symmetric positive definite `A`.
pub fn cholesky_solve(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    check_square(a, b)?;
    let llt = a.llt(Side::Lower).map_err(|_| Error::NotPositiveDefinite)?;
    Ok(to_vec(&llt.solve(col(b))))
}

/// Solves `A x = b` for symmetric, possibly indefinite, nonsingular `A`
/// (saddle-point systems). LU with partial pivoting; a pivot below
/// `n·ε·max|U_ii|` is reported as singular.
pub fn symmetric_indefinite_solve(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    check_square(a, b)?;
    let n = a.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let lu = a.partial_piv_lu();
    let u = lu.U();
    let diag: Vec<f64> = (0..n).map(|i| u[(i, i)].abs()).collect();
    let dmax = diag.iter().cloned().fold(0.0, f64::max);
    let dmin = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    if dmax == 0.0 || dmin <= n as f64 * f64::EPSILON * dmax {
        return Err(Error::Singular);
    }
    Ok(to_vec(&lu.solve(col(b))))
}

/// Sparse LU solve for large assembled systems (symmetric or not).
pub fn sparse_solve(a: &SparseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    if a.nrows() != a.ncols() || a.nrows() != b.len() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} system with right-hand side of length {}",
            a.nrows(),
            a.ncols(),
            b.len()
        )));
    }
    let lu = a.to_faer()?.sp_lu().map_err(|_| Error::Singular)?;
    let x = to_vec(&lu.solve(col(b)));
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular);
    }
    let r: Vec<f64> = a.matvec(&x).iter().zip(b).map(|(ax, bi)| ax - bi).collect();
    let scale = a.max_abs() * norm2(&x) + norm2(b);
    if norm2(&r) > 1e-6 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::Singular);
    }
    Ok(x)
}

/// Full spectrum of the symmetric-definite pencil `(A, B)`.
///
/// Reduces to a standard problem through the Cholesky factor of `B`,
/// `C = L⁻¹ A L⁻ᵀ`, and back-transforms the eigenvectors with `L⁻ᵀ`.
pub fn generalized_symmetric_eig(a: &DenseMatrix, b: &DenseMatrix) -> Result<Spectrum> {
    let (c, l) = reduce_pencil(a, b)?;
    let evd = c
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Eigen(format!("{e:?}")))?;
    let s = evd.S().column_vector();
    let eigenvalues: Vec<f64> = (0..s.nrows()).map(|i| s[i]).collect();
    let mut x = evd.U().to_owned();
    l.transpose().solve_upper_triangular_in_place(x.as_mut());
    Ok(Spectrum {
        eigenvalues,
        eigenvectors: x,
    })
}

/// Eigenvalues only; cheaper than [`generalized_symmetric_eig`].
pub fn generalized_symmetric_eigenvalues(a: &DenseMatrix, b: &DenseMatrix) -> Result<Vec<f64>> {
    let (c, _) = reduce_pencil(a, b)?;
    c.self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Eigen(format!("{e:?}")))
}

fn reduce_pencil(a: &DenseMatrix, b: &DenseMatrix) -> Result<(DenseMatrix, DenseMatrix)> {
    let n = a.nrows();
    if a.ncols() != n || b.nrows() != n || b.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "pencil {}x{} / {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    let l = b
        .llt(Side::Lower)
        .map_err(|_| Error::NotPositiveDefinite)?
        .L()
        .to_owned();
    // C = L⁻¹ A L⁻ᵀ
    let mut y = symmetrize(a);
    l.solve_lower_triangular_in_place(y.as_mut());
    let mut c = y.transpose().to_owned();
    l.solve_lower_triangular_in_place(c.as_mut());
    Ok((symmetrize(&c), l))
}

/// Singular values, descending.
pub fn singular_values(a: &DenseMatrix) -> Result<Vec<f64>> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Ok(Vec::new());
    }
    a.singular_values().map_err(|e| Error::Eigen(format!("{e:?}")))
}

/// Number of singular values above `rel_tol · σ_max`.
pub fn numerical_rank(a: &DenseMatrix, rel_tol: f64) -> usize {
    let s = match singular_values(a) {
        Ok(s) => s,
        Err(_) => return 0,
    };
    let smax = s.first().copied().unwrap_or(0.0);
    if smax == 0.0 {
        return 0;
    }
    s.iter().filter(|&&v| v > rel_tol * smax).count()
}

/// Orthonormal basis (columns) of the null space of `A`.
pub fn null_space(a: &DenseMatrix, rel_tol: f64) -> Result<DenseMatrix> {
    let n = a.ncols();
    if a.nrows() == 0 {
        return Ok(Mat::identity(n, n));
    }
    let svd = a.svd().map_err(|e| Error::Eigen(format!("{e:?}")))?;
    let s = svd.S().column_vector();
    let smax = if s.nrows() > 0 { s[0] } else { 0.0 };
    let rank = (0..s.nrows()).filter(|&i| smax > 0.0 && s[i] > rel_tol * smax).count();
    let v = svd.V();
    Ok(Mat::from_fn(n, n - rank, |i, j| v[(i, rank + j)]))
}

/// Orthonormal basis (columns) of the column space of `A`.
pub fn column_space(a: &DenseMatrix, rel_tol: f64) -> Result<DenseMatrix> {
    let m = a.nrows();
    if a.ncols() == 0 || m == 0 {
        return Ok(Mat::zeros(m, 0));
    }
    let svd = a.thin_svd().map_err(|e| Error::Eigen(format!("{e:?}")))?;
    let s = svd.S().column_vector();
    let smax = if s.nrows() > 0 { s[0] } else { 0.0 };
    let rank = (0..s.nrows()).filter(|&i| smax > 0.0 && s[i] > rel_tol * smax).count();
    let u = svd.U();
    Ok(Mat::from_fn(m, rank, |i, j| u[(i, j)]))
}
