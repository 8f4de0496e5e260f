//! Dense and sparse real linear algebra for desk-scale problems.
//!
//! Assembly produces [`SparseMatrix`]; eigenproblems and rank computations
//! densify. Factorizations and the symmetric eigensolver are backed by faer.

mod dense;
mod exact;
mod sparse;

pub use dense::{
    cholesky_solve, column_space, generalized_symmetric_eig, generalized_symmetric_eigenvalues,
    max_abs, null_space, numerical_rank, singular_values, sparse_solve,
    symmetric_indefinite_solve, symmetrize, Spectrum, DEFAULT_RANK_TOL,
};
pub use exact::integer_rank;
pub use sparse::SparseMatrix;

/// Dense column-major real matrix.
pub type DenseMatrix = faer::Mat<f64>;

/// Euclidean norm.
pub fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// `A · x` for a dense matrix.
pub fn dense_matvec(a: &DenseMatrix, x: &[f64]) -> Vec<f64> {
    assert_eq!(a.ncols(), x.len());
    let mut y = vec![0.0; a.nrows()];
    for j in 0..a.ncols() {
        let xj = x[j];
        if xj != 0.0 {
            for (i, yi) in y.iter_mut().enumerate() {
                *yi += a[(i, j)] * xj;
            }
        }
    }
    y
}

pub fn from_rows(rows: &[Vec<f64>]) -> DenseMatrix {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    DenseMatrix::from_fn(n, m, |i, j| rows[i][j])
}
