//! Sparse matrix storage and direct factorizations.
//!
//! Assembly produces triplets; [`SparseMatrix`] stores compressed rows for
//! products and hands a compressed-column copy to faer for the sparse direct
//! factorizations (Cholesky for SPD blocks, LU for the saddle and coupled
//! systems). Everything runs sequentially so repeated runs are bit-identical.

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use nalgebra::{DMatrix, DVector};

use crate::error::Error;
use crate::Result;

/// Compressed sparse row matrix over f64.
#[derive(Debug, Clone)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseMatrix {
    /// Builds from triplets; duplicate entries are summed. Entries that sum
    /// to exactly zero are kept out of the structure only if never inserted.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut order: Vec<usize> = (0..triplets.len()).collect();
        order.sort_unstable_by_key(|&k| (triplets[k].0, triplets[k].1));
        let mut row_ptr = vec![0usize; nrows + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut vals: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for &k in &order {
            let (i, j, v) = triplets[k];
            assert!(i < nrows && j < ncols, "triplet ({i}, {j}) out of bounds");
            if last == Some((i, j)) {
                *vals.last_mut().unwrap() += v;
            } else {
                row_ptr[i + 1] += 1;
                col_idx.push(j);
                vals.push(v);
                last = Some((i, j));
            }
        }
        for i in 0..nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        SparseMatrix {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            vals,
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Row iterator: (column, value) pairs of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        self.col_idx[lo..hi]
            .iter()
            .copied()
            .zip(self.vals[lo..hi].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, v)| v)
    }

    pub fn matvec(&self, x: &DVector<f64>) -> DVector<f64> {
        assert_eq!(x.len(), self.ncols);
        let mut y = DVector::zeros(self.nrows);
        for i in 0..self.nrows {
            let mut acc = 0.0;
            for (j, v) in self.row(i) {
                acc += v * x[j];
            }
            y[i] = acc;
        }
        y
    }

    /// y = A^T x without forming the transpose.
    pub fn tr_matvec(&self, x: &DVector<f64>) -> DVector<f64> {
        assert_eq!(x.len(), self.nrows);
        let mut y = DVector::zeros(self.ncols);
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                y[j] += v * x[i];
            }
        }
        y
    }

    /// x^T A y.
    pub fn quadratic_form(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        assert_eq!(x.len(), self.nrows);
        assert_eq!(y.len(), self.ncols);
        let mut acc = 0.0;
        for i in 0..self.nrows {
            let mut row_acc = 0.0;
            for (j, v) in self.row(i) {
                row_acc += v * y[j];
            }
            acc += x[i] * row_acc;
        }
        acc
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                m[(i, j)] += v;
            }
        }
        m
    }

    /// Largest |a_ij - a_ji| over the stored pattern; 0 for symmetric.
    pub fn symmetry_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }

    fn to_faer(&self) -> Result<SparseColMat<usize, f64>> {
        let mut trips = Vec::with_capacity(self.nnz());
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                trips.push(Triplet::new(i, j, v));
            }
        }
        SparseColMat::try_new_from_triplets(self.nrows, self.ncols, &trips)
            .map_err(|e| Error::LinearSolve(format!("sparse conversion failed: {e:?}")))
    }

    /// Sparse Cholesky; the matrix must be symmetric positive definite.
    pub fn factor_llt(&self) -> Result<SparseCholesky> {
        let m = self.to_faer()?;
        let f = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| {
            m.sp_cholesky(faer::Side::Lower)
        }))
        .map_err(|_| Error::LinearSolve("Cholesky factorization panicked (singular?)".into()))?
        .map_err(|e| Error::LinearSolve(format!("Cholesky factorization failed: {e:?}")))?;
        Ok(SparseCholesky { inner: f, n: self.nrows })
    }

    /// Sparse LU with partial pivoting for general square matrices.
    pub fn factor_lu(&self) -> Result<SparseLu> {
        let m = self.to_faer()?;
        let f = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| m.sp_lu()))
            .map_err(|_| Error::LinearSolve("LU factorization panicked (singular matrix)".into()))?
            .map_err(|e| Error::LinearSolve(format!("LU factorization failed: {e:?}")))?;
        Ok(SparseLu { inner: f, n: self.nrows })
    }
}

/// Zeroes the rows and columns of constrained dofs in a triplet list and puts
/// a unit diagonal there (symmetric elimination of homogeneous essential
/// conditions).
pub fn eliminate_triplets(
    triplets: &[(usize, usize, f64)],
    row_constrained: &[bool],
    col_constrained: &[bool],
) -> Vec<(usize, usize, f64)> {
    let mut out: Vec<(usize, usize, f64)> = triplets
        .iter()
        .copied()
        .filter(|&(i, j, _)| !row_constrained[i] && !col_constrained[j])
        .collect();
    // Unit diagonal only makes sense for square blocks.
    if row_constrained.len() == col_constrained.len() {
        for (i, &c) in row_constrained.iter().enumerate() {
            if c {
                out.push((i, i, 1.0));
            }
        }
    }
    out
}

/// Zeroes constrained entries of a right-hand side in place.
pub fn zero_constrained(v: &mut DVector<f64>, constrained: &[bool]) {
    for (i, &c) in constrained.iter().enumerate() {
        if c {
            v[i] = 0.0;
        }
    }
}

type FaerLlt = faer::sparse::linalg::solvers::Llt<usize, f64>;
type FaerLu = faer::sparse::linalg::solvers::Lu<usize, f64>;

pub struct SparseCholesky {
    inner: FaerLlt,
    n: usize,
}

impl SparseCholesky {
    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        solve_with(self.n, b, |m| self.inner.solve_in_place(m))
    }

    /// Solves for several right-hand sides given as matrix columns.
    pub fn solve_mat(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        solve_mat_with(self.n, b, |m| self.inner.solve_in_place(m))
    }
}

pub struct SparseLu {
    inner: FaerLu,
    n: usize,
}

impl SparseLu {
    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        solve_with(self.n, b, |m| self.inner.solve_in_place(m))
    }

    pub fn solve_mat(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        solve_mat_with(self.n, b, |m| self.inner.solve_in_place(m))
    }
}

fn solve_with(
    n: usize,
    b: &DVector<f64>,
    f: impl Fn(faer::MatMut<'_, f64>),
) -> DVector<f64> {
    assert_eq!(b.len(), n);
    let mut rhs = faer::Mat::<f64>::from_fn(n, 1, |i, _| b[i]);
    f(rhs.as_mut());
    DVector::from_fn(n, |i, _| rhs[(i, 0)])
}

fn solve_mat_with(
    n: usize,
    b: &DMatrix<f64>,
    f: impl Fn(faer::MatMut<'_, f64>),
) -> DMatrix<f64> {
    assert_eq!(b.nrows(), n);
    let mut rhs = faer::Mat::<f64>::from_fn(n, b.ncols(), |i, j| b[(i, j)]);
    f(rhs.as_mut());
    DMatrix::from_fn(n, b.ncols(), |i, j| rhs[(i, j)])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_sum_and_products() {
        let t = vec![(0, 0, 1.0), (0, 0, 3.0), (1, 2, 2.0), (0, 1, -1.0)];
        let m = SparseMatrix::from_triplets(2, 3, &t);
        assert_eq!(m.nnz(), 3);
        assert_eq!(m.get(0, 0), 4.0);
        let x = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let y = m.matvec(&x);
        assert_eq!(y[0], 4.0 - 2.0);
        assert_eq!(y[1], 6.0);
        let z = DVector::from_vec(vec![1.0, 1.0]);
        let w = m.tr_matvec(&z);
        assert_eq!(w[0], 4.0);
        assert_eq!(w[1], -1.0);
        assert_eq!(w[2], 2.0);
    }

    #[test]
    fn cholesky_and_lu_solve() {
        let t = vec![(0, 0, 4.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 3.0)];
        let m = SparseMatrix::from_triplets(2, 2, &t);
        let b = DVector::from_vec(vec![1.0, 2.0]);
        let x = m.factor_llt().unwrap().solve(&b);
        assert!((x[0] - 1.0 / 11.0).abs() < 1e-14);
        assert!((x[1] - 7.0 / 11.0).abs() < 1e-14);
        let y = m.factor_lu().unwrap().solve(&b);
        assert!((y[0] - x[0]).abs() < 1e-14);
    }

    #[test]
    fn singular_lu_is_an_error() {
        let t = vec![(0, 0, 1.0), (0, 1, 2.0), (1, 0, 2.0), (1, 1, 4.0)];
        let m = SparseMatrix::from_triplets(2, 2, &t);
        assert!(m.factor_lu().is_err());
    }

    #[test]
    fn elimination_keeps_unit_diagonal() {
        let t = vec![(0, 0, 2.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 2.0)];
        let con = vec![true, false];
        let e = eliminate_triplets(&t, &con, &con);
        let m = SparseMatrix::from_triplets(2, 2, &e);
        assert_eq!(m.get(0, 0), 1.0);
        assert_eq!(m.get(0, 1), 0.0);
        assert_eq!(m.get(1, 0), 0.0);
        assert_eq!(m.get(1, 1), 2.0);
    }
}
