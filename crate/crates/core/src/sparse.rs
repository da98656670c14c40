//! Minimal CSR storage for the assembled complex operators, plus the bridge
//! to faer's sparse LU.

use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;
use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<Complex64>,
}

impl CsrMatrix {
    /// Rows may contain duplicate columns; they are summed.
    pub fn from_rows(ncols: usize, rows: Vec<Vec<(usize, Complex64)>>) -> Self {
        let nrows = rows.len();
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            let mut last: Option<usize> = None;
            for (c, v) in row {
                debug_assert!(c < ncols);
                if last == Some(c) {
                    *vals.last_mut().unwrap() += v;
                } else {
                    cols.push(c);
                    vals.push(v);
                    last = Some(c);
                }
            }
            row_ptr.push(cols.len());
        }
        CsrMatrix {
            nrows,
            ncols,
            row_ptr,
            cols,
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

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
        self.cols[a..b].iter().copied().zip(self.vals[a..b].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.row(r)
            .find(|&(cc, _)| cc == c)
            .map(|(_, v)| v)
            .unwrap_or_default()
    }

    pub fn mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows)
            .map(|r| self.row(r).map(|(c, v)| v * x[c]).sum())
            .collect()
    }

    /// `self * X` for a dense block of column vectors.
    pub fn mul_mat(&self, x: &Mat<Complex64>) -> Mat<Complex64> {
        assert_eq!(x.nrows(), self.ncols);
        let mut out = Mat::<Complex64>::zeros(self.nrows, x.ncols());
        for k in 0..x.ncols() {
            let xc = x.col(k);
            for r in 0..self.nrows {
                let mut acc = Complex64::default();
                for (c, v) in self.row(r) {
                    acc += v * xc[c];
                }
                out[(r, k)] = acc;
            }
        }
        out
    }

    /// Returns `alpha * self + beta * diag(d)`.
    pub fn add_diagonal(&self, alpha: Complex64, beta: Complex64, d: &[f64]) -> CsrMatrix {
        assert_eq!(self.nrows, self.ncols);
        let rows = (0..self.nrows)
            .map(|r| {
                let mut row: Vec<_> = self.row(r).map(|(c, v)| (c, alpha * v)).collect();
                row.push((r, beta * d[r]));
                row
            })
            .collect();
        CsrMatrix::from_rows(self.ncols, rows)
    }

    pub fn to_dense(&self) -> Mat<Complex64> {
        let mut m = Mat::<Complex64>::zeros(self.nrows, self.ncols);
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                m[(r, c)] += v;
            }
        }
        m
    }

    pub fn to_faer(&self) -> Result<SparseColMat<usize, Complex64>> {
        let mut t = Vec::with_capacity(self.nnz());
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                t.push(Triplet::new(r, c, v));
            }
        }
        SparseColMat::try_new_from_triplets(self.nrows, self.ncols, &t)
            .map_err(|e| Error::LinearSolve(format!("sparse assembly: {e:?}")))
    }
}

/// Sparse LU factorization kept alive for repeated solves.
pub struct SparseLu {
    n: usize,
    lu: faer::sparse::linalg::solvers::Lu<usize, Complex64>,
}

impl SparseLu {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        let m = a.to_faer()?;
        let lu = m
            .sp_lu()
            .map_err(|e| Error::LinearSolve(format!("sparse LU: {e:?}")))?;
        Ok(SparseLu { n: a.nrows(), lu })
    }

    pub fn solve_in_place(&self, rhs: &mut Mat<Complex64>) {
        use faer::prelude::Solve;
        assert_eq!(rhs.nrows(), self.n);
        self.lu.solve_in_place(rhs.as_mut());
    }

    pub fn solve_vec(&self, b: &[Complex64]) -> Vec<Complex64> {
        let mut m = Mat::<Complex64>::from_fn(self.n, 1, |i, _| b[i]);
        self.solve_in_place(&mut m);
        (0..self.n).map(|i| m[(i, 0)]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn duplicates_are_summed_and_solve_roundtrips() {
        let rows = vec![
            vec![(0, c(2.0, 0.0)), (1, c(-1.0, 0.5)), (0, c(1.0, 0.0))],
            vec![(0, c(-1.0, -0.5)), (1, c(3.0, 1.0))],
        ];
        let a = CsrMatrix::from_rows(2, rows);
        assert_eq!(a.get(0, 0), c(3.0, 0.0));
        let x = vec![c(1.0, 2.0), c(-0.5, 0.25)];
        let b = a.mul_vec(&x);
        let lu = SparseLu::new(&a).unwrap();
        let y = lu.solve_vec(&b);
        for (u, v) in x.iter().zip(&y) {
            assert!((u - v).norm() < 1e-14);
        }
    }
}
