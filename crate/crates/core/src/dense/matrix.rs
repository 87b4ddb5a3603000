use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Dense real matrix used for every small projected object and for the
/// tall `n x p` block vectors.
///
/// Storage is delegated to `nalgebra`; the row-major view is available
/// through [`DenseMatrix::from_row_major`] and [`DenseMatrix::to_row_major`].
#[derive(Clone, PartialEq)]
pub struct DenseMatrix(DMatrix<f64>);

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self(DMatrix::zeros(rows, cols))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    /// Builds a matrix from row-major entries, rejecting non-finite values.
    pub fn from_row_major(rows: usize, cols: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        if let Some(k) = entries.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: k / cols.max(1), col: k % cols.max(1) });
        }
        Ok(Self(DMatrix::from_row_slice(rows, cols, &entries)))
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        Self(DMatrix::from_fn(rows, cols, |i, j| f(i, j)))
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self::from_fn(n, n, |i, j| if i == j { diag[i] } else { 0.0 })
    }

    pub fn from_nalgebra(m: DMatrix<f64>) -> Self {
        Self(m)
    }

    pub fn as_nalgebra(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn as_nalgebra_mut(&mut self) -> &mut DMatrix<f64> {
        &mut self.0
    }

    pub fn into_nalgebra(self) -> DMatrix<f64> {
        self.0
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.0.shape()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn to_row_major(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.rows() * self.cols());
        for i in 0..self.rows() {
            for j in 0..self.cols() {
                out.push(self.0[(i, j)]);
            }
        }
        out
    }

    pub fn check_finite(&self) -> Result<()> {
        for j in 0..self.cols() {
            for i in 0..self.rows() {
                if !self.0[(i, j)].is_finite() {
                    return Err(Error::NonFinite { row: i, col: j });
                }
            }
        }
        Ok(())
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    /// `self^T * rhs` without forming the transpose.
    pub fn tr_mul(&self, rhs: &DenseMatrix) -> Self {
        Self(self.0.tr_mul(&rhs.0))
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(&self.0 * s)
    }

    pub fn scale_mut(&mut self, s: f64) {
        self.0 *= s;
    }

    /// `self += s * other`
    pub fn axpy(&mut self, s: f64, other: &DenseMatrix) {
        self.0.zip_apply(&other.0, |a, b| *a += s * b);
    }

    /// Copy of the `nr x nc` block starting at `(r0, c0)`.
    pub fn block(&self, r0: usize, c0: usize, nr: usize, nc: usize) -> Self {
        Self(self.0.view((r0, c0), (nr, nc)).into_owned())
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, m: &DenseMatrix) {
        self.0.view_mut((r0, c0), m.shape()).copy_from(&m.0);
    }

    pub fn columns(&self, c0: usize, nc: usize) -> Self {
        self.block(0, c0, self.rows(), nc)
    }

    pub fn rows_range(&self, r0: usize, nr: usize) -> Self {
        self.block(r0, 0, nr, self.cols())
    }

    /// Horizontal concatenation; all parts must share the row count.
    pub fn hcat(parts: &[&DenseMatrix]) -> Self {
        let rows = parts.first().map_or(0, |m| m.rows());
        let cols = parts.iter().map(|m| m.cols()).sum();
        let mut out = Self::zeros(rows, cols);
        let mut c = 0;
        for m in parts {
            assert_eq!(m.rows(), rows, "hcat: row count mismatch");
            out.set_block(0, c, m);
            c += m.cols();
        }
        out
    }

    /// Vertical concatenation; all parts must share the column count.
    pub fn vcat(parts: &[&DenseMatrix]) -> Self {
        let cols = parts.first().map_or(0, |m| m.cols());
        let rows = parts.iter().map(|m| m.rows()).sum();
        let mut out = Self::zeros(rows, cols);
        let mut r = 0;
        for m in parts {
            assert_eq!(m.cols(), cols, "vcat: column count mismatch");
            out.set_block(r, 0, m);
            r += m.rows();
        }
        out
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.rows().min(self.cols())).map(|i| self.0[(i, i)]).collect()
    }

    pub fn trace(&self) -> f64 {
        self.diagonal().iter().sum()
    }

    pub fn norm_fro(&self) -> f64 {
        self.0.norm()
    }

    /// Maximum absolute column sum.
    pub fn norm_1(&self) -> f64 {
        (0..self.cols())
            .map(|j| self.0.column(j).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.rows())
            .map(|i| self.0.row(i).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Spectral norm. Tall or wide inputs go through the Gram matrix of the
    /// short side, which is exact enough for the `n x p` blocks used here.
    pub fn norm_2(&self) -> f64 {
        let (r, c) = self.shape();
        if r == 0 || c == 0 {
            return 0.0;
        }
        let scale = self.max_abs();
        if scale == 0.0 {
            return 0.0;
        }
        let scaled = &self.0 / scale;
        let gram = if c <= r { scaled.tr_mul(&scaled) } else { &scaled * scaled.transpose() };
        let eig = nalgebra::SymmetricEigen::new(gram);
        let top = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
        scale * top.max(0.0).sqrt()
    }

    pub fn map(&self, f: impl FnMut(f64) -> f64) -> Self {
        Self(self.0.map(f))
    }
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DenseMatrix {}x{} {:?}", self.rows(), self.cols(), self.to_row_major())
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    fn index(&self, idx: (usize, usize)) -> &f64 {
        &self.0[idx]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, idx: (usize, usize)) -> &mut f64 {
        &mut self.0[idx]
    }
}

impl Mul for &DenseMatrix {
    type Output = DenseMatrix;
    fn mul(self, rhs: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols(), rhs.rows(), "matrix product dimension mismatch");
        DenseMatrix(&self.0 * &rhs.0)
    }
}

impl Add for &DenseMatrix {
    type Output = DenseMatrix;
    fn add(self, rhs: &DenseMatrix) -> DenseMatrix {
        DenseMatrix(&self.0 + &rhs.0)
    }
}

impl Sub for &DenseMatrix {
    type Output = DenseMatrix;
    fn sub(self, rhs: &DenseMatrix) -> DenseMatrix {
        DenseMatrix(&self.0 - &rhs.0)
    }
}

impl Neg for &DenseMatrix {
    type Output = DenseMatrix;
    fn neg(self) -> DenseMatrix {
        DenseMatrix(-&self.0)
    }
}
