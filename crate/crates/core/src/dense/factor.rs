use nalgebra::DMatrix;

use super::DenseMatrix;
use crate::error::{Error, Result};

/// Pivots smaller than this fraction of `||M||_inf` are treated as zero.
pub const PIVOT_TOL: f64 = 1e-14;

/// Thin Householder QR with the sign convention `diag(R) >= 0`.
///
/// Rank deficiency is not an error: it shows up as (near) zero diagonal
/// entries of `R`.
pub fn qr_factor(m: &DenseMatrix) -> (DenseMatrix, DenseMatrix) {
    let (rows, cols) = m.shape();
    assert!(rows >= cols, "qr_factor requires rows >= cols");
    let qr = m.as_nalgebra().clone().qr();
    let mut q = qr.q();
    let mut r = qr.r();
    for i in 0..cols {
        if r[(i, i)] < 0.0 {
            r.row_mut(i).neg_mut();
            q.column_mut(i).neg_mut();
        }
    }
    (DenseMatrix::from_nalgebra(q), DenseMatrix::from_nalgebra(r))
}

/// Thin SVD `M = U diag(S) V^T` with `S` sorted in nonincreasing order.
pub fn svd_factor(m: &DenseMatrix) -> (DenseMatrix, Vec<f64>, DenseMatrix) {
    let svd = nalgebra::SVD::new(m.as_nalgebra().clone(), true, true);
    let u = svd.u.expect("requested U");
    let vt = svd.v_t.expect("requested V^T");
    let s = svd.singular_values;
    let k = s.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
    let mut uu = DMatrix::zeros(u.nrows(), k);
    let mut vv = DMatrix::zeros(vt.ncols(), k);
    let mut ss = Vec::with_capacity(k);
    for (dst, &src) in order.iter().enumerate() {
        uu.column_mut(dst).copy_from(&u.column(src));
        vv.column_mut(dst).copy_from(&vt.row(src).transpose());
        ss.push(s[src].max(0.0));
    }
    (DenseMatrix::from_nalgebra(uu), ss, DenseMatrix::from_nalgebra(vv))
}

/// LU factorization with partial pivoting, `P M = L U`.
#[derive(Clone, Debug)]
pub struct DenseLu {
    lu: DMatrix<f64>,
    /// `perm[i]` is the original row placed at position `i`.
    perm: Vec<usize>,
}

impl DenseLu {
    pub fn new(m: &DenseMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "LU of a non-square {}x{} matrix",
                m.rows(),
                m.cols()
            )));
        }
        let n = m.rows();
        let threshold = PIVOT_TOL * m.norm_inf();
        let mut a = m.as_nalgebra().clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let mut p = k;
            let mut best = a[(k, k)].abs();
            for i in k + 1..n {
                let v = a[(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if !(best > threshold) {
                return Err(Error::SingularMatrix { step: k, pivot: best });
            }
            if p != k {
                a.swap_rows(p, k);
                perm.swap(p, k);
            }
            let pivot = a[(k, k)];
            for i in k + 1..n {
                a[(i, k)] /= pivot;
            }
            for j in k + 1..n {
                let ukj = a[(k, j)];
                if ukj != 0.0 {
                    for i in k + 1..n {
                        let l = a[(i, k)];
                        a[(i, j)] -= l * ukj;
                    }
                }
            }
        }
        Ok(Self { lu: a, perm })
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    /// Solves `M x = b` for a single column in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.dim();
        let mut y: Vec<f64> = self.perm.iter().map(|&i| b[i]).collect();
        for i in 0..n {
            let mut s = y[i];
            for j in 0..i {
                s -= self.lu[(i, j)] * y[j];
            }
            y[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for j in i + 1..n {
                s -= self.lu[(i, j)] * y[j];
            }
            y[i] = s / self.lu[(i, i)];
        }
        b.copy_from_slice(&y);
    }

    /// Solves `M^T x = b` for a single column in place.
    pub fn solve_transpose_in_place(&self, b: &mut [f64]) {
        let n = self.dim();
        let mut z = b.to_vec();
        // U^T z = b
        for j in 0..n {
            let mut s = z[j];
            for i in 0..j {
                s -= self.lu[(i, j)] * z[i];
            }
            z[j] = s / self.lu[(j, j)];
        }
        // L^T w = z
        for j in (0..n).rev() {
            let mut s = z[j];
            for i in j + 1..n {
                s -= self.lu[(i, j)] * z[i];
            }
            z[j] = s;
        }
        for (i, &src) in self.perm.iter().enumerate() {
            b[src] = z[i];
        }
    }

    pub fn solve(&self, rhs: &DenseMatrix) -> DenseMatrix {
        self.solve_columns(rhs, false)
    }

    pub fn solve_transpose(&self, rhs: &DenseMatrix) -> DenseMatrix {
        self.solve_columns(rhs, true)
    }

    fn solve_columns(&self, rhs: &DenseMatrix, transpose: bool) -> DenseMatrix {
        assert_eq!(rhs.rows(), self.dim(), "LU solve: rhs row count mismatch");
        let mut out = rhs.as_nalgebra().clone();
        for j in 0..out.ncols() {
            let mut col: Vec<f64> = out.column(j).iter().copied().collect();
            if transpose {
                self.solve_transpose_in_place(&mut col);
            } else {
                self.solve_in_place(&mut col);
            }
            out.column_mut(j).copy_from_slice(&col);
        }
        DenseMatrix::from_nalgebra(out)
    }
}

/// Solves `M X = RHS` by LU with partial pivoting.
pub fn lu_solve(m: &DenseMatrix, rhs: &DenseMatrix) -> Result<DenseMatrix> {
    if rhs.rows() != m.rows() {
        return Err(Error::DimensionMismatch(format!(
            "lu_solve: {}x{} system with {} right-hand-side rows",
            m.rows(),
            m.cols(),
            rhs.rows()
        )));
    }
    Ok(DenseLu::new(m)?.solve(rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::CounterRng;

    fn random(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
        let mut rng = CounterRng::new(seed);
        DenseMatrix::from_fn(rows, cols, |_, _| rng.next_f64() * 2.0 - 1.0)
    }

    #[test]
    fn qr_identity_and_345() {
        let (q, r) = qr_factor(&DenseMatrix::identity(3));
        assert!((&q - &DenseMatrix::identity(3)).norm_fro() < 1e-15);
        assert!((&r - &DenseMatrix::identity(3)).norm_fro() < 1e-15);

        let m = DenseMatrix::from_row_major(2, 1, vec![3.0, 4.0]).unwrap();
        let (q, r) = qr_factor(&m);
        assert!((q[(0, 0)] - 0.6).abs() < 1e-15);
        assert!((q[(1, 0)] - 0.8).abs() < 1e-15);
        assert!((r[(0, 0)] - 5.0).abs() < 1e-14);
    }

    #[test]
    fn qr_reconstructs_random_6x3() {
        let m = random(6, 3, 11);
        let (q, r) = qr_factor(&m);
        assert!((&(&q * &r) - &m).norm_fro() <= 1e-13 * m.norm_fro());
        assert!((&q.tr_mul(&q) - &DenseMatrix::identity(3)).norm_fro() <= 1e-12 * 3.0);
        for i in 0..3 {
            assert!(r[(i, i)] >= 0.0);
            for j in 0..i {
                assert_eq!(r[(i, j)], 0.0);
            }
        }
    }

    #[test]
    fn svd_trivial_cases() {
        let (_, s, _) = svd_factor(&DenseMatrix::from_diagonal(&[1.0, 2.0]));
        assert!((s[0] - 2.0).abs() < 1e-15 && (s[1] - 1.0).abs() < 1e-15);
        let (_, s, _) = svd_factor(&DenseMatrix::zeros(2, 2));
        assert_eq!(s, vec![0.0, 0.0]);
    }

    #[test]
    fn lu_trivial_and_random() {
        let b = DenseMatrix::from_row_major(3, 1, vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(lu_solve(&DenseMatrix::identity(3), &b).unwrap(), b);

        let d = DenseMatrix::from_diagonal(&[2.0, 4.0]);
        let rhs = DenseMatrix::from_row_major(2, 1, vec![2.0, 4.0]).unwrap();
        let x = lu_solve(&d, &rhs).unwrap();
        assert!((x[(0, 0)] - 1.0).abs() < 1e-15 && (x[(1, 0)] - 1.0).abs() < 1e-15);

        let mut m = random(8, 8, 5);
        for i in 0..8 {
            m[(i, i)] += 8.0;
        }
        let rhs = random(8, 2, 6);
        let lu = DenseLu::new(&m).unwrap();
        let x = lu.solve(&rhs);
        let res = (&(&m * &x) - &rhs).norm_fro();
        assert!(res <= 1e-12 * m.norm_fro() * x.norm_fro());
        let xt = lu.solve_transpose(&rhs);
        let res_t = (&(&m.transpose() * &xt) - &rhs).norm_fro();
        assert!(res_t <= 1e-12 * m.norm_fro() * xt.norm_fro());
    }

    #[test]
    fn lu_reports_singular() {
        let m = DenseMatrix::from_row_major(2, 2, vec![1.0, 2.0, 2.0, 4.0]).unwrap();
        assert!(matches!(DenseLu::new(&m), Err(Error::SingularMatrix { .. })));
    }
}
