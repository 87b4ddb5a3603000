use std::fmt;
use std::str::FromStr;

use super::SparseMatrix;
use crate::dense::{DenseLu, DenseMatrix, PIVOT_TOL};
use crate::error::{Error, Result};

/// A pole on the extended real line, never zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Pole {
    Finite(f64),
    Infinity,
}

impl Pole {
    pub fn finite(x: f64) -> Result<Self> {
        if x == 0.0 {
            Err(Error::ZeroShift)
        } else if x.is_finite() {
            Ok(Self::Finite(x))
        } else if x.is_nan() {
            Err(Error::InvalidConfig("pole is NaN".into()))
        } else {
            Ok(Self::Infinity)
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Self::Infinity)
    }

    pub fn value(&self) -> Option<f64> {
        match *self {
            Self::Finite(x) => Some(x),
            Self::Infinity => None,
        }
    }

    /// `1/sigma`, with `1/inf = 0`.
    pub fn reciprocal(&self) -> f64 {
        match *self {
            Self::Finite(x) => 1.0 / x,
            Self::Infinity => 0.0,
        }
    }

    /// The pole moved by `-c`, as used when running on `A - c I`.
    pub fn shifted_by(&self, c: f64) -> Result<Self> {
        match *self {
            Self::Finite(x) => Self::finite(x - c),
            Self::Infinity => Ok(Self::Infinity),
        }
    }
}

impl fmt::Display for Pole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Finite(x) => write!(f, "{x:e}"),
            Self::Infinity => write!(f, "inf"),
        }
    }
}

impl FromStr for Pole {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s.to_ascii_lowercase().as_str() {
            "inf" | "+inf" | "infinity" | "∞" => Ok(Self::Infinity),
            _ => {
                let x: f64 = s.parse().map_err(|_| Error::InvalidConfig(format!("cannot parse pole {s:?}")))?;
                Self::finite(x)
            }
        }
    }
}

#[derive(Clone, Debug)]
enum Factor {
    Identity,
    Banded(BandedLu),
    Dense(DenseLu),
}

/// Reusable factorization of `I - A/sigma`.
///
/// Internally `sigma I - A` is factored and solutions are scaled by `sigma`,
/// which keeps the factor well scaled for very small or very large poles.
/// For `sigma = inf` no factor is stored and solves return the input.
#[derive(Clone, Debug)]
pub struct ShiftedFactorization {
    pole: Pole,
    n: usize,
    factor: Factor,
}

/// Use the banded solver unless the band covers most of the matrix.
fn prefer_banded(n: usize, kl: usize, ku: usize) -> bool {
    2 * (kl + ku) < n
}

impl ShiftedFactorization {
    pub fn new(a: &SparseMatrix, pole: Pole) -> Result<Self> {
        let n = a.n();
        let sigma = match pole {
            Pole::Infinity => return Ok(Self { pole, n, factor: Factor::Identity }),
            Pole::Finite(x) if x == 0.0 => return Err(Error::ZeroShift),
            Pole::Finite(x) => x,
        };
        let m = a.scale(-1.0).add_identity(sigma);
        let (kl, ku) = m.bandwidth();
        let factor = if prefer_banded(n, kl, ku) {
            Factor::Banded(BandedLu::new(&m, kl, ku).map_err(|_| Error::SingularShift { shift: sigma })?)
        } else {
            Factor::Dense(DenseLu::new(&m.to_dense()).map_err(|_| Error::SingularShift { shift: sigma })?)
        };
        Ok(Self { pole, n, factor })
    }

    pub fn pole(&self) -> Pole {
        self.pole
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// `(I - A/sigma)^{-1} X`, or `(I - A/sigma)^{-T} X` when `transpose`.
    pub fn solve(&self, rhs: &DenseMatrix, transpose: bool) -> Result<DenseMatrix> {
        if rhs.rows() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "right-hand side has {} rows, factorization has dimension {}",
                rhs.rows(),
                self.n
            )));
        }
        let mut out = rhs.clone();
        let sigma = match self.pole {
            Pole::Infinity => return Ok(out),
            Pole::Finite(x) => x,
        };
        if self.n == 0 {
            return Ok(out);
        }
        for col in out.as_nalgebra_mut().as_mut_slice().chunks_mut(self.n) {
            match (&self.factor, transpose) {
                (Factor::Banded(lu), false) => lu.solve_in_place(col),
                (Factor::Banded(lu), true) => lu.solve_transpose_in_place(col),
                (Factor::Dense(lu), false) => lu.solve_in_place(col),
                (Factor::Dense(lu), true) => lu.solve_transpose_in_place(col),
                (Factor::Identity, _) => unreachable!("finite pole always has a factor"),
            }
        }
        out.scale_mut(sigma);
        Ok(out)
    }
}

/// `factor_shift` under its operation name.
pub fn factor_shift(a: &SparseMatrix, pole: Pole) -> Result<ShiftedFactorization> {
    ShiftedFactorization::new(a, pole)
}

/// `solve_shift` under its operation name.
pub fn solve_shift(f: &ShiftedFactorization, rhs: &DenseMatrix, transpose: bool) -> Result<DenseMatrix> {
    f.solve(rhs, transpose)
}

/// Banded LU with partial pivoting.
///
/// Row `i` stores columns `i - kl ..= i + kl + ku`; the extra `kl` columns
/// hold the fill created by row interchanges. Multipliers overwrite the
/// eliminated positions.
#[derive(Clone, Debug)]
struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
    /// Row swapped with row `k` at step `k`.
    piv: Vec<usize>,
}

impl BandedLu {
    fn new(m: &SparseMatrix, kl: usize, ku: usize) -> Result<Self> {
        let n = m.n();
        let width = 2 * kl + ku + 1;
        let mut lu = Self { n, kl, ku, width, data: vec![0.0; n * width], piv: vec![0; n] };
        for (i, j, v) in m.iter() {
            *lu.at_mut(i, j) = v;
        }
        let threshold = PIVOT_TOL * m.norm_inf();
        let reach = kl + ku;
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = lu.at(k, k).abs();
            for i in k + 1..=last_row {
                let v = lu.at(i, k).abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if !(best > threshold) {
                return Err(Error::SingularMatrix { step: k, pivot: best });
            }
            lu.piv[k] = p;
            let last_col = (k + reach).min(n - 1);
            if p != k {
                for c in k..=last_col {
                    let a = lu.at(k, c);
                    let b = lu.at(p, c);
                    *lu.at_mut(k, c) = b;
                    *lu.at_mut(p, c) = a;
                }
            }
            let pivot = lu.at(k, k);
            for i in k + 1..=last_row {
                let l = lu.at(i, k) / pivot;
                *lu.at_mut(i, k) = l;
                if l != 0.0 {
                    for c in k + 1..=last_col {
                        let u = lu.at(k, c);
                        *lu.at_mut(i, c) -= l * u;
                    }
                }
            }
        }
        Ok(lu)
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j <= i + self.kl + self.ku);
        i * self.width + (j + self.kl - i)
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.data[self.idx(i, j)]
    }

    #[inline]
    fn at_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        let k = self.idx(i, j);
        &mut self.data[k]
    }

    fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        let reach = self.kl + self.ku;
        for k in 0..n {
            b.swap(k, self.piv[k]);
            let bk = b[k];
            if bk != 0.0 {
                for i in k + 1..=(k + self.kl).min(n - 1) {
                    b[i] -= self.at(i, k) * bk;
                }
            }
        }
        for k in (0..n).rev() {
            let mut s = b[k];
            for c in k + 1..=(k + reach).min(n - 1) {
                s -= self.at(k, c) * b[c];
            }
            b[k] = s / self.at(k, k);
        }
    }

    fn solve_transpose_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        let reach = self.kl + self.ku;
        for k in 0..n {
            let y = b[k] / self.at(k, k);
            b[k] = y;
            if y != 0.0 {
                for c in k + 1..=(k + reach).min(n - 1) {
                    b[c] -= self.at(k, c) * y;
                }
            }
        }
        for k in (0..n).rev() {
            let mut s = b[k];
            for i in k + 1..=(k + self.kl).min(n - 1) {
                s -= self.at(i, k) * b[i];
            }
            b[k] = s;
            b.swap(k, self.piv[k]);
        }
    }
}
