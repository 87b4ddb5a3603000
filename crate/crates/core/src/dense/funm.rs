use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{eig_general, eig_symmetric, expm_dense, DenseMatrix};
use crate::error::{Error, Result};

/// Eigenvalues closer than this to a branch cut or singularity are rejected.
pub const SINGULAR_SET_TOL: f64 = 1e-10;
/// Largest accepted eigenvector condition number.
pub const MAX_EIGVEC_CONDITION: f64 = 1e8;
/// Matrices whose skew part is below this relative size take the symmetric path.
const SYMMETRY_TOL: f64 = 1e-10;
/// Below this magnitude `log(1+x)/x` is evaluated by its Taylor series.
const LOG1P_SERIES_RADIUS: f64 = 1e-4;

/// Scalar functions whose action on a block vector can be approximated.
///
/// `InvPower` and `Log1pOverX` are Cauchy-Stieltjes functions; `Exp` is
/// carried along because the same drivers serve it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StieltjesFunction {
    /// `x^(-alpha)` with `0 < alpha < 1`.
    InvPower { alpha: f64 },
    /// `log(1 + x) / x`, extended by 1 at the origin.
    Log1pOverX,
    /// `exp(t x)`.
    Exp { t: f64 },
}

impl StieltjesFunction {
    pub fn inv_power(alpha: f64) -> Result<Self> {
        if alpha > 0.0 && alpha < 1.0 {
            Ok(Self::InvPower { alpha })
        } else {
            Err(Error::InvalidSpec(format!("x^-alpha requires 0 < alpha < 1, got {alpha}")))
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Self::InvPower { alpha } => x.powf(-alpha),
            Self::Log1pOverX => {
                if x.abs() < LOG1P_SERIES_RADIUS {
                    log1p_over_x_series(x)
                } else {
                    x.ln_1p() / x
                }
            }
            Self::Exp { t } => (t * x).exp(),
        }
    }

    pub fn eval_complex(&self, z: Complex64) -> Complex64 {
        if z.im == 0.0 {
            return Complex64::new(self.eval(z.re), 0.0);
        }
        match *self {
            Self::InvPower { alpha } => (z.ln() * -alpha).exp(),
            Self::Log1pOverX => {
                if z.norm() < LOG1P_SERIES_RADIUS {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for k in (0..6).rev() {
                        let c = if k % 2 == 0 { 1.0 } else { -1.0 } / (k as f64 + 1.0);
                        acc = acc * z + c;
                    }
                    acc
                } else {
                    (z + 1.0).ln() / z
                }
            }
            Self::Exp { t } => (z * t).exp(),
        }
    }

    /// Distance from `z` to the set where the function is not analytic.
    pub fn singular_distance(&self, z: Complex64) -> f64 {
        match self {
            Self::InvPower { .. } => {
                if z.re <= 0.0 {
                    z.im.abs()
                } else {
                    z.norm()
                }
            }
            Self::Log1pOverX => {
                if z.re <= -1.0 {
                    z.im.abs()
                } else {
                    (z + 1.0).norm()
                }
            }
            Self::Exp { .. } => f64::INFINITY,
        }
    }

    fn check_spectrum(&self, z: Complex64) -> Result<()> {
        if self.singular_distance(z) < SINGULAR_SET_TOL {
            return Err(Error::SpectrumOnSingularSet { function: self.to_string(), re: z.re, im: z.im });
        }
        Ok(())
    }
}

impl fmt::Display for StieltjesFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::InvPower { alpha } => write!(f, "f1:{alpha}"),
            Self::Log1pOverX => write!(f, "f2"),
            Self::Exp { t } if *t == 1.0 => write!(f, "f3"),
            Self::Exp { t } => write!(f, "exp({t}x)"),
        }
    }
}

fn log1p_over_x_series(x: f64) -> f64 {
    // 1 - x/2 + x^2/3 - x^3/4 + x^4/5 - x^5/6
    let mut acc = 0.0;
    for k in (0..6).rev() {
        let c = if k % 2 == 0 { 1.0 } else { -1.0 } / (k as f64 + 1.0);
        acc = acc * x + c;
    }
    acc
}

/// `f(M)` for a small dense matrix.
///
/// `Exp` goes through [`expm_dense`]. Otherwise the matrix is diagonalized:
/// symmetric inputs by the symmetric eigensolver, everything else by
/// [`eig_general`] as `X f(L) X^-1`.
pub fn funm_dense(m: &DenseMatrix, f: &StieltjesFunction) -> Result<DenseMatrix> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "matrix function of a non-square {}x{} matrix",
            m.rows(),
            m.cols()
        )));
    }
    if let StieltjesFunction::Exp { t } = f {
        return expm_dense(&m.scale(*t));
    }
    let n = m.rows();
    let skew = (m - &m.transpose()).norm_fro();
    if skew <= SYMMETRY_TOL * m.norm_fro() {
        let sym = (m + &m.transpose()).scale(0.5);
        let eig = eig_symmetric(&sym);
        for &lambda in &eig.values {
            f.check_spectrum(Complex64::new(lambda, 0.0))?;
        }
        let x = &eig.vectors;
        let scaled = DenseMatrix::from_fn(n, n, |i, j| x[(i, j)] * f.eval(eig.values[j]));
        return Ok(&scaled * &x.transpose());
    }

    let eig = eig_general(m)?;
    for &lambda in &eig.values {
        f.check_spectrum(lambda)?;
    }
    let x = &eig.vectors;
    let x_inv = x.clone().try_inverse().ok_or(Error::IllConditionedEigenvectors {
        condition: f64::INFINITY,
    })?;
    let condition = complex_norm_1(x) * complex_norm_1(&x_inv);
    if !(condition <= MAX_EIGVEC_CONDITION) {
        return Err(Error::IllConditionedEigenvectors { condition });
    }
    let fvals: Vec<Complex64> = eig.values.iter().map(|&z| f.eval_complex(z)).collect();
    let scaled = DMatrix::from_fn(n, n, |i, j| x[(i, j)] * fvals[j]);
    let result = scaled * x_inv;
    let re = result.map(|z| z.re);
    let im_norm = result.map(|z| z.im).norm();
    if im_norm > 1e-8 * re.norm().max(f64::MIN_POSITIVE) {
        return Err(Error::IllConditionedEigenvectors { condition });
    }
    Ok(DenseMatrix::from_nalgebra(re))
}

fn complex_norm_1(m: &DMatrix<Complex64>) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}
