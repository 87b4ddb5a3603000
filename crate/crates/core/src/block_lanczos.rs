//! Nonsymmetric block Lanczos with SVD rebiorthonormalization.

use crate::dense::{expm_dense, qr_factor, svd_factor, DenseLu, DenseMatrix};
use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

/// Smallest admissible singular value of `W^T V` for a new block pair.
pub const BREAKDOWN_TOL: f64 = 1e-12;
/// Smallest admissible QR diagonal, relative to the size of the block
/// before projection.
pub const DEFLATION_TOL: f64 = 1e-12;

/// Why a Lanczos process stopped before the requested step count.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Breakdown {
    Serious { step: usize, sigma_min: f64 },
    RankDeflation { step: usize, diag: f64 },
}

impl Breakdown {
    pub fn to_error(self) -> Error {
        match self {
            Self::Serious { step, sigma_min } => Error::SeriousBreakdown { step, sigma_min },
            Self::RankDeflation { step, diag } => Error::RankDeflation { step, diag },
        }
    }
}

/// A pair of new blocks `V, W` with `W^T V = I` and the coefficients
/// `S = V b`, `R = W d^T`.
pub(crate) struct Biorthonormalized {
    pub v: DenseMatrix,
    pub w: DenseMatrix,
    pub b: DenseMatrix,
    pub d: DenseMatrix,
}

/// QR of both remainders, then the SVD rescaling that makes the new pair
/// biorthonormal. `scale_s`/`scale_r` are the norms used for the
/// deflation test.
pub(crate) fn biorthonormalize(
    s: &DenseMatrix,
    r: &DenseMatrix,
    scale_s: f64,
    scale_r: f64,
    step: usize,
) -> std::result::Result<Biorthonormalized, Breakdown> {
    let (qv, rv) = qr_factor(s);
    let (qw, rw) = qr_factor(r);
    for (rr, scale) in [(&rv, scale_s), (&rw, scale_r)] {
        let min_diag = rr.diagonal().into_iter().fold(f64::INFINITY, f64::min);
        if !(min_diag > DEFLATION_TOL * scale) {
            return Err(Breakdown::RankDeflation { step, diag: min_diag });
        }
    }
    let (u, sig, z) = svd_factor(&qw.tr_mul(&qv));
    let sigma_min = sig.last().copied().unwrap_or(0.0);
    if !(sigma_min > BREAKDOWN_TOL) {
        return Err(Breakdown::Serious { step, sigma_min });
    }
    let p = sig.len();
    let sqrt: Vec<f64> = sig.iter().map(|s| s.sqrt()).collect();
    let scale_cols = |m: &DenseMatrix, f: &dyn Fn(usize) -> f64| DenseMatrix::from_fn(m.rows(), p, |i, j| m[(i, j)] * f(j));
    let scale_rows = |m: &DenseMatrix, f: &dyn Fn(usize) -> f64| DenseMatrix::from_fn(p, m.cols(), |i, j| m[(i, j)] * f(i));
    let v = scale_cols(&(&qv * &z), &|j| 1.0 / sqrt[j]);
    let w = scale_cols(&(&qw * &u), &|j| 1.0 / sqrt[j]);
    let b = scale_rows(&z.tr_mul(&rv), &|i| sqrt[i]);
    // R = Qw Rw = W (Rw^T U Sigma^{1/2})^T
    let d = scale_cols(&rw.tr_mul(&u), &|j| sqrt[j]);
    Ok(Biorthonormalized { v, w, b, d })
}

/// Output of the nonsymmetric block Lanczos process.
///
/// `A V_m = V_m T_m + V~_{m+1} E_m^T` where `V~_{m+1} = V_{m+1} beta_{m+1}`,
/// and symmetrically for `A^T`.
#[derive(Clone, Debug)]
pub struct TridiagApprox {
    pub p: usize,
    /// Number of completed steps.
    pub m: usize,
    pub v: DenseMatrix,
    pub w: DenseMatrix,
    /// Diagonal blocks `alpha_1 .. alpha_m`.
    pub alpha: Vec<DenseMatrix>,
    /// Subdiagonal blocks `beta_2 .. beta_{m+1}`; the last one is only
    /// present when the process did not stop early.
    pub beta: Vec<DenseMatrix>,
    /// Superdiagonal blocks `delta_2 .. delta_{m+1}`.
    pub delta: Vec<DenseMatrix>,
    /// `beta` from `C^T B = delta beta`, so that `B = V_1 beta`.
    pub beta0: DenseMatrix,
    /// `V_{m+1}, W_{m+1}` when the last step produced them.
    pub v_next: Option<DenseMatrix>,
    pub w_next: Option<DenseMatrix>,
    /// `A V_m - V_m T_m` restricted to its last block column, which is
    /// `V_{m+1} beta_{m+1}` whenever that block exists.
    pub v_remainder: DenseMatrix,
    /// `A^T W_m - W_m T_m^T` restricted to its last block column.
    pub w_remainder: DenseMatrix,
    pub stop: Option<Breakdown>,
}

impl TridiagApprox {
    /// The block tridiagonal projection `T_m = W_m^T A V_m`.
    pub fn projected(&self) -> DenseMatrix {
        let (p, m) = (self.p, self.m);
        let mut t = DenseMatrix::zeros(m * p, m * p);
        for j in 0..m {
            t.set_block(j * p, j * p, &self.alpha[j]);
            if j + 1 < m {
                t.set_block((j + 1) * p, j * p, &self.beta[j]);
                t.set_block(j * p, (j + 1) * p, &self.delta[j]);
            }
        }
        t
    }

    /// `V_m exp(t T_m) E_1 beta`.
    pub fn exp_action(&self, t: f64) -> Result<DenseMatrix> {
        let e = expm_dense(&self.projected().scale(t))?;
        Ok(&self.v * &(&e.columns(0, self.p).rows_range(0, self.m * self.p) * &self.beta0))
    }
}

/// Runs `m` steps of the nonsymmetric block Lanczos process on `(A, B, C)`.
///
/// A breakdown in the middle returns the steps completed so far with
/// `stop` set; only a failure to start is an error.
pub fn nbla(a: &SparseMatrix, b: &DenseMatrix, c: &DenseMatrix, m: usize) -> Result<TridiagApprox> {
    let n = a.n();
    let p = b.cols();
    if b.rows() != n || c.rows() != n || c.cols() != p {
        return Err(Error::DimensionMismatch(format!(
            "B is {}x{}, C is {}x{}, A is {n}x{n}",
            b.rows(),
            b.cols(),
            c.rows(),
            c.cols()
        )));
    }
    if p == 0 || m == 0 || m * p > n {
        return Err(Error::DimensionMismatch(format!("need 0 < m*p <= n, got m={m}, p={p}, n={n}")));
    }
    let ctb = c.tr_mul(b);
    let (delta0, beta0) = qr_factor(&ctb);
    let lu = DenseLu::new(&beta0).map_err(|_| Error::SeriousBreakdown {
        step: 0,
        sigma_min: beta0.diagonal().into_iter().fold(f64::INFINITY, |a, v| a.min(v.abs())),
    })?;
    // V_1 = B beta^{-1}, i.e. beta^T V_1^T = B^T
    let v1 = lu.solve_transpose(&b.transpose()).transpose();
    let w1 = c * &delta0;

    let mut vs = vec![v1];
    let mut ws = vec![w1];
    let mut alpha = Vec::new();
    let mut beta = Vec::new();
    let mut delta = Vec::new();
    let mut vt = a.spmv(&vs[0])?;
    let mut wt = a.spmv_t(&ws[0])?;
    let mut stop = None;
    let mut v_next = None;
    let mut w_next = None;
    let (mut v_rem, mut w_rem) = (DenseMatrix::zeros(n, p), DenseMatrix::zeros(n, p));

    for j in 0..m {
        let aj = ws[j].tr_mul(&vt);
        let scale_v = vt.norm_fro();
        let scale_w = wt.norm_fro();
        vt.axpy(-1.0, &(&vs[j] * &aj));
        wt.axpy(-1.0, &(&ws[j] * &aj.transpose()));
        alpha.push(aj);
        v_rem = vt.clone();
        w_rem = wt.clone();
        if j + 1 == m && m * p == n {
            // The space is exhausted; the remainders are rounding noise.
            break;
        }
        let next = match biorthonormalize(&vt, &wt, scale_v, scale_w, j + 1) {
            Ok(next) => next,
            Err(reason) => {
                stop = Some(reason);
                break;
            }
        };
        beta.push(next.b);
        delta.push(next.d);
        if j + 1 == m {
            v_next = Some(next.v);
            w_next = Some(next.w);
            break;
        }
        vt = a.spmv(&next.v)?;
        vt.axpy(-1.0, &(&vs[j] * delta.last().unwrap()));
        wt = a.spmv_t(&next.w)?;
        wt.axpy(-1.0, &(&ws[j] * &beta.last().unwrap().transpose()));
        vs.push(next.v);
        ws.push(next.w);
    }
    let steps = alpha.len();
    let v_refs: Vec<&DenseMatrix> = vs.iter().take(steps).collect();
    let w_refs: Vec<&DenseMatrix> = ws.iter().take(steps).collect();
    Ok(TridiagApprox {
        p,
        m: steps,
        v: DenseMatrix::hcat(&v_refs),
        w: DenseMatrix::hcat(&w_refs),
        alpha,
        beta,
        delta,
        beta0,
        v_next,
        w_next,
        v_remainder: v_rem,
        w_remainder: w_rem,
        stop,
    })
}

/// `exp(tA) B ~ V_m exp(t T_m) E_1 beta` from `m` block Lanczos steps.
pub fn expm_poly_action(a: &SparseMatrix, b: &DenseMatrix, c: &DenseMatrix, m: usize, t: f64) -> Result<DenseMatrix> {
    nbla(a, b, c, m)?.exp_action(t)
}
