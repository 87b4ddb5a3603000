//! Approximations of `exp(tA)B` and `f(A)B` from a rational block Lanczos
//! decomposition, the computable residual and the a-priori error bound.

use crate::dense::{expm_dense, funm_dense, log_norm_2, DenseLu, DenseMatrix, StieltjesFunction};
use crate::error::{Error, Result};
use crate::poles::{default_brackets, exp_brackets, AdaptivePoles, ZeroMode};
use crate::rational::{FixedPoles, PoleSource, RationalDecomposition, RationalLanczos};
use crate::sparse::{Pole, SparseMatrix};

/// Sample count for the maximum over `[0, t]` in [`error_bound`].
pub const DEFAULT_BOUND_SAMPLES: usize = 100;
/// Below this `|t mu|` the bound factor uses its Taylor series.
const FACTOR_SERIES_RADIUS: f64 = 1e-6;

/// `X_m(t) = V_m exp(t A_m) E_1 H_{1,0}`.
pub fn exp_action(d: &RationalDecomposition, t: f64) -> Result<DenseMatrix> {
    let e = expm_dense(&d.a_m.scale(t))?;
    Ok(&d.v_m() * &(&e * &d.e1_h10()))
}

/// `f_m = V_m f(A_m) E_1 H_{1,0}`.
pub fn stieltjes_action(d: &RationalDecomposition, f: &StieltjesFunction) -> Result<DenseMatrix> {
    let fm = funm_dense(&d.a_m, f)?;
    Ok(&d.v_m() * &(&fm * &d.e1_h10()))
}

#[derive(Clone, Debug)]
pub struct Residual {
    /// `A X_m(t) - X_m'(t)`, `n x p`.
    pub matrix: DenseMatrix,
    pub norm_2: f64,
    pub norm_inf: f64,
}

/// Closed-form residual of a fixed decomposition as a function of `t`.
///
/// `R_m(t) = Z H_{m+1,m} E_m^T K_m^{-1} exp(t A_m) E_1 H_{1,0}`.
pub struct ResidualEvaluator<'d> {
    d: &'d RationalDecomposition,
    k_lu: DenseLu,
    zh: DenseMatrix,
    e1h10: DenseMatrix,
}

impl<'d> ResidualEvaluator<'d> {
    pub fn new(d: &'d RationalDecomposition) -> Result<Self> {
        let k_lu = DenseLu::new(&d.k_m()).map_err(|_| Error::SingularK)?;
        let zh = &d.z * &d.h_last();
        Ok(Self { d, k_lu, zh, e1h10: d.e1_h10() })
    }

    pub fn at(&self, t: f64) -> Result<Residual> {
        let (mp, p) = (self.d.m * self.d.p, self.d.p);
        let y = &expm_dense(&self.d.a_m.scale(t))? * &self.e1h10;
        let coef = self.k_lu.solve(&y).rows_range(mp - p, p);
        let matrix = &self.zh * &coef;
        Ok(Residual { norm_2: matrix.norm_2(), norm_inf: matrix.norm_inf(), matrix })
    }
}

pub fn residual(d: &RationalDecomposition, t: f64) -> Result<Residual> {
    ResidualEvaluator::new(d)?.at(t)
}

/// `(e^{t mu} - 1) / mu`, equal to `t` in the limit `mu -> 0`.
pub fn bound_factor(mu: f64, t: f64) -> f64 {
    let x = t * mu;
    if x.abs() < FACTOR_SERIES_RADIUS {
        t * (1.0 + x / 2.0 + x * x / 6.0)
    } else {
        x.exp_m1() / mu
    }
}

/// `max_{s in [0,t]} ||R_m(s)||_2 (e^{t mu} - 1) / mu` with `mu` the
/// logarithmic 2-norm of `A`.
pub fn error_bound(a: &SparseMatrix, d: &RationalDecomposition, t: f64, samples: usize) -> Result<f64> {
    error_bound_with_log_norm(log_norm_2(a)?, d, t, samples)
}

/// [`error_bound`] with a precomputed logarithmic norm.
pub fn error_bound_with_log_norm(mu: f64, d: &RationalDecomposition, t: f64, samples: usize) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidConfig(format!("error bound needs t > 0, got {t}")));
    }
    let samples = samples.max(2);
    let eval = ResidualEvaluator::new(d)?;
    let mut worst: f64 = 0.0;
    for i in 0..samples {
        let s = t * i as f64 / (samples - 1) as f64;
        worst = worst.max(eval.at(s)?.norm_2);
    }
    Ok(worst * bound_factor(mu, t))
}

/// How poles are supplied to [`run_until`].
#[derive(Clone, Debug, PartialEq)]
pub enum PoleConfig {
    /// Every pole at infinity: the polynomial block Krylov space.
    Polynomial,
    /// A fixed list, repeated cyclically when shorter than `m_max`.
    Fixed(Vec<Pole>),
    /// Adaptive selection; `None` uses [`exp_brackets`] for the exponential
    /// and [`default_brackets`] otherwise.
    Adaptive { brackets: Option<(f64, f64)>, mode: ZeroMode },
}

impl PoleConfig {
    pub fn adaptive() -> Self {
        Self::Adaptive { brackets: None, mode: ZeroMode::default() }
    }

    /// The pole source for a run of at most `m_max` steps on `f(A)B`.
    pub fn source(&self, a: &SparseMatrix, f: &StieltjesFunction, m_max: usize) -> Result<Box<dyn PoleSource>> {
        Ok(match self {
            Self::Polynomial => Box::new(FixedPoles::new(vec![Pole::Infinity; m_max])),
            Self::Fixed(list) => {
                if list.is_empty() {
                    return Err(Error::InvalidConfig("fixed pole list is empty".into()));
                }
                Box::new(FixedPoles::new(list.iter().copied().cycle().take(m_max).collect()))
            }
            Self::Adaptive { brackets, mode } => {
                let b = brackets.unwrap_or_else(|| match *f {
                    StieltjesFunction::Exp { t } => exp_brackets(a, t),
                    _ => default_brackets(a),
                });
                Box::new(AdaptivePoles::new(b)?.with_mode(*mode))
            }
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum StopReason {
    Converged,
    /// `m_max` steps taken without meeting the tolerance.
    MaxIterations,
    /// The Krylov space became invariant.
    Exhausted,
    /// A breakdown ended the process; the result holds the last good step.
    Breakdown(String),
}

#[derive(Clone, Debug)]
pub struct ExpActionResult {
    pub x: DenseMatrix,
    /// `||R_m(t)||_2` for the exponential, `None` otherwise.
    pub residual_norm: Option<f64>,
    pub bound: Option<f64>,
    pub m_used: usize,
    pub poles: Vec<Pole>,
    /// Stopping quantity after every step: the residual norm relative to
    /// `||B||_F` for the exponential, `||f_m - f_{m-1}||_F / ||f_m||_F`
    /// otherwise (infinite at the first step). The exponential stops once
    /// two consecutive values are below the tolerance, counting
    /// `||AB||_2 / ||B||_F` as the value before the first step.
    pub residual_trace: Vec<f64>,
    pub stop: StopReason,
}

impl ExpActionResult {
    pub fn max_iterations(&self) -> bool {
        self.stop == StopReason::MaxIterations
    }
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub tol: f64,
    pub m_max: usize,
    pub poles: PoleConfig,
    /// Compute the error bound at the end (exponential only).
    pub bound_samples: Option<usize>,
}

impl RunOptions {
    pub fn new(tol: f64, m_max: usize, poles: PoleConfig) -> Self {
        Self { tol, m_max, poles, bound_samples: None }
    }
}

fn is_breakdown(e: &Error) -> bool {
    matches!(e, Error::SeriousBreakdown { .. } | Error::RankDeflation { .. })
}

/// Runs the rational process one pole at a time until the stopping test
/// holds or `m_max` steps are taken.
pub fn run_until(
    a: &SparseMatrix,
    b: &DenseMatrix,
    c: &DenseMatrix,
    f: &StieltjesFunction,
    opts: &RunOptions,
) -> Result<ExpActionResult> {
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidConfig(format!("tolerance must be positive, got {}", opts.tol)));
    }
    if opts.m_max == 0 {
        return Err(Error::InvalidConfig("m_max must be at least 1".into()));
    }
    let exp_t = match *f {
        StieltjesFunction::Exp { t } => Some(t),
        _ => None,
    };
    let b_norm = b.norm_fro();
    let mut prev_measure = a.spmv(b)?.norm_2() / b_norm;
    let mut source = opts.poles.source(a, f, opts.m_max)?;
    let mut lanczos = RationalLanczos::new(a, b, c)?;
    let mut trace = Vec::new();
    let mut previous: Option<DenseMatrix> = None;
    let mut last: Option<(RationalDecomposition, DenseMatrix, Option<f64>)> = None;
    let mut stop = StopReason::MaxIterations;

    for _ in 0..opts.m_max {
        let pole = source.next_pole(&lanczos);
        let stepped = pole.and_then(|q| lanczos.step(q));
        if let Err(e) = stepped {
            if is_breakdown(&e) && last.is_some() {
                stop = StopReason::Breakdown(e.to_string());
                break;
            }
            return Err(e);
        }
        let d = lanczos.decomposition()?;
        let (x, res, measure) = match exp_t {
            Some(t) => {
                let x = exp_action(&d, t)?;
                let r = residual(&d, t)?.norm_2;
                (x, Some(r), r / b_norm)
            }
            None => {
                let x = stieltjes_action(&d, f)?;
                let measure = match &previous {
                    Some(p) => (&x - p).norm_fro() / x.norm_fro().max(f64::MIN_POSITIVE),
                    None => f64::INFINITY,
                };
                previous = Some(x.clone());
                (x, None, measure)
            }
        };
        trace.push(measure);
        let exhausted = d.exhausted;
        last = Some((d, x, res));
        if exhausted {
            stop = StopReason::Exhausted;
            break;
        }
        let below = match exp_t {
            Some(_) => measure <= opts.tol && prev_measure <= opts.tol,
            None => measure <= opts.tol,
        };
        prev_measure = measure;
        if below {
            stop = StopReason::Converged;
            break;
        }
    }

    let (d, x, residual_norm) = last.expect("at least one step completed");
    let bound = match (exp_t, opts.bound_samples) {
        (Some(t), Some(samples)) if t > 0.0 => Some(error_bound(a, &d, t, samples)?),
        _ => None,
    };
    Ok(ExpActionResult {
        x,
        residual_norm,
        bound,
        m_used: d.m,
        poles: lanczos.poles(),
        residual_trace: trace,
        stop,
    })
}

/// Adaptive rational block Lanczos on `exp(tA)B`: one pole selection per
/// step, stopping at `m_max` or once `||R_m(t)||_2 <= tol` at two
/// consecutive steps (`||AB||_2` stands in before the first). Returns the
/// final decomposition and the residual norm after every step.
pub fn adaptive_rbla(
    a: &SparseMatrix,
    b: &DenseMatrix,
    c: &DenseMatrix,
    brackets: (f64, f64),
    m_max: usize,
    tol: f64,
    t: f64,
) -> Result<(RationalDecomposition, Vec<f64>)> {
    let mut source = AdaptivePoles::new(brackets)?;
    let mut lanczos = RationalLanczos::new(a, b, c)?;
    let mut history = Vec::new();
    let mut last = None;
    let mut prev = a.spmv(b)?.norm_2();
    for _ in 0..m_max {
        let pole = source.next_pole(&lanczos)?;
        lanczos.step(pole)?;
        let d = lanczos.decomposition()?;
        let r = residual(&d, t)?.norm_2;
        history.push(r);
        let done = (r <= tol && prev <= tol) || d.exhausted;
        prev = r;
        last = Some(d);
        if done {
            break;
        }
    }
    last.map(|d| (d, history)).ok_or_else(|| Error::InvalidConfig("m_max must be at least 1".into()))
}
