//! Adaptive pole selection by maximizing `1/|r_m|` over candidate intervals.

use num_complex::Complex64;

use crate::dense::eigenvalues;
use crate::error::{Error, Result};
use crate::rational::{PoleSource, RationalLanczos};
use crate::sparse::{Pole, SparseMatrix};

/// Uniform grid points per candidate interval, endpoints included.
pub const GRID_POINTS: usize = 200;
/// Points closer than this to zero or to a used pole are skipped.
pub const MIN_SPACING: f64 = 1e-12;
/// Imaginary parts of Ritz values below this (relative) are dropped.
const IMAG_TOL: f64 = 1e-8;

/// How complex Ritz values enter the nodal function on the real line.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ZeroMode {
    /// `|z - lambda|` with the complex value; a conjugate pair contributes
    /// `|z - lambda|^2`, so `r` stays real on the real line.
    #[default]
    ConjugatePair,
    /// `|z - Re(lambda)|`.
    RealPart,
}

/// `r(z) = prod (z - lambda_i) / prod (z - sigma_j)^mult`.
#[derive(Clone, Debug)]
pub struct NodalRational {
    pub zeros: Vec<Complex64>,
    pub poles: Vec<Pole>,
    /// Each pole is repeated this many times (the block size).
    pub multiplicity: usize,
    pub mode: ZeroMode,
}

impl NodalRational {
    pub fn new(zeros: Vec<Complex64>, poles: Vec<Pole>, multiplicity: usize, mode: ZeroMode) -> Self {
        Self { zeros, poles, multiplicity, mode }
    }

    fn zero_distance(&self, lambda: Complex64, z: f64) -> f64 {
        let im = if lambda.im.abs() <= IMAG_TOL * lambda.norm() { 0.0 } else { lambda.im };
        match self.mode {
            ZeroMode::ConjugatePair => Complex64::new(z - lambda.re, -im).norm(),
            ZeroMode::RealPart => (z - lambda.re).abs(),
        }
    }

    /// `log |r(z)|`; `-inf` at a zero, `+inf` at a pole.
    pub fn log_abs(&self, z: f64) -> f64 {
        let num: f64 = self.zeros.iter().map(|&l| self.zero_distance(l, z).ln()).sum();
        let den: f64 = self.poles.iter().filter_map(|q| q.value()).map(|s| (z - s).abs().ln()).sum();
        num - self.multiplicity as f64 * den
    }
}

/// `|r(z)|`, evaluated through logarithms.
pub fn eval_nodal(r: &NodalRational, z: f64) -> Result<f64> {
    if r.poles.iter().filter_map(|q| q.value()).any(|s| (z - s).abs() < 1e-300) {
        return Err(Error::PoleHit { z });
    }
    Ok(r.log_abs(z).exp())
}

/// Inputs to one pole selection.
#[derive(Clone, Debug)]
pub struct PoleState {
    pub ritz: Vec<Complex64>,
    pub used: Vec<Pole>,
    /// `sigma_0^(1) < sigma_0^(2)`.
    pub brackets: (f64, f64),
    pub multiplicity: usize,
    pub mode: ZeroMode,
}

impl PoleState {
    pub fn new(ritz: Vec<Complex64>, used: Vec<Pole>, brackets: (f64, f64), multiplicity: usize) -> Result<Self> {
        if !(brackets.0 < brackets.1) {
            return Err(Error::InvalidConfig(format!(
                "brackets must satisfy lo < hi, got ({}, {})",
                brackets.0, brackets.1
            )));
        }
        Ok(Self { ritz, used, brackets, multiplicity, mode: ZeroMode::default() })
    }

    /// The sorted endpoint set: both brackets and every used finite pole
    /// inside them.
    pub fn eta(&self) -> Vec<f64> {
        let (lo, hi) = self.brackets;
        let mut eta = vec![lo, hi];
        eta.extend(self.used.iter().filter_map(|q| q.value()).filter(|&s| s > lo && s < hi));
        eta.sort_by(f64::total_cmp);
        eta.dedup();
        eta
    }

    pub fn nodal(&self) -> NodalRational {
        NodalRational::new(self.ritz.clone(), self.used.clone(), self.multiplicity, self.mode)
    }
}

/// Candidate points in `[a, b]`: a uniform grid, plus a geometric grid when
/// the interval spans several decades on one side of zero.
fn candidates(a: f64, b: f64) -> Vec<f64> {
    let g = GRID_POINTS;
    let mut pts: Vec<f64> = (0..g).map(|i| a + (b - a) * i as f64 / (g - 1) as f64).collect();
    if a * b > 0.0 && (b / a).abs().max((a / b).abs()) > 100.0 {
        let ratio = b / a;
        pts.extend((1..g - 1).map(|i| a * ratio.powf(i as f64 / (g - 1) as f64)));
    }
    for z in pts.iter_mut() {
        *z = z.clamp(a, b);
    }
    pts.sort_by(f64::total_cmp);
    pts
}

/// Next pole: the grid maximizer of `1/|r_m|` over all intervals of the
/// endpoint set, leftmost on ties.
pub fn next_pole(s: &PoleState) -> Result<f64> {
    let eta = s.eta();
    let r = s.nodal();
    let used: Vec<f64> = s.used.iter().filter_map(|q| q.value()).collect();
    let mut best: Option<(f64, f64)> = None;
    let mut any_interval = false;
    for pair in eta.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if !(b > a) {
            continue;
        }
        any_interval = true;
        for z in candidates(a, b) {
            if z.abs() < MIN_SPACING || used.iter().any(|&u| (z - u).abs() <= MIN_SPACING * u.abs().max(1.0)) {
                continue;
            }
            let score = -r.log_abs(z);
            if score.is_nan() {
                continue;
            }
            if best.map_or(true, |(_, b)| score > b) {
                best = Some((z, score));
            }
        }
    }
    if !any_interval {
        return Err(Error::DegenerateBracket);
    }
    best.map(|(z, _)| z).ok_or(Error::DegenerateBracket)
}

fn gershgorin(a: &SparseMatrix) -> Option<(f64, f64)> {
    let mut gl = f64::INFINITY;
    let mut gu = f64::NEG_INFINITY;
    for i in 0..a.n() {
        let mut center = 0.0;
        let mut radius = 0.0;
        for k in a.row_ptr()[i]..a.row_ptr()[i + 1] {
            if a.col_idx()[k] == i {
                center = a.values()[k];
            } else {
                radius += a.values()[k].abs();
            }
        }
        gl = gl.min(center - radius);
        gu = gu.max(center + radius);
    }
    gl.is_finite().then_some((gl, gu))
}

/// Search interval for `exp(tA)B`: `[2/t, max(g, 10/t)]` on the side of
/// zero facing away from most of the spectrum, kept clear of the
/// Gershgorin interval `[gl, gu]`, where `g = max(|gl|, |gu|)`. Falls back
/// to [`default_brackets`] for `t <= 0`.
pub fn exp_brackets(a: &SparseMatrix, t: f64) -> (f64, f64) {
    let Some((gl, gu)) = gershgorin(a).filter(|_| t > 0.0 && t.is_finite()) else {
        return default_brackets(a);
    };
    let g = gl.abs().max(gu.abs());
    let clear = |edge: f64| edge.max(0.0) * (1.0 + 1e-8) + 1e-8 * g;
    if gl.abs() >= gu.abs() {
        let lo = (2.0 / t).max(clear(gu));
        (lo, g.max(5.0 * lo))
    } else {
        let hi = (2.0 / t).max(clear(-gl));
        (-g.max(5.0 * hi), -hi)
    }
}

/// Default search interval: the mirror image of the real Gershgorin
/// interval `[gl, gu]`, on the side where most of the spectrum lies and
/// kept clear of it, with the end nearest zero at `1e-8` times the far end.
pub fn default_brackets(a: &SparseMatrix) -> (f64, f64) {
    let Some((gl, gu)) = gershgorin(a) else {
        return (1e-8, 1.0);
    };
    let g = gl.abs().max(gu.abs()).max(f64::MIN_POSITIVE);
    let eps = 1e-8 * g;
    if gl.abs() >= gu.abs() {
        (gu.max(0.0) + eps, g)
    } else {
        (-g, gl.min(0.0) - eps)
    }
}

/// [`PoleSource`] running the selection above on the current Ritz values.
#[derive(Clone, Debug)]
pub struct AdaptivePoles {
    pub brackets: (f64, f64),
    pub mode: ZeroMode,
}

impl AdaptivePoles {
    pub fn new(brackets: (f64, f64)) -> Result<Self> {
        if !(brackets.0 < brackets.1) || brackets.0 == 0.0 || brackets.1 == 0.0 {
            return Err(Error::InvalidConfig(format!(
                "brackets must be nonzero with lo < hi, got ({}, {})",
                brackets.0, brackets.1
            )));
        }
        Ok(Self { brackets, mode: ZeroMode::default() })
    }

    pub fn with_mode(mut self, mode: ZeroMode) -> Self {
        self.mode = mode;
        self
    }
}

impl PoleSource for AdaptivePoles {
    fn next_pole(&mut self, state: &RationalLanczos<'_>) -> Result<Pole> {
        let ritz = if state.steps() == 0 { Vec::new() } else { eigenvalues(&state.projected())? };
        let mut s = PoleState::new(ritz, state.poles(), self.brackets, state.block_size())?;
        s.mode = self.mode;
        Pole::finite(next_pole(&s)?)
    }
}
