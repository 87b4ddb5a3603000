//! Rational block Lanczos process and the coefficient matrices of its
//! decomposition `A V_{m+1} K~_m = V_{m+1} H~_m`.

use std::borrow::Cow;
use std::collections::HashMap;

use crate::block_lanczos::{biorthonormalize, DEFLATION_TOL};
use crate::dense::{eigenvalues, DenseLu, DenseMatrix};
use crate::error::{Error, Result};
use crate::sparse::{Pole, ShiftedFactorization, SparseMatrix};
use num_complex::Complex64;

/// Poles `sigma_1 .. sigma_m`, each repeated over a block of size `p`.
#[derive(Clone, Debug, PartialEq)]
pub struct PoleSequence {
    poles: Vec<Pole>,
    p: usize,
}

impl PoleSequence {
    pub fn new(poles: Vec<Pole>, p: usize) -> Result<Self> {
        if poles.iter().any(|q| q.value() == Some(0.0)) {
            return Err(Error::ZeroShift);
        }
        Ok(Self { poles, p })
    }

    pub fn poles(&self) -> &[Pole] {
        &self.poles
    }

    pub fn len(&self) -> usize {
        self.poles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poles.is_empty()
    }

    pub fn last(&self) -> Option<Pole> {
        self.poles.last().copied()
    }

    /// `D_m = diag(sigma_1^{-1} I_p, ..., sigma_m^{-1} I_p)`, with `1/inf = 0`.
    pub fn d_matrix(&self) -> DenseMatrix {
        let diag: Vec<f64> = self.poles.iter().flat_map(|q| std::iter::repeat(q.reciprocal()).take(self.p)).collect();
        DenseMatrix::from_diagonal(&diag)
    }
}

/// Snapshot of the rational block Lanczos process after `m` steps.
#[derive(Clone, Debug)]
pub struct RationalDecomposition {
    pub p: usize,
    pub m: usize,
    /// The process ran on `A - shift I` with poles `sigma_k - shift`.
    pub shift: f64,
    /// `V_{m+1}`, `n x (m+1)p`.
    pub v: DenseMatrix,
    /// `W_{m+1}`, `n x (m+1)p`.
    pub w: DenseMatrix,
    /// `(m+1)p x mp` block upper Hessenberg.
    pub h_tilde: DenseMatrix,
    pub g_tilde: DenseMatrix,
    pub k_tilde: DenseMatrix,
    pub l_tilde: DenseMatrix,
    /// `B = V_1 H_{1,0}`.
    pub h10: DenseMatrix,
    /// `C = W_1 G_{1,0}`.
    pub g10: DenseMatrix,
    /// Poles of the operator the process ran on.
    pub poles: PoleSequence,
    /// `W_m^T A V_m`, accumulated from explicit products with `A`.
    pub a_m: DenseMatrix,
    /// `A V_m - V_m A_m = Z H_{m+1,m} E_m^T K_m^{-1}`; for an infinite last
    /// pole `Z = V_{m+1}`.
    pub z: DenseMatrix,
    /// The space is invariant (possibly the whole space); `V_{m+1}` is zero.
    pub exhausted: bool,
}

impl RationalDecomposition {
    fn mp(&self) -> usize {
        self.m * self.p
    }

    /// `V_m`
    pub fn v_m(&self) -> DenseMatrix {
        self.v.columns(0, self.mp())
    }

    /// `W_m`
    pub fn w_m(&self) -> DenseMatrix {
        self.w.columns(0, self.mp())
    }

    pub fn v_next(&self) -> DenseMatrix {
        self.v.columns(self.mp(), self.p)
    }

    pub fn h_m(&self) -> DenseMatrix {
        self.h_tilde.rows_range(0, self.mp())
    }

    pub fn g_m(&self) -> DenseMatrix {
        self.g_tilde.rows_range(0, self.mp())
    }

    pub fn k_m(&self) -> DenseMatrix {
        self.k_tilde.rows_range(0, self.mp())
    }

    pub fn l_m(&self) -> DenseMatrix {
        self.l_tilde.rows_range(0, self.mp())
    }

    /// `H_{m+1,m}`
    pub fn h_last(&self) -> DenseMatrix {
        self.h_tilde.block(self.mp(), self.mp() - self.p, self.p, self.p)
    }

    /// `G_{m+1,m}`
    pub fn g_last(&self) -> DenseMatrix {
        self.g_tilde.block(self.mp(), self.mp() - self.p, self.p, self.p)
    }

    pub fn d_m(&self) -> DenseMatrix {
        self.poles.d_matrix()
    }

    /// `E_1 H_{1,0}`, an `mp x p` block.
    pub fn e1_h10(&self) -> DenseMatrix {
        let mut e = DenseMatrix::zeros(self.mp(), self.p);
        e.set_block(0, 0, &self.h10);
        e
    }

    /// Ritz values, the eigenvalues of `A_m`.
    pub fn ritz_values(&self) -> Result<Vec<Complex64>> {
        eigenvalues(&self.a_m)
    }

    /// `H_m K_m^{-1}`, the projected matrix of the operator the process
    /// ran on, shifted back by `shift`.
    pub fn projected_from_h(&self) -> Result<DenseMatrix> {
        let lu = DenseLu::new(&self.k_m().transpose()).map_err(|_| Error::SingularK)?;
        let hk = lu.solve(&self.h_m().transpose()).transpose();
        Ok(&hk + &DenseMatrix::identity(self.mp()).scale(self.shift))
    }
}

/// The directly accumulated `A_m`. When the last pole is infinite the
/// `H_m K_m^{-1}` form is also evaluated and its relative distance to
/// `A_m` is returned alongside.
pub fn projected_matrix(d: &RationalDecomposition) -> Result<(DenseMatrix, Option<f64>)> {
    let check = match d.poles.last() {
        Some(Pole::Infinity) => {
            let hk = d.projected_from_h()?;
            Some((&hk - &d.a_m).norm_fro() / d.a_m.norm_fro().max(f64::MIN_POSITIVE))
        }
        _ => None,
    };
    Ok((d.a_m.clone(), check))
}

/// Rational block Lanczos state that can be advanced one pole at a time.
pub struct RationalLanczos<'a> {
    op: Cow<'a, SparseMatrix>,
    shift: f64,
    op_norm: f64,
    p: usize,
    vs: Vec<DenseMatrix>,
    ws: Vec<DenseMatrix>,
    /// `op V_j` for every block whose product has been formed.
    av: Vec<DenseMatrix>,
    /// `W^T op V` over the available blocks.
    wav: DenseMatrix,
    h_cols: Vec<DenseMatrix>,
    g_cols: Vec<DenseMatrix>,
    k_cols: Vec<DenseMatrix>,
    l_cols: Vec<DenseMatrix>,
    h10: DenseMatrix,
    g10: DenseMatrix,
    poles: Vec<Pole>,
    factors: HashMap<u64, ShiftedFactorization>,
    exhausted: bool,
}

impl<'a> RationalLanczos<'a> {
    /// Starts the process: `B = V_1 H_{1,0}`, `C = W_1 G_{1,0}` with
    /// `W_1^T V_1 = I`.
    pub fn new(a: &'a SparseMatrix, b: &DenseMatrix, c: &DenseMatrix) -> Result<Self> {
        Self::build(Cow::Borrowed(a), 0.0, b, c)
    }

    /// Runs on `A - shift I`; poles passed to [`step`](Self::step) are
    /// still given for `A` and are moved by `-shift` internally.
    pub fn with_shift(a: &SparseMatrix, shift: f64, b: &DenseMatrix, c: &DenseMatrix) -> Result<Self> {
        let op = if shift == 0.0 { a.clone() } else { a.add_identity(-shift) };
        Self::build(Cow::Owned(op), shift, b, c)
    }

    fn build(op: Cow<'a, SparseMatrix>, shift: f64, b: &DenseMatrix, c: &DenseMatrix) -> Result<Self> {
        let n = op.n();
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
        if p == 0 || p > n {
            return Err(Error::DimensionMismatch(format!("block size {p} for dimension {n}")));
        }
        let start = biorthonormalize(b, c, b.norm_fro(), c.norm_fro(), 0).map_err(|e| e.to_error())?;
        let op_norm = op.norm_inf();
        Ok(Self {
            op,
            shift,
            op_norm,
            p,
            vs: vec![start.v],
            ws: vec![start.w],
            av: Vec::new(),
            wav: DenseMatrix::zeros(p, 0),
            h_cols: Vec::new(),
            g_cols: Vec::new(),
            k_cols: Vec::new(),
            l_cols: Vec::new(),
            h10: start.b,
            g10: start.d.transpose(),
            poles: Vec::new(),
            factors: HashMap::new(),
            exhausted: false,
        })
    }

    pub fn block_size(&self) -> usize {
        self.p
    }

    pub fn dim(&self) -> usize {
        self.op.n()
    }

    /// Completed steps.
    pub fn steps(&self) -> usize {
        self.poles.len()
    }

    pub fn is_exhausted(&self) -> bool {
        self.exhausted
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    /// Poles for `A` (not the shifted operator), in order of use.
    pub fn poles(&self) -> Vec<Pole> {
        self.poles.iter().map(|q| q.shifted_by(-self.shift).unwrap_or(Pole::Infinity)).collect()
    }

    /// The number of factorizations held in the cache.
    pub fn cached_factorizations(&self) -> usize {
        self.factors.len()
    }

    /// `W_m^T A V_m` after `m` steps (empty before the first step).
    pub fn projected(&self) -> DenseMatrix {
        let mp = self.steps() * self.p;
        let mut a = self.wav.block(0, 0, mp, mp);
        for i in 0..mp {
            a[(i, i)] += self.shift;
        }
        a
    }

    fn basis(blocks: &[DenseMatrix]) -> DenseMatrix {
        let refs: Vec<&DenseMatrix> = blocks.iter().collect();
        DenseMatrix::hcat(&refs)
    }

    /// Forms `op V_j` and the matching column of `W^T op V` once.
    fn ensure_av(&mut self, j: usize) -> Result<()> {
        while self.av.len() <= j {
            let k = self.av.len();
            let av = self.op.spmv(&self.vs[k])?;
            let col = Self::basis(&self.ws).tr_mul(&av);
            self.wav = DenseMatrix::hcat(&[&self.wav, &col]);
            self.av.push(av);
        }
        Ok(())
    }

    fn factor(&mut self, pole: Pole) -> Result<&ShiftedFactorization> {
        let key = pole.value().map(f64::to_bits).unwrap_or(u64::MAX);
        if !self.factors.contains_key(&key) {
            let f = ShiftedFactorization::new(&self.op, pole)?;
            self.factors.insert(key, f);
        }
        Ok(&self.factors[&key])
    }

    /// One step of the process with pole `sigma` (given for `A`).
    ///
    /// On error the state is left at the previous step.
    pub fn step(&mut self, pole: Pole) -> Result<()> {
        if self.exhausted {
            return Err(Error::InvalidConfig("the Krylov space is already invariant".into()));
        }
        let pole = match pole {
            Pole::Finite(x) => Pole::finite(x - self.shift)?,
            Pole::Infinity => Pole::Infinity,
        };
        let j = self.steps();
        let p = self.p;
        let n = self.dim();
        self.ensure_av(j)?;
        let v_j = self.vs[j].clone();
        let w_j = self.ws[j].clone();

        // S and R are either (I - A/sigma)^{-1} A V_j itself or, for small
        // |sigma|, sigma (I - A/sigma)^{-1} V_j, which differs from it by
        // sigma V_j. The latter avoids cancelling two O(sigma) terms.
        let (mut s, mut r, diag_offset) = match pole {
            Pole::Infinity => (self.av[j].clone(), self.op.spmv_t(&w_j)?, 0.0),
            Pole::Finite(sigma) if sigma.abs() < self.op_norm => {
                let f = self.factor(pole)?;
                let s = f.solve(&v_j, false)?.scale(sigma);
                let r = f.solve(&w_j, true)?.scale(sigma);
                (s, r, sigma)
            }
            Pole::Finite(_) => {
                let atw = self.op.spmv_t(&w_j)?;
                let av = self.av[j].clone();
                let f = self.factor(pole)?;
                (f.solve(&av, false)?, f.solve(&atw, true)?, 0.0)
            }
        };
        let vb = Self::basis(&self.vs);
        let wb = Self::basis(&self.ws);
        let (scale_s, scale_r) = (s.norm_fro(), r.norm_fro());
        let mut coef_s = project_out(&mut s, &vb, &wb);
        let mut coef_r = project_out(&mut r, &wb, &vb);

        let mp1 = (j + 1) * p;
        // K~ column: E_j + h/sigma, formed without cancellation.
        let (mut k_col, mut l_col) = match pole {
            Pole::Infinity => {
                let mut e = DenseMatrix::zeros(mp1, p);
                e.set_block(j * p, 0, &DenseMatrix::identity(p));
                (e.clone(), e)
            }
            Pole::Finite(sigma) if diag_offset != 0.0 => (coef_s.scale(1.0 / sigma), coef_r.scale(1.0 / sigma)),
            Pole::Finite(sigma) => {
                let mut ek = DenseMatrix::zeros(mp1, p);
                ek.set_block(j * p, 0, &DenseMatrix::identity(p));
                let mut kc = ek.clone();
                kc.axpy(1.0 / sigma, &coef_s);
                let mut lc = ek;
                lc.axpy(1.0 / sigma, &coef_r);
                (kc, lc)
            }
        };
        if diag_offset != 0.0 {
            for i in 0..p {
                coef_s[(j * p + i, i)] -= diag_offset;
                coef_r[(j * p + i, i)] -= diag_offset;
            }
        }

        let invariant = s.norm_fro() <= DEFLATION_TOL * scale_s && r.norm_fro() <= DEFLATION_TOL * scale_r;
        let (v_new, w_new, h_last, g_last) = if mp1 == n || invariant {
            self.exhausted = true;
            (DenseMatrix::zeros(n, p), DenseMatrix::zeros(n, p), DenseMatrix::zeros(p, p), DenseMatrix::zeros(p, p))
        } else {
            let next = biorthonormalize(&s, &r, scale_s, scale_r, j + 1).map_err(|e| e.to_error())?;
            let g = next.d.transpose();
            (next.v, next.w, next.b, g)
        };
        let inv = pole.reciprocal();
        let h_col = DenseMatrix::vcat(&[&coef_s, &h_last]);
        let g_col = DenseMatrix::vcat(&[&coef_r, &g_last]);
        k_col = DenseMatrix::vcat(&[&k_col, &h_last.scale(inv)]);
        l_col = DenseMatrix::vcat(&[&l_col, &g_last.scale(inv)]);

        // New row of W^T op V for W_{j+1}.
        let av_basis = Self::basis(&self.av);
        let row = w_new.tr_mul(&av_basis);
        self.wav = DenseMatrix::vcat(&[&self.wav, &row]);

        self.vs.push(v_new);
        self.ws.push(w_new);
        self.h_cols.push(h_col);
        self.g_cols.push(g_col);
        self.k_cols.push(k_col);
        self.l_cols.push(l_col);
        self.poles.push(pole);
        Ok(())
    }

    fn tilde(cols: &[DenseMatrix], rows: usize) -> DenseMatrix {
        let p = cols.first().map_or(0, |c| c.cols());
        let mut out = DenseMatrix::zeros(rows, cols.len() * p);
        for (k, c) in cols.iter().enumerate() {
            out.set_block(0, k * p, c);
        }
        out
    }

    /// Snapshot of the current state. Needs `m >= 1`.
    pub fn decomposition(&mut self) -> Result<RationalDecomposition> {
        let m = self.steps();
        if m == 0 {
            return Err(Error::InvalidConfig("no Lanczos step has been taken".into()));
        }
        let p = self.p;
        let mp = m * p;
        let rows = mp + p;
        let v = Self::basis(&self.vs);
        let w = Self::basis(&self.ws);
        let v_next = self.vs[m].clone();
        let z = match self.poles[m - 1] {
            Pole::Finite(sigma) if !self.exhausted => {
                // Z = V_{m+1} - (I - V_m W_m^T) op V_{m+1} / sigma_m
                self.ensure_av(m)?;
                let mut proj = self.av[m].clone();
                let coef = self.wav.block(0, mp, mp, p);
                proj.axpy(-1.0, &(&v.columns(0, mp) * &coef));
                let mut z = v_next;
                z.axpy(-1.0 / sigma, &proj);
                z
            }
            _ => v_next,
        };
        let mut a_m = self.wav.block(0, 0, mp, mp);
        for i in 0..mp {
            a_m[(i, i)] += self.shift;
        }
        Ok(RationalDecomposition {
            p,
            m,
            shift: self.shift,
            v,
            w,
            h_tilde: Self::tilde(&self.h_cols, rows),
            g_tilde: Self::tilde(&self.g_cols, rows),
            k_tilde: Self::tilde(&self.k_cols, rows),
            l_tilde: Self::tilde(&self.l_cols, rows),
            h10: self.h10.clone(),
            g10: self.g10.clone(),
            poles: PoleSequence::new(self.poles.clone(), p)?,
            a_m,
            z,
            exhausted: self.exhausted,
        })
    }
}

/// Block Gram-Schmidt of `s` against `basis` with the dual `dual`
/// (`dual^T basis = I`), run twice. Returns the accumulated coefficients.
fn project_out(s: &mut DenseMatrix, basis: &DenseMatrix, dual: &DenseMatrix) -> DenseMatrix {
    let mut coef = dual.tr_mul(s);
    s.axpy(-1.0, &(basis * &coef));
    let again = dual.tr_mul(s);
    s.axpy(-1.0, &(basis * &again));
    coef = &coef + &again;
    coef
}

/// Supplies the pole for each step.
pub trait PoleSource {
    fn next_pole(&mut self, state: &RationalLanczos<'_>) -> Result<Pole>;
}

/// A fixed pole list, consumed in order.
#[derive(Clone, Debug)]
pub struct FixedPoles {
    poles: Vec<Pole>,
    next: usize,
}

impl FixedPoles {
    pub fn new(poles: Vec<Pole>) -> Self {
        Self { poles, next: 0 }
    }
}

impl PoleSource for FixedPoles {
    fn next_pole(&mut self, _state: &RationalLanczos<'_>) -> Result<Pole> {
        let pole = *self
            .poles
            .get(self.next)
            .ok_or_else(|| Error::InvalidConfig(format!("pole list has only {} entries", self.poles.len())))?;
        self.next += 1;
        Ok(pole)
    }
}

/// `m` steps of the rational block Lanczos process.
pub fn rbla(
    a: &SparseMatrix,
    b: &DenseMatrix,
    c: &DenseMatrix,
    poles: &mut dyn PoleSource,
    m: usize,
) -> Result<RationalDecomposition> {
    if m == 0 || m * b.cols() > a.n() {
        return Err(Error::DimensionMismatch(format!(
            "need 0 < m*p <= n, got m={m}, p={}, n={}",
            b.cols(),
            a.n()
        )));
    }
    let mut state = RationalLanczos::new(a, b, c)?;
    for _ in 0..m {
        let pole = poles.next_pole(&state)?;
        state.step(pole)?;
    }
    state.decomposition()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::block_lanczos::nbla;
    use crate::dense::{eig_symmetric, lu_solve, qr_factor};
    use crate::rng::CounterRng;

    fn tridiag(n: usize, lo: f64, d: f64, up: f64) -> SparseMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, d));
            if i + 1 < n {
                t.push((i, i + 1, up));
                t.push((i + 1, i, lo));
            }
        }
        SparseMatrix::from_triplets(n, &t).unwrap()
    }

    fn random_block(rng: &mut CounterRng, n: usize, p: usize) -> DenseMatrix {
        DenseMatrix::from_fn(n, p, |_, _| rng.uniform(0.0, 1.0))
    }

    fn fin(x: f64) -> Pole {
        Pole::Finite(x)
    }

    /// `sin` of the largest principal angle between two ranges.
    fn subspace_gap(x: &DenseMatrix, y: &DenseMatrix) -> f64 {
        let (qx, _) = qr_factor(x);
        let (qy, _) = qr_factor(y);
        let mut r = qy.clone();
        r.axpy(-1.0, &(&qx * &qx.tr_mul(&qy)));
        r.norm_2()
    }

    fn relation_residues(a: &SparseMatrix, d: &RationalDecomposition) -> (f64, f64, f64) {
        let scale = a.norm_fro();
        let vm = d.v_m();
        let wm = d.w_m();
        let lhs = &a.spmv(&vm).unwrap() * &d.k_m();
        let r35 = (&lhs - &(&d.v * &d.h_tilde)).norm_fro() / (scale * d.v.norm_fro());
        let lhs = &a.spmv_t(&wm).unwrap() * &d.l_m();
        let r37 = (&lhs - &(&d.w * &d.g_tilde)).norm_fro() / (scale * d.w.norm_fro());
        let r388 = (&d.projected_from_h().unwrap() - &d.a_m).norm_fro() / d.a_m.norm_fro();
        (r35, r37, r388)
    }

    #[test]
    fn theorem_relations_small_example() {
        let a = tridiag(12, 1.0, 2.0, 1.0);
        let mut rng = CounterRng::new(1);
        let b = random_block(&mut rng, 12, 1);
        let c = random_block(&mut rng, 12, 1);
        let d = rbla(&a, &b, &c, &mut FixedPoles::new(vec![fin(-1.0), fin(-2.0), Pole::Infinity]), 3).unwrap();
        let (r35, r37, r388) = relation_residues(&a, &d);
        assert!(r35 < 1e-10 && r37 < 1e-10 && r388 < 1e-10, "{r35:e} {r37:e} {r388:e}");
        let wtv = d.w.tr_mul(&d.v);
        assert!((&wtv - &DenseMatrix::identity(4)).norm_fro() < 1e-10);
        let direct = d.w_m().tr_mul(&a.spmv(&d.v_m()).unwrap());
        assert!((&direct - &d.a_m).norm_fro() < 1e-12 * d.a_m.norm_fro());
    }

    #[test]
    fn k_and_l_match_their_definition() {
        let a = tridiag(40, 0.5, -2.0, 1.5);
        let mut rng = CounterRng::new(2);
        let b = random_block(&mut rng, 40, 2);
        let c = random_block(&mut rng, 40, 2);
        let poles = vec![fin(1e-6), fin(0.3), fin(50.0), fin(2.0), Pole::Infinity];
        let d = rbla(&a, &b, &c, &mut FixedPoles::new(poles), 5).unwrap();
        let dm = d.d_m();
        let k = &DenseMatrix::identity(10) + &(&d.h_m() * &dm);
        let l = &DenseMatrix::identity(10) + &(&d.g_m() * &dm);
        assert!((&k - &d.k_m()).norm_fro() < 1e-8 * k.norm_fro());
        assert!((&l - &d.l_m()).norm_fro() < 1e-8 * l.norm_fro());
        let (r35, r37, r388) = relation_residues(&a, &d);
        assert!(r35 < 1e-8 && r37 < 1e-8 && r388 < 1e-6, "{r35:e} {r37:e} {r388:e}");
    }

    #[test]
    fn biorthogonal_at_every_step() {
        let a = tridiag(50, 0.2, -3.0, 1.1);
        let mut rng = CounterRng::new(3);
        let b = random_block(&mut rng, 50, 3);
        let c = random_block(&mut rng, 50, 3);
        let mut st = RationalLanczos::new(&a, &b, &c).unwrap();
        for (k, pole) in [fin(0.5), fin(4.0), fin(1e-3), fin(0.5), fin(9.0), Pole::Infinity].into_iter().enumerate() {
            st.step(pole).unwrap();
            let d = st.decomposition().unwrap();
            let e = (&d.w.tr_mul(&d.v) - &DenseMatrix::identity((k + 2) * 3)).norm_fro();
            assert!(e < 1e-8, "step {}: {e:e}", k + 1);
        }
        // the repeated pole reused its factorization
        assert_eq!(st.cached_factorizations(), 4);
    }

    #[test]
    fn infinite_poles_give_the_polynomial_space() {
        let a = tridiag(30, 0.7, -2.0, 1.3);
        let mut rng = CounterRng::new(4);
        let b = random_block(&mut rng, 30, 2);
        let c = random_block(&mut rng, 30, 2);
        let d = rbla(&a, &b, &c, &mut FixedPoles::new(vec![Pole::Infinity; 6]), 6).unwrap();
        let poly = nbla(&a, &b, &c, 6).unwrap();
        assert!(subspace_gap(&d.v_m(), &poly.v) < 1e-8);
        assert!(subspace_gap(&d.w_m(), &poly.w) < 1e-8);
    }

    #[test]
    fn full_space_is_similar() {
        let a = tridiag(12, 1.0, 2.0, 1.0);
        let mut rng = CounterRng::new(5);
        let b = random_block(&mut rng, 12, 3);
        let d = rbla(&a, &b, &b, &mut FixedPoles::new(vec![fin(-1.0), fin(-3.0), fin(-0.5), Pole::Infinity]), 4).unwrap();
        assert!(d.exhausted);
        let mut got: Vec<f64> = d.ritz_values().unwrap().iter().map(|z| z.re).collect();
        got.sort_by(f64::total_cmp);
        let want = eig_symmetric(&a.to_dense()).values;
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-7, "{g} vs {w}");
        }
    }

    #[test]
    fn one_step_rayleigh_quotient() {
        let a = tridiag(8, 1.0, 2.0, 1.0);
        let mut rng = CounterRng::new(6);
        let b = random_block(&mut rng, 8, 1);
        let c = random_block(&mut rng, 8, 1);
        let d = rbla(&a, &b, &c, &mut FixedPoles::new(vec![Pole::Infinity]), 1).unwrap();
        let (v1, w1) = (d.v_m(), d.w_m());
        let q = w1.tr_mul(&a.spmv(&v1).unwrap())[(0, 0)];
        assert!((d.a_m[(0, 0)] - q).abs() < 1e-14 * q.abs());
        let (_, check) = projected_matrix(&d).unwrap();
        assert!(check.unwrap() < 1e-12);
    }

    #[test]
    fn symmetric_input_gives_symmetric_projection() {
        let a = tridiag(40, 1.0, -2.0, 1.0);
        let mut rng = CounterRng::new(7);
        let b = random_block(&mut rng, 40, 2);
        let d = rbla(&a, &b, &b, &mut FixedPoles::new(vec![fin(0.5), fin(2.0), fin(0.1), Pole::Infinity]), 4).unwrap();
        assert!((&d.a_m - &d.a_m.transpose()).norm_fro() < 1e-8 * d.a_m.norm_fro());
    }

    #[test]
    fn resolvent_at_a_used_pole_is_exact() {
        // Symmetric negative definite A, pole sigma = 0.5 used at step 1.
        let a = tridiag(60, 1.0, -2.5, 1.0);
        let mut rng = CounterRng::new(8);
        let b = random_block(&mut rng, 60, 2);
        let sigma = 0.5;
        let d = rbla(&a, &b, &b, &mut FixedPoles::new(vec![fin(sigma), fin(3.0), Pole::Infinity]), 3).unwrap();
        let mp = d.m * d.p;
        let shifted = |m: &DenseMatrix| &DenseMatrix::identity(m.rows()).scale(sigma) - m;
        let approx = &d.v_m() * &lu_solve(&shifted(&d.a_m), &d.e1_h10()).unwrap();
        let exact = lu_solve(&shifted(&a.to_dense()), &b).unwrap();
        assert!((&approx - &exact).norm_fro() < 1e-8 * exact.norm_fro());
        assert_eq!(mp, 6);
    }

    #[test]
    fn pole_order_does_not_change_the_space() {
        let a = tridiag(40, 0.4, -2.0, 1.6);
        let mut rng = CounterRng::new(9);
        let b = random_block(&mut rng, 40, 2);
        let c = random_block(&mut rng, 40, 2);
        let p1 = vec![fin(0.3), fin(2.0), fin(7.0), Pole::Infinity];
        let p2 = vec![fin(7.0), fin(0.3), fin(2.0), Pole::Infinity];
        let d1 = rbla(&a, &b, &c, &mut FixedPoles::new(p1), 4).unwrap();
        let d2 = rbla(&a, &b, &c, &mut FixedPoles::new(p2), 4).unwrap();
        assert!(subspace_gap(&d1.v_m(), &d2.v_m()) < 1e-8);
    }

    #[test]
    fn shifted_operator_gives_the_same_projection() {
        let a = tridiag(30, 1.0, -2.0, 1.0);
        let mut rng = CounterRng::new(10);
        let b = random_block(&mut rng, 30, 1);
        let poles = [fin(0.5), fin(1.5), Pole::Infinity];
        let mut plain = RationalLanczos::new(&a, &b, &b).unwrap();
        let mut moved = RationalLanczos::with_shift(&a, 0.25, &b, &b).unwrap();
        for q in poles {
            plain.step(q).unwrap();
            moved.step(q).unwrap();
        }
        assert_eq!(moved.poles(), poles.to_vec());
        let (d0, d1) = (plain.decomposition().unwrap(), moved.decomposition().unwrap());
        assert!((&d0.a_m - &d1.a_m).norm_fro() < 1e-10 * d0.a_m.norm_fro());
        assert!((&d1.projected_from_h().unwrap() - &d1.a_m).norm_fro() < 1e-8 * d1.a_m.norm_fro());
        assert!(matches!(moved.step(fin(0.25)), Err(Error::ZeroShift)));
    }

    #[test]
    fn singular_shift_propagates() {
        let a = SparseMatrix::from_diagonal(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        let b = DenseMatrix::from_fn(4, 1, |_, _| 1.0);
        let err = rbla(&a, &b, &b, &mut FixedPoles::new(vec![fin(2.0)]), 1).unwrap_err();
        assert!(matches!(err, Error::SingularShift { .. }));
    }
}
