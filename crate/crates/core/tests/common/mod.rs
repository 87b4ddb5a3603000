#![allow(dead_code)]

use krylov_funm::dense::{expm_dense, funm_dense, lu_solve, DenseMatrix, StieltjesFunction};
use krylov_funm::poles::AdaptivePoles;
use krylov_funm::problems::random_block;
use krylov_funm::rational::{PoleSource, RationalLanczos};
use krylov_funm::rng::CounterRng;
use krylov_funm::sparse::{
    parse_dense_matrix_market, parse_matrix_market, write_dense_matrix_market, write_matrix_market, Pole,
    SparseMatrix,
};
use krylov_funm::Error;
use nalgebra::DMatrix;

pub type Check = Result<(), String>;

pub fn to_na(m: &DenseMatrix) -> DMatrix<f64> {
    m.as_nalgebra().clone()
}

pub fn from_na(m: DMatrix<f64>) -> DenseMatrix {
    DenseMatrix::from_nalgebra(m)
}

/// `Q f(Lambda) Q^T B` from nalgebra's symmetric eigensolver.
pub fn symmetric_oracle(a: &SparseMatrix, b: &DenseMatrix, f: impl Fn(f64) -> f64) -> DenseMatrix {
    let eig = to_na(&a.to_dense()).symmetric_eigen();
    let q = &eig.eigenvectors;
    let fl = DMatrix::from_diagonal(&eig.eigenvalues.map(f));
    from_na(q * fl * (q.transpose() * to_na(b)))
}

/// `exp(tA) B` from nalgebra's matrix exponential.
pub fn expm_oracle(a: &SparseMatrix, b: &DenseMatrix, t: f64) -> DenseMatrix {
    from_na((to_na(&a.to_dense()) * t).exp() * to_na(b))
}

pub fn rel_err(x: &DenseMatrix, reference: &DenseMatrix) -> f64 {
    (x - reference).norm_fro() / reference.norm_fro()
}

/// Nonsymmetric tridiagonal matrix with a diagonally dominant negative
/// diagonal, so its spectrum stays in the left half plane.
pub fn random_tridiag(rng: &mut CounterRng, n: usize) -> SparseMatrix {
    let mut t = Vec::new();
    for i in 0..n {
        t.push((i, i, -rng.uniform(3.0, 6.0)));
        if i + 1 < n {
            t.push((i, i + 1, rng.uniform(-1.0, 1.0)));
            t.push((i + 1, i, rng.uniform(-1.0, 1.0)));
        }
    }
    SparseMatrix::from_triplets(n, &t).expect("valid triplets")
}

fn is_breakdown(e: &Error) -> bool {
    matches!(e, Error::SeriousBreakdown { .. } | Error::RankDeflation { .. })
}

/// `W^T V = I` after every step of a random rational run.
pub fn check_biorthogonality(seed: u64) -> Check {
    let mut rng = CounterRng::new(seed);
    let n = 10 + rng.below(31);
    let p = 1 + rng.below(3);
    let a = random_tridiag(&mut rng, n);
    let b = random_block(n, p, seed, 0);
    let c = random_block(n, p, seed, 1);
    let steps = (n / p - 1).min(6);
    let mut lanczos = RationalLanczos::new(&a, &b, &c).map_err(|e| e.to_string())?;
    for k in 0..steps {
        let pole = if k + 1 == steps || rng.below(4) == 0 {
            Pole::Infinity
        } else {
            Pole::Finite(rng.uniform(0.5, 20.0))
        };
        match lanczos.step(pole) {
            Ok(()) => {}
            Err(e) if is_breakdown(&e) => return Ok(()),
            Err(e) => return Err(format!("seed {seed}, step {}: {e}", k + 1)),
        }
        let d = lanczos.decomposition().map_err(|e| e.to_string())?;
        let cols = d.v.cols();
        let dev = (&d.w.tr_mul(&d.v) - &DenseMatrix::identity(cols)).norm_fro();
        let dev = if d.exhausted {
            let mp = d.m * d.p;
            (&d.w_m().tr_mul(&d.v_m()) - &DenseMatrix::identity(mp)).norm_fro()
        } else {
            dev
        };
        if !(dev <= 1e-8) {
            return Err(format!("seed {seed}, n={n}, p={p}, step {}: ||W^T V - I||_F = {dev:e}", k + 1));
        }
        if d.exhausted {
            break;
        }
    }
    Ok(())
}

/// Adaptive poles are finite, nonzero, inside the brackets and never repeated.
pub fn check_pole_validity(seed: u64) -> Check {
    let mut rng = CounterRng::new(seed);
    let n = 12 + rng.below(29);
    let p = 1 + rng.below(2);
    let a = random_tridiag(&mut rng, n);
    let b = random_block(n, p, seed, 0);
    let lo = rng.uniform(0.1, 2.0);
    let hi = lo * rng.uniform(1.5, 1e3);
    let brackets = if rng.below(2) == 0 { (lo, hi) } else { (-hi, -lo) };
    let mut source = AdaptivePoles::new(brackets).map_err(|e| e.to_string())?;
    let mut lanczos = RationalLanczos::new(&a, &b, &b).map_err(|e| e.to_string())?;
    let mut used: Vec<f64> = Vec::new();
    for k in 0..(n / p - 1).min(6) {
        let pole = source.next_pole(&lanczos).map_err(|e| format!("seed {seed}, step {}: {e}", k + 1))?;
        let s = pole.value().ok_or_else(|| format!("seed {seed}: infinite adaptive pole"))?;
        if s == 0.0 || !(s >= brackets.0 && s <= brackets.1) {
            return Err(format!("seed {seed}: pole {s} outside {brackets:?}"));
        }
        if used.iter().any(|&u| (u - s).abs() <= 1e-12 * u.abs().max(1.0)) {
            return Err(format!("seed {seed}: pole {s} repeats {used:?}"));
        }
        used.push(s);
        match lanczos.step(pole) {
            Ok(()) => {}
            Err(e) if is_breakdown(&e) => return Ok(()),
            Err(e) => return Err(format!("seed {seed}: {e}")),
        }
        if lanczos.is_exhausted() {
            break;
        }
    }
    Ok(())
}

/// Same seed gives the same stream; `at` agrees with sequential draws.
pub fn check_rng(seed: u64) -> Check {
    let stream = seed % 7;
    let mut x = CounterRng::stream(seed, stream);
    let mut y = CounterRng::stream(seed, stream);
    let probe = CounterRng::stream(seed, stream);
    for i in 1..=64u64 {
        let (u, v) = (x.next_u64(), y.next_u64());
        if u != v || u != probe.at(i) {
            return Err(format!("seed {seed}: draw {i} differs"));
        }
    }
    let f = CounterRng::new(seed).next_f64();
    if !(0.0..1.0).contains(&f) {
        return Err(format!("seed {seed}: next_f64 = {f}"));
    }
    let (b1, b2) = (random_block(9, 3, seed, 0), random_block(9, 3, seed, 0));
    if b1.to_row_major().iter().zip(b2.to_row_major()).any(|(p, q)| p.to_bits() != q.to_bits()) {
        return Err(format!("seed {seed}: random_block not reproducible"));
    }
    if random_block(9, 3, seed, 1).to_row_major() == b1.to_row_major() {
        return Err(format!("seed {seed}: streams 0 and 1 coincide"));
    }
    Ok(())
}

/// Write then parse reproduces the matrix bit for bit.
pub fn check_mm_round_trip(seed: u64) -> Check {
    let mut rng = CounterRng::new(seed);
    let n = 1 + rng.below(30);
    let count = rng.below(3 * n + 1);
    let mut t = Vec::new();
    for _ in 0..count {
        let v = rng.uniform(-1.0, 1.0) * 10f64.powi(rng.below(41) as i32 - 20);
        t.push((rng.below(n), rng.below(n), v));
    }
    let a = SparseMatrix::from_triplets(n, &t).map_err(|e| e.to_string())?;
    let mut bytes = Vec::new();
    write_matrix_market(&a, &mut bytes).map_err(|e| e.to_string())?;
    let back = parse_matrix_market(bytes.as_slice()).map_err(|e| format!("seed {seed}: {e}"))?;
    let same = back.n() == a.n()
        && back.row_ptr() == a.row_ptr()
        && back.col_idx() == a.col_idx()
        && back.values().iter().zip(a.values()).all(|(x, y)| x.to_bits() == y.to_bits());
    if !same {
        return Err(format!("seed {seed}: sparse round trip differs"));
    }
    let d = DenseMatrix::from_fn(n, 1 + rng.below(3), |_, _| rng.uniform(-1e3, 1e3));
    let mut bytes = Vec::new();
    write_dense_matrix_market(&d, &mut bytes).map_err(|e| e.to_string())?;
    let back = parse_dense_matrix_market(bytes.as_slice()).map_err(|e| e.to_string())?;
    if back.shape() != d.shape() || back.to_row_major() != d.to_row_major() {
        return Err(format!("seed {seed}: dense round trip differs"));
    }
    Ok(())
}

/// `expm_dense`, `funm_dense` and `lu_solve` against nalgebra.
pub fn check_dense_kernels(seed: u64) -> Check {
    let mut rng = CounterRng::new(seed);
    let n = 1 + rng.below(12);
    let scale = 10f64.powf(rng.uniform(-2.0, 1.0));
    let m = DenseMatrix::from_fn(n, n, |_, _| scale * rng.uniform(-1.0, 1.0));
    let e = expm_dense(&m).map_err(|e| e.to_string())?;
    let reference = from_na(to_na(&m).exp());
    let err = rel_err(&e, &reference);
    if !(err <= 1e-10) {
        return Err(format!("seed {seed}: expm rel err {err:e} (n={n}, scale={scale:e})"));
    }

    let g = DenseMatrix::from_fn(n, n, |_, _| rng.uniform(-1.0, 1.0));
    let spd = &(&g.transpose() * &g) + &DenseMatrix::identity(n);
    let alpha = rng.uniform(0.1, 0.9);
    let f = funm_dense(&spd, &StieltjesFunction::InvPower { alpha }).map_err(|e| e.to_string())?;
    let eig = to_na(&spd).symmetric_eigen();
    let q = &eig.eigenvectors;
    let reference = from_na(q * DMatrix::from_diagonal(&eig.eigenvalues.map(|x| x.powf(-alpha))) * q.transpose());
    let err = rel_err(&f, &reference);
    if !(err <= 1e-10) {
        return Err(format!("seed {seed}: x^-{alpha} rel err {err:e}"));
    }

    let rhs = DenseMatrix::from_fn(n, 2, |_, _| rng.uniform(-1.0, 1.0));
    let x = lu_solve(&spd, &rhs).map_err(|e| e.to_string())?;
    let res = (&(&spd * &x) - &rhs).norm_fro() / (spd.norm_fro() * x.norm_fro());
    if !(res <= 1e-13) {
        return Err(format!("seed {seed}: LU backward error {res:e}"));
    }
    Ok(())
}

pub const PROPERTY_SUITES: [(&str, fn(u64) -> Check); 5] = [
    ("biorthogonality", check_biorthogonality),
    ("pole validity", check_pole_validity),
    ("rng reproducibility", check_rng),
    ("matrix market round trip", check_mm_round_trip),
    ("dense kernels", check_dense_kernels),
];
