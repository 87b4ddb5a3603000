//! Scaling-and-squaring with diagonal Padé approximants (degrees 3 to 13),
//! using the backward-error thresholds of Higham (2005).

use super::{DenseLu, DenseMatrix};
use crate::error::{Error, Result};

const THETA: [(usize, f64); 4] = [
    (3, 1.495585217958292e-2),
    (5, 2.539398330063230e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068e0),
];
const THETA_13: f64 = 5.371920351148152;

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0];
const B9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// Matrix exponential `e^M`.
pub fn expm_dense(m: &DenseMatrix) -> Result<DenseMatrix> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "expm of a non-square {}x{} matrix",
            m.rows(),
            m.cols()
        )));
    }
    m.check_finite()?;
    let n = m.rows();
    if n == 0 {
        return Ok(DenseMatrix::zeros(0, 0));
    }
    let norm = m.norm_1();
    for &(degree, theta) in &THETA {
        if norm <= theta {
            let coeffs: &[f64] = match degree {
                3 => &B3,
                5 => &B5,
                7 => &B7,
                _ => &B9,
            };
            return finish(pade_low(m, coeffs)?);
        }
    }

    let s = if norm > THETA_13 { (norm / THETA_13).log2().ceil().max(0.0) as i32 } else { 0 };
    let scaled = m.scale(2f64.powi(-s));
    let mut x = pade13(&scaled)?;
    for _ in 0..s {
        x = &x * &x;
        if !x.as_nalgebra().iter().all(|v| v.is_finite()) {
            return Err(Error::Overflow);
        }
    }
    finish(x)
}

fn finish(x: DenseMatrix) -> Result<DenseMatrix> {
    if x.as_nalgebra().iter().all(|v| v.is_finite()) {
        Ok(x)
    } else {
        Err(Error::Overflow)
    }
}

/// Solves `(V - U) X = V + U`.
fn pade_solve(u: &DenseMatrix, v: &DenseMatrix) -> Result<DenseMatrix> {
    let p = v + u;
    let q = v - u;
    let lu = DenseLu::new(&q).map_err(|_| Error::Overflow)?;
    Ok(lu.solve(&p))
}

fn pade_low(a: &DenseMatrix, b: &[f64]) -> Result<DenseMatrix> {
    let n = a.rows();
    let a2 = a * a;
    // Powers of A^2 up to the needed degree.
    let half = (b.len() - 1) / 2;
    let mut powers = vec![DenseMatrix::identity(n)];
    for k in 1..=half {
        let next = &powers[k - 1] * &a2;
        powers.push(next);
    }
    let mut u_inner = DenseMatrix::zeros(n, n);
    let mut v = DenseMatrix::zeros(n, n);
    for k in 0..=half {
        u_inner.axpy(b[2 * k + 1], &powers[k]);
        v.axpy(b[2 * k], &powers[k]);
    }
    let u = a * &u_inner;
    pade_solve(&u, &v)
}

fn pade13(a: &DenseMatrix) -> Result<DenseMatrix> {
    let n = a.rows();
    let b = &B13;
    let ident = DenseMatrix::identity(n);
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;

    let mut inner = a6.scale(b[13]);
    inner.axpy(b[11], &a4);
    inner.axpy(b[9], &a2);
    let mut u_inner = &a6 * &inner;
    u_inner.axpy(b[7], &a6);
    u_inner.axpy(b[5], &a4);
    u_inner.axpy(b[3], &a2);
    u_inner.axpy(b[1], &ident);
    let u = a * &u_inner;

    let mut inner = a6.scale(b[12]);
    inner.axpy(b[10], &a4);
    inner.axpy(b[8], &a2);
    let mut v = &a6 * &inner;
    v.axpy(b[6], &a6);
    v.axpy(b[4], &a4);
    v.axpy(b[2], &a2);
    v.axpy(b[0], &ident);
    pade_solve(&u, &v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::CounterRng;

    /// Truncated Taylor series of `e^{M / 2^s}` squared `s` times.
    fn taylor_oracle(m: &DenseMatrix, terms: usize) -> DenseMatrix {
        let n = m.rows();
        let s = 4;
        let scaled = m.scale(1.0 / 16.0);
        let mut sum = DenseMatrix::identity(n);
        let mut term = DenseMatrix::identity(n);
        for k in 1..=terms {
            term = (&term * &scaled).scale(1.0 / k as f64);
            sum = &sum + &term;
        }
        for _ in 0..s {
            sum = &sum * &sum;
        }
        sum
    }

    #[test]
    fn zero_and_nilpotent() {
        assert_eq!(expm_dense(&DenseMatrix::zeros(2, 2)).unwrap(), DenseMatrix::identity(2));
        let n = DenseMatrix::from_row_major(2, 2, vec![0.0, 1.0, 0.0, 0.0]).unwrap();
        let e = expm_dense(&n).unwrap();
        let expected = DenseMatrix::from_row_major(2, 2, vec![1.0, 1.0, 0.0, 1.0]).unwrap();
        assert!((&e - &expected).norm_fro() < 1e-15);
    }

    #[test]
    fn matches_taylor_on_random_small_norm() {
        for seed in 0..20 {
            let mut rng = CounterRng::new(100 + seed);
            let raw = DenseMatrix::from_fn(8, 8, |_, _| rng.uniform(-1.0, 1.0));
            let scale = rng.uniform(0.05, 1.0) / raw.norm_1();
            let m = raw.scale(scale);
            let e = expm_dense(&m).unwrap();
            let oracle = taylor_oracle(&m, 30);
            let rel = (&e - &oracle).norm_fro() / oracle.norm_fro();
            assert!(rel < 1e-12, "seed {seed}: {rel:e}");
        }
    }

    #[test]
    fn diagonal_large_norm() {
        let m = DenseMatrix::from_diagonal(&[-50.0, 3.0, 0.5]);
        let e = expm_dense(&m).unwrap();
        for (i, d) in [-50.0f64, 3.0, 0.5].iter().enumerate() {
            assert!((e[(i, i)] - d.exp()).abs() <= 1e-13 * d.exp());
        }
    }

    #[test]
    fn overflow_is_reported() {
        let m = DenseMatrix::from_diagonal(&[1000.0]);
        assert!(matches!(expm_dense(&m), Err(Error::Overflow)));
    }
}
