//! Test matrices and seeded block right-hand sides.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::rng::CounterRng;
use crate::sparse::{read_dense_matrix_market, read_matrix_market, SparseMatrix};

/// Off-diagonal entry of the 2x2 blocks.
pub const BLOCKDIAG_COUPLING: f64 = 0.5;
/// `diaglog` takes the log of `n` equispaced values in this interval.
pub const DIAGLOG_RANGE: (f64, f64) = (0.2, 0.99);

#[derive(Clone, Debug, PartialEq)]
pub enum ProblemKind {
    /// Convection-diffusion-reaction operator on the unit square,
    /// `n0 x n0` interior grid.
    Fdm { n0: usize },
    /// 5-point Laplacian scaled by `1/h^2`, negative definite.
    Poisson { n0: usize },
    /// The negated Poisson matrix, positive definite.
    Laplacian { n0: usize },
    /// `tridiag(1, 2, 1)`.
    Tridiag121 { n: usize },
    /// 2x2 blocks `[[a_i, 1/2], [1/2, a_i]]` with `a_i = (2i - 1)/(n + 1)`.
    BlockDiag2x2 { n: usize },
    /// `diag(log(linspace(0.2, 0.99, n)))`.
    DiagLog { n: usize },
    /// A Matrix Market file. `B` is read from `<stem>_B.mtx` next to it when
    /// that file exists.
    FromFile { path: PathBuf },
}

impl ProblemKind {
    pub const NAMES: [&'static str; 7] = ["fdm", "poisson", "laplacian", "tridiag121", "blockdiag2x2", "diaglog", "file"];

    /// Builds a kind from its name and size: `n0` for the grid kinds, `n`
    /// for the others. For `file` the size is ignored.
    pub fn from_name(name: &str, size: usize, path: Option<&Path>) -> Result<Self> {
        Ok(match name {
            "fdm" => Self::Fdm { n0: size },
            "poisson" => Self::Poisson { n0: size },
            "laplacian" => Self::Laplacian { n0: size },
            "tridiag121" => Self::Tridiag121 { n: size },
            "blockdiag2x2" => Self::BlockDiag2x2 { n: size },
            "diaglog" => Self::DiagLog { n: size },
            "file" => Self::FromFile {
                path: path.ok_or_else(|| Error::InvalidSpec("kind file needs a path".into()))?.to_path_buf(),
            },
            other => {
                return Err(Error::InvalidSpec(format!(
                    "unknown problem kind {other:?}, expected one of {}",
                    Self::NAMES.join(", ")
                )))
            }
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Fdm { .. } => "fdm",
            Self::Poisson { .. } => "poisson",
            Self::Laplacian { .. } => "laplacian",
            Self::Tridiag121 { .. } => "tridiag121",
            Self::BlockDiag2x2 { .. } => "blockdiag2x2",
            Self::DiagLog { .. } => "diaglog",
            Self::FromFile { .. } => "file",
        }
    }

    pub fn is_grid(&self) -> bool {
        matches!(self, Self::Fdm { .. } | Self::Poisson { .. } | Self::Laplacian { .. })
    }

    /// Whether the generated matrix is symmetric by construction.
    pub fn is_symmetric(&self) -> bool {
        !matches!(self, Self::Fdm { .. } | Self::FromFile { .. })
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Fdm { n0 } | Self::Poisson { n0 } | Self::Laplacian { n0 } => write!(f, "{}(n0={n0})", self.name()),
            Self::Tridiag121 { n } | Self::BlockDiag2x2 { n } | Self::DiagLog { n } => write!(f, "{}(n={n})", self.name()),
            Self::FromFile { path } => write!(f, "file({})", path.display()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProblemSpec {
    pub kind: ProblemKind,
    pub p: usize,
    pub seed: u64,
}

impl ProblemSpec {
    pub fn new(kind: ProblemKind, p: usize, seed: u64) -> Self {
        Self { kind, p, seed }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSpec(msg));
        match &self.kind {
            ProblemKind::Fdm { n0 } | ProblemKind::Poisson { n0 } | ProblemKind::Laplacian { n0 } if *n0 < 2 => {
                return bad(format!("{} needs n0 >= 2, got {n0}", self.kind.name()))
            }
            ProblemKind::BlockDiag2x2 { n } if *n == 0 || n % 2 != 0 => {
                return bad(format!("blockdiag2x2 needs an even n > 0, got {n}"))
            }
            ProblemKind::DiagLog { n } if *n < 2 => return bad(format!("diaglog needs n >= 2, got {n}")),
            ProblemKind::Tridiag121 { n } if *n == 0 => return bad("tridiag121 needs n >= 1".into()),
            _ => {}
        }
        if self.p == 0 {
            return bad("block size p must be at least 1".into());
        }
        Ok(())
    }
}

/// A generated operator with its block vectors.
#[derive(Clone, Debug)]
pub struct Problem {
    pub a: SparseMatrix,
    pub b: DenseMatrix,
    pub c: DenseMatrix,
}

/// Seeded `n x p` block with entries uniform in `[0, 1)`, filled row by
/// row from stream `stream` of `seed`.
pub fn random_block(n: usize, p: usize, seed: u64, stream: u64) -> DenseMatrix {
    let mut rng = CounterRng::stream(seed, stream);
    let entries = (0..n * p).map(|_| rng.next_f64()).collect();
    DenseMatrix::from_row_major(n, p, entries).expect("length matches")
}

pub fn generate(spec: &ProblemSpec) -> Result<Problem> {
    spec.validate()?;
    let a = generate_matrix(&spec.kind)?;
    let n = a.n();
    if spec.p > n {
        return Err(Error::InvalidSpec(format!("block size {} exceeds dimension {n}", spec.p)));
    }
    let b = match &spec.kind {
        ProblemKind::FromFile { path } => match companion_rhs(path) {
            Some(rhs) if rhs.exists() => {
                let b = read_dense_matrix_market(&rhs)?;
                if b.rows() != n || b.cols() != spec.p {
                    return Err(Error::InvalidSpec(format!(
                        "{} is {}x{}, expected {n}x{}",
                        rhs.display(),
                        b.rows(),
                        b.cols(),
                        spec.p
                    )));
                }
                b
            }
            _ => random_block(n, spec.p, spec.seed, 0),
        },
        _ => random_block(n, spec.p, spec.seed, 0),
    };
    let symmetric = match &spec.kind {
        ProblemKind::FromFile { .. } => a.is_symmetric(),
        kind => kind.is_symmetric(),
    };
    let c = if symmetric { b.clone() } else { random_block(n, spec.p, spec.seed, 1) };
    Ok(Problem { a, b, c })
}

fn companion_rhs(path: &Path) -> Option<PathBuf> {
    let stem = path.file_stem()?.to_str()?;
    Some(path.with_file_name(format!("{stem}_B.mtx")))
}

pub fn generate_matrix(kind: &ProblemKind) -> Result<SparseMatrix> {
    match *kind {
        ProblemKind::Fdm { n0 } => fdm(n0),
        ProblemKind::Poisson { n0 } => grid_laplacian(n0, 1.0),
        ProblemKind::Laplacian { n0 } => grid_laplacian(n0, -1.0),
        ProblemKind::Tridiag121 { n } => {
            let mut t = Vec::with_capacity(3 * n);
            for i in 0..n {
                t.push((i, i, 2.0));
                if i + 1 < n {
                    t.push((i, i + 1, 1.0));
                    t.push((i + 1, i, 1.0));
                }
            }
            SparseMatrix::from_triplets(n, &t)
        }
        ProblemKind::BlockDiag2x2 { n } => {
            let mut t = Vec::with_capacity(2 * n);
            for i in 0..n / 2 {
                let a = (2 * i + 1) as f64 / (n + 1) as f64;
                let (r, s) = (2 * i, 2 * i + 1);
                t.extend([(r, r, a), (r, s, BLOCKDIAG_COUPLING), (s, r, BLOCKDIAG_COUPLING), (s, s, a)]);
            }
            SparseMatrix::from_triplets(n, &t)
        }
        ProblemKind::DiagLog { n } => {
            let (lo, hi) = DIAGLOG_RANGE;
            let d: Vec<f64> = (0..n).map(|i| (lo + (hi - lo) * i as f64 / (n - 1) as f64).ln()).collect();
            SparseMatrix::from_diagonal(&d)
        }
        ProblemKind::FromFile { ref path } => read_matrix_market(path),
    }
}

/// Grid index of interior point `(i, j)`, `x = (i+1) h`, `y = (j+1) h`;
/// `x` runs fastest.
fn grid_index(n0: usize, i: usize, j: usize) -> usize {
    j * n0 + i
}

fn grid_laplacian(n0: usize, sign: f64) -> Result<SparseMatrix> {
    let inv_h2 = ((n0 + 1) * (n0 + 1)) as f64;
    let (d, o) = (-4.0 * inv_h2 * sign, inv_h2 * sign);
    stencil(n0, |_, _| (d, o, o, o, o))
}

/// `Lu = Δu - f u_x - g u_y - h u` with `f = e^{xy}`, `g = sin(xy)`,
/// `h = y^2 - x^2`, centered differences.
fn fdm(n0: usize) -> Result<SparseMatrix> {
    let h = 1.0 / (n0 + 1) as f64;
    let inv_h2 = 1.0 / (h * h);
    stencil(n0, |x, y| {
        let f = (x * y).exp();
        let g = (x * y).sin();
        let c = y * y - x * x;
        let half = 1.0 / (2.0 * h);
        (-4.0 * inv_h2 - c, inv_h2 + f * half, inv_h2 - f * half, inv_h2 + g * half, inv_h2 - g * half)
    })
}

/// Assembles a 5-point stencil from `(center, west, east, south, north)`
/// coefficients evaluated at each interior point, dropping boundary
/// neighbors.
fn stencil(n0: usize, coef: impl Fn(f64, f64) -> (f64, f64, f64, f64, f64)) -> Result<SparseMatrix> {
    let h = 1.0 / (n0 + 1) as f64;
    let mut t = Vec::with_capacity(5 * n0 * n0);
    for j in 0..n0 {
        for i in 0..n0 {
            let k = grid_index(n0, i, j);
            let (c, w, e, s, nn) = coef((i + 1) as f64 * h, (j + 1) as f64 * h);
            t.push((k, k, c));
            if i > 0 {
                t.push((k, grid_index(n0, i - 1, j), w));
            }
            if i + 1 < n0 {
                t.push((k, grid_index(n0, i + 1, j), e));
            }
            if j > 0 {
                t.push((k, grid_index(n0, i, j - 1), s));
            }
            if j + 1 < n0 {
                t.push((k, grid_index(n0, i, j + 1), nn));
            }
        }
    }
    SparseMatrix::from_triplets(n0 * n0, &t)
}

impl FromStr for ProblemKind {
    type Err = Error;

    /// `name:size` or `file:PATH`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, arg) = s.split_once(':').ok_or_else(|| {
            Error::InvalidSpec(format!("expected KIND:SIZE or file:PATH, got {s:?}"))
        })?;
        if name == "file" {
            return Self::from_name(name, 0, Some(Path::new(arg)));
        }
        let size = arg.parse().map_err(|_| Error::InvalidSpec(format!("bad size {arg:?} in {s:?}")))?;
        Self::from_name(name, size, None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::{eig_symmetric, log_norm_2};

    fn spec(kind: ProblemKind) -> ProblemSpec {
        ProblemSpec::new(kind, 2, 7)
    }

    #[test]
    fn poisson_eigenvalues_match_closed_form() {
        let n0 = 3;
        let a = generate_matrix(&ProblemKind::Poisson { n0 }).unwrap();
        assert_eq!(a.n(), 9);
        assert!(a.is_symmetric());
        let h = 1.0 / (n0 + 1) as f64;
        let mut expected = Vec::new();
        for i in 1..=n0 {
            for j in 1..=n0 {
                let ci = (i as f64 * std::f64::consts::PI * h).cos();
                let cj = (j as f64 * std::f64::consts::PI * h).cos();
                expected.push(-2.0 / (h * h) * (2.0 - ci - cj));
            }
        }
        expected.sort_by(f64::total_cmp);
        let got = eig_symmetric(&a.to_dense()).values;
        for (g, e) in got.iter().zip(&expected) {
            assert!((g - e).abs() <= 1e-12 * e.abs(), "{g} vs {e}");
        }
        // Interior row sums vanish; only the center row of n0=3 is interior.
        let center = grid_index(n0, 1, 1);
        let row_sum: f64 = a.iter().filter(|&(i, _, _)| i == center).map(|(_, _, v)| v).sum();
        assert_eq!(row_sum, 0.0);
        assert!(log_norm_2(&a).unwrap() < 0.0);
    }

    #[test]
    fn laplacian_is_negated_poisson() {
        let p = generate_matrix(&ProblemKind::Poisson { n0: 5 }).unwrap();
        let l = generate_matrix(&ProblemKind::Laplacian { n0: 5 }).unwrap();
        assert_eq!(p.scale(-1.0), l);
    }

    #[test]
    fn diaglog_endpoints() {
        let a = generate_matrix(&ProblemKind::DiagLog { n: 100 }).unwrap();
        assert!((a.get(0, 0) - (-1.6094)).abs() < 1e-4);
        assert!((a.get(99, 99) - 0.99f64.ln()).abs() < 1e-15);
        assert!((a.get(99, 99) + 0.01005).abs() < 1e-5);
    }

    #[test]
    fn blockdiag_small() {
        let a = generate_matrix(&ProblemKind::BlockDiag2x2 { n: 4 }).unwrap();
        assert_eq!(
            a.to_dense().to_row_major(),
            vec![0.2, 0.5, 0.0, 0.0, 0.5, 0.2, 0.0, 0.0, 0.0, 0.0, 0.6, 0.5, 0.0, 0.0, 0.5, 0.6]
        );
    }

    #[test]
    fn tridiag_small() {
        let a = generate_matrix(&ProblemKind::Tridiag121 { n: 3 }).unwrap();
        assert_eq!(a.to_dense().to_row_major(), vec![2.0, 1.0, 0.0, 1.0, 2.0, 1.0, 0.0, 1.0, 2.0]);
    }

    #[test]
    fn fdm_stencil_hand_entries() {
        let n0 = 4;
        let a = generate_matrix(&ProblemKind::Fdm { n0 }).unwrap();
        let h = 0.2;
        let (x, y) = (2.0 * h, 3.0 * h);
        let k = grid_index(n0, 1, 2);
        assert!((a.get(k, k) - (-4.0 / (h * h) - (y * y - x * x))).abs() < 1e-12);
        assert!((a.get(k, grid_index(n0, 2, 2)) - (1.0 / (h * h) - (x * y).exp() / (2.0 * h))).abs() < 1e-12);
        assert!((a.get(k, grid_index(n0, 1, 1)) - (1.0 / (h * h) + (x * y).sin() / (2.0 * h))).abs() < 1e-12);
        assert!(!a.is_symmetric());
    }

    #[test]
    fn symmetric_kinds_are_exactly_symmetric() {
        for kind in [
            ProblemKind::Poisson { n0: 6 },
            ProblemKind::Laplacian { n0: 6 },
            ProblemKind::Tridiag121 { n: 30 },
            ProblemKind::BlockDiag2x2 { n: 30 },
            ProblemKind::DiagLog { n: 30 },
        ] {
            let pr = generate(&spec(kind.clone())).unwrap();
            assert!(pr.a.is_symmetric(), "{kind}");
            assert_eq!(pr.b, pr.c);
        }
        let fdm = generate(&spec(ProblemKind::Fdm { n0: 5 })).unwrap();
        assert_ne!(fdm.b, fdm.c);
    }

    #[test]
    fn seeds_are_reproducible() {
        let s = spec(ProblemKind::Fdm { n0: 5 });
        let (x, y) = (generate(&s).unwrap(), generate(&s).unwrap());
        assert_eq!(x.b.to_row_major(), y.b.to_row_major());
        assert_eq!(x.c.to_row_major(), y.c.to_row_major());
        let other = generate(&ProblemSpec { seed: 8, ..s }).unwrap();
        assert_ne!(x.b, other.b);
        assert!(x.b.to_row_major().iter().all(|&v| (0.0..1.0).contains(&v)));
    }

    #[test]
    fn invalid_specs() {
        for kind in [ProblemKind::Fdm { n0: 1 }, ProblemKind::BlockDiag2x2 { n: 5 }, ProblemKind::DiagLog { n: 1 }] {
            assert!(matches!(generate(&spec(kind)), Err(Error::InvalidSpec(_))));
        }
        assert!(matches!(generate(&ProblemSpec::new(ProblemKind::Tridiag121 { n: 3 }, 4, 0)), Err(Error::InvalidSpec(_))));
        assert!(matches!("bogus:3".parse::<ProblemKind>(), Err(Error::InvalidSpec(_))));
        assert_eq!("poisson:8".parse::<ProblemKind>().unwrap(), ProblemKind::Poisson { n0: 8 });
    }

    #[test]
    fn file_kind_with_companion_rhs() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.mtx");
        let a = generate_matrix(&ProblemKind::Tridiag121 { n: 3 }).unwrap();
        crate::sparse::write_matrix_market(&a, std::fs::File::create(&path).unwrap()).unwrap();
        let pr = generate(&ProblemSpec::new(ProblemKind::FromFile { path: path.clone() }, 1, 0)).unwrap();
        assert_eq!(pr.a, a);
        assert_eq!(pr.b, pr.c);
        std::fs::write(dir.path().join("m_B.mtx"), "%%MatrixMarket matrix array real general\n3 1\n1\n2\n3\n").unwrap();
        let pr = generate(&ProblemSpec::new(ProblemKind::FromFile { path }, 1, 0)).unwrap();
        assert_eq!(pr.b.to_row_major(), vec![1.0, 2.0, 3.0]);
    }
}
