//! Command-line harness: `expm`, `funm` and `gen`.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::dense::{expm_dense, funm_dense, log_norm_2, DenseMatrix, StieltjesFunction};
use crate::error::{Error, Result};
use crate::matfunc::{error_bound_with_log_norm, exp_action, stieltjes_action, PoleConfig, ResidualEvaluator, DEFAULT_BOUND_SAMPLES};
use crate::poles::ZeroMode;
use crate::problems::{generate, Problem, ProblemKind, ProblemSpec};
use crate::rational::{PoleSource, RationalLanczos};
use crate::sparse::{write_dense_matrix_market, write_matrix_market, Pole};

/// Largest `n` for which `expm` and general `funm` runs compute dense reference solutions.
pub const DENSE_ORACLE_MAX_N: usize = 400;
/// Largest `n` for the symmetric eigendecomposition reference in `funm`.
pub const SYMMETRIC_ORACLE_MAX_N: usize = 2000;
pub const DEFAULT_M_MAX: usize = 30;
pub const DEFAULT_TOL: f64 = 1e-10;
pub const THREADS_ENV: &str = "KRYLOV_FUNM_THREADS";

pub const CSV_HEADER: &str = "m,t,error,rel_error,residual,bound,poles_used,wall_ms,note";

#[derive(Debug, Parser)]
#[command(name = "krylov-funm", version, about = "Block Lanczos approximation of exp(tA)B and f(A)B")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Approximate exp(tA)B over a grid of m and t.
    Expm(Flags),
    /// Approximate f(A)B for a Cauchy-Stieltjes function or exp.
    Funm(Flags),
    /// Write the generated matrix and B in Matrix Market format.
    Gen(Flags),
}

/// Every flag can also be given as `key = value` in the config file; flags win.
#[derive(Debug, Default, Clone, Args)]
pub struct Flags {
    /// Flat `key = value` file; `#` starts a comment.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// fdm, poisson, laplacian, tridiag121, blockdiag2x2, diaglog, `kind:size` or `file:PATH`.
    #[arg(long)]
    pub problem: Option<String>,
    /// Grid size for fdm/poisson/laplacian; accepted as the size of any kind.
    #[arg(long)]
    pub n0: Option<String>,
    /// Matrix size for tridiag121/blockdiag2x2/diaglog; accepted as the size of any kind.
    #[arg(long)]
    pub n: Option<String>,
    /// Block size.
    #[arg(long)]
    pub p: Option<String>,
    /// Steps to report, e.g. `2..14` or `10,20,30`. Without it every step is
    /// reported until the tolerance is met or `m_max` is reached.
    #[arg(long)]
    pub m: Option<String>,
    /// Step cap when `--m` is absent.
    #[arg(long)]
    pub m_max: Option<String>,
    /// Comma-separated times.
    #[arg(long)]
    pub t: Option<String>,
    #[arg(long)]
    pub tol: Option<String>,
    /// `adaptive`, `poly`, or a comma-separated list of poles (`inf` allowed).
    #[arg(long)]
    pub poles: Option<String>,
    /// Interval `A,B` searched by adaptive pole selection.
    #[arg(long)]
    pub brackets: Option<String>,
    /// `f1:ALPHA`, `f2` or `f3`.
    #[arg(long)]
    pub func: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    /// `inf` or `2`, for the error and residual columns.
    #[arg(long)]
    pub norm: Option<String>,
    #[arg(long)]
    pub out: Option<String>,
    /// Fill the wall_ms column; output is then no longer reproducible byte for byte.
    #[arg(long)]
    pub timing: bool,
}

const KEYS: [&str; 15] =
    ["problem", "n0", "n", "p", "m", "m_max", "t", "tol", "poles", "brackets", "func", "seed", "norm", "out", "timing"];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Norm {
    Inf,
    Two,
}

impl Norm {
    pub fn of(self, m: &DenseMatrix) -> f64 {
        match self {
            Self::Inf => m.norm_inf(),
            Self::Two => m.norm_2(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Method {
    Poly,
    RationalFixed,
    RationalAdaptive,
}

/// A validated run description.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub problem: ProblemSpec,
    pub method: Method,
    pub poles: PoleConfig,
    pub t_list: Vec<f64>,
    /// Reported steps, ascending; `None` reports every step until convergence.
    pub m_list: Option<Vec<usize>>,
    pub m_max: usize,
    pub tol: f64,
    pub func: StieltjesFunction,
    pub out: PathBuf,
    pub norm: Norm,
    pub timing: bool,
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidConfig(msg.into())
}

/// Reads a `key = value` file.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse { line: i + 1, message: format!("expected key = value, got {line:?}") })?;
        let key = key.trim().replace('-', "_");
        if !KEYS.contains(&key.as_str()) {
            return Err(Error::Parse { line: i + 1, message: format!("unknown key {key:?}, expected one of {}", KEYS.join(", ")) });
        }
        map.insert(key, value.trim().to_string());
    }
    Ok(map)
}

fn merged(flags: &Flags) -> Result<BTreeMap<String, String>> {
    let mut map = match &flags.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| invalid(format!("cannot read config file {}: {e}", path.display())))?;
            parse_config(&text)?
        }
        None => BTreeMap::new(),
    };
    let overrides = [
        ("problem", &flags.problem),
        ("n0", &flags.n0),
        ("n", &flags.n),
        ("p", &flags.p),
        ("m", &flags.m),
        ("m_max", &flags.m_max),
        ("t", &flags.t),
        ("tol", &flags.tol),
        ("poles", &flags.poles),
        ("brackets", &flags.brackets),
        ("func", &flags.func),
        ("seed", &flags.seed),
        ("norm", &flags.norm),
        ("out", &flags.out),
    ];
    for (key, value) in overrides {
        if let Some(v) = value {
            map.insert(key.to_string(), v.trim().to_string());
        }
    }
    if flags.timing {
        map.insert("timing".into(), "true".into());
    }
    Ok(map)
}

fn parse_num<T: std::str::FromStr>(key: &str, s: &str) -> Result<T> {
    s.trim().parse().map_err(|_| invalid(format!("{key}: cannot parse {s:?}")))
}

/// `2..14`, `10,20,30` or a mix; sorted and deduplicated.
pub fn parse_m_list(s: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for item in s.split(',').map(str::trim).filter(|x| !x.is_empty()) {
        match item.split_once("..") {
            Some((lo, hi)) => {
                let (lo, hi): (usize, usize) = (parse_num("m", lo)?, parse_num("m", hi)?);
                if lo > hi {
                    return Err(invalid(format!("m: empty range {item:?}")));
                }
                out.extend(lo..=hi);
            }
            None => out.push(parse_num("m", item)?),
        }
    }
    if out.is_empty() {
        return Err(invalid("m: the list is empty"));
    }
    if out.contains(&0) {
        return Err(invalid("m: steps start at 1"));
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

pub fn parse_t_list(s: &str) -> Result<Vec<f64>> {
    let out: Vec<f64> =
        s.split(',').map(str::trim).filter(|x| !x.is_empty()).map(|x| parse_num("t", x)).collect::<Result<_>>()?;
    if out.is_empty() {
        return Err(invalid("t: the list is empty"));
    }
    if let Some(bad) = out.iter().find(|t| !t.is_finite() || **t < 0.0) {
        return Err(invalid(format!("t: times must be finite and non-negative, got {bad}")));
    }
    Ok(out)
}

pub fn parse_func(s: &str) -> Result<StieltjesFunction> {
    let s = s.trim().to_ascii_lowercase();
    match s.split_once(':') {
        Some(("f1", alpha)) => StieltjesFunction::inv_power(parse_num("func", alpha)?)
            .map_err(|e| invalid(format!("func: {e}"))),
        None if s == "f1" => StieltjesFunction::inv_power(0.5),
        None if s == "f2" => Ok(StieltjesFunction::Log1pOverX),
        None if s == "f3" => Ok(StieltjesFunction::Exp { t: 1.0 }),
        _ => Err(invalid(format!("func: expected f1:ALPHA, f2 or f3, got {s:?}"))),
    }
}

fn parse_poles(s: &str, brackets: Option<&String>) -> Result<(Method, PoleConfig)> {
    let lower = s.trim().to_ascii_lowercase();
    let brackets = match brackets {
        Some(b) => {
            let parts: Vec<f64> = b.split(',').map(|x| parse_num("brackets", x)).collect::<Result<_>>()?;
            if parts.len() != 2 || !(parts[0] < parts[1]) || parts[0] * parts[1] < 0.0 || parts.contains(&0.0) {
                return Err(invalid(format!(
                    "brackets: expected A,B with A < B on one side of zero, got {b:?}"
                )));
            }
            Some((parts[0], parts[1]))
        }
        None => None,
    };
    if lower != "adaptive" && brackets.is_some() {
        return Err(invalid("brackets only apply with poles = adaptive"));
    }
    Ok(match lower.as_str() {
        "adaptive" => (Method::RationalAdaptive, PoleConfig::Adaptive { brackets, mode: ZeroMode::default() }),
        "poly" | "polynomial" => (Method::Poly, PoleConfig::Polynomial),
        _ => {
            let list: Vec<Pole> = lower
                .split(',')
                .map(str::trim)
                .filter(|x| !x.is_empty())
                .map(|x| x.parse::<Pole>().map_err(|e| invalid(format!("poles: {e}"))))
                .collect::<Result<_>>()?;
            if list.is_empty() {
                return Err(invalid("poles: the list is empty"));
            }
            (Method::RationalFixed, PoleConfig::Fixed(list))
        }
    })
}

fn parse_problem(map: &BTreeMap<String, String>) -> Result<ProblemKind> {
    let raw = map.get("problem").ok_or_else(|| invalid("missing problem (e.g. --problem poisson --n0 8)"))?;
    let size = match (map.get("n0"), map.get("n")) {
        (Some(a), Some(b)) if a != b => return Err(invalid(format!("n0 = {a} and n = {b} disagree"))),
        (Some(s), _) | (None, Some(s)) => Some(parse_num::<usize>("n", s)?),
        (None, None) => None,
    };
    if let Some(path) = raw.strip_prefix("file:") {
        return Ok(ProblemKind::FromFile { path: PathBuf::from(path) });
    }
    match (raw.split_once(':'), size) {
        (Some((name, _)), Some(size)) => ProblemKind::from_name(name, size, None),
        (Some(_), None) => raw.parse(),
        (None, Some(size)) => ProblemKind::from_name(raw, size, None),
        (None, None) => Err(invalid(format!("problem {raw}: missing size (--n0 or --n)"))),
    }
}

impl RunConfig {
    pub fn from_map(map: &BTreeMap<String, String>) -> Result<Self> {
        let get = |k: &str| map.get(k).map(String::as_str);
        let kind = parse_problem(map)?;
        let p = get("p").map(|s| parse_num("p", s)).transpose()?.unwrap_or(1);
        let seed = get("seed").map(|s| parse_num("seed", s)).transpose()?.unwrap_or(0);
        let problem = ProblemSpec::new(kind, p, seed);
        problem.validate()?;
        let (method, poles) = parse_poles(get("poles").unwrap_or("adaptive"), map.get("brackets"))?;
        let t_list = parse_t_list(get("t").unwrap_or("1"))?;
        let m_list = get("m").map(parse_m_list).transpose()?;
        let m_max = match &m_list {
            Some(list) => *list.last().expect("nonempty"),
            None => get("m_max").map(|s| parse_num("m_max", s)).transpose()?.unwrap_or(DEFAULT_M_MAX),
        };
        if m_max == 0 {
            return Err(invalid("m_max must be at least 1"));
        }
        let tol: f64 = get("tol").map(|s| parse_num("tol", s)).transpose()?.unwrap_or(DEFAULT_TOL);
        if !(tol > 0.0) {
            return Err(invalid(format!("tol must be positive, got {tol}")));
        }
        let func = parse_func(get("func").unwrap_or("f1:0.5"))?;
        let norm = match get("norm").unwrap_or("inf").to_ascii_lowercase().as_str() {
            "inf" => Norm::Inf,
            "2" => Norm::Two,
            other => return Err(invalid(format!("norm: expected inf or 2, got {other:?}"))),
        };
        let timing = match get("timing").unwrap_or("false").to_ascii_lowercase().as_str() {
            "true" | "1" | "yes" => true,
            "false" | "0" | "no" => false,
            other => return Err(invalid(format!("timing: expected true or false, got {other:?}"))),
        };
        Ok(Self {
            problem,
            method,
            poles,
            t_list,
            m_list,
            m_max,
            tol,
            func,
            out: PathBuf::from(get("out").unwrap_or(".")),
            norm,
            timing,
        })
    }

    pub fn from_flags(flags: &Flags) -> Result<Self> {
        Self::from_map(&merged(flags)?)
    }
}

/// One CSV line.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Row {
    pub m: usize,
    pub t: Option<f64>,
    pub error: Option<f64>,
    pub rel_error: Option<f64>,
    pub residual: Option<f64>,
    pub bound: Option<f64>,
    pub poles: Vec<Pole>,
    pub wall_ms: Option<f64>,
    pub note: String,
}

fn sci(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.16e}")).unwrap_or_default()
}

impl Row {
    pub fn to_csv(&self) -> String {
        let poles: Vec<String> = self
            .poles
            .iter()
            .map(|p| match p.value() {
                Some(v) => format!("{v:.16e}"),
                None => "inf".into(),
            })
            .collect();
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.m,
            sci(self.t),
            sci(self.error),
            sci(self.rel_error),
            sci(self.residual),
            sci(self.bound),
            poles.join(";"),
            sci(self.wall_ms),
            self.note.replace(',', ";")
        )
    }
}

pub fn render_csv(rows: &[Row]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(s, "{}", r.to_csv());
    }
    s
}

/// Writes through a temporary file in the same directory and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Worker count: `KRYLOV_FUNM_THREADS` when set, else the available parallelism.
pub fn worker_count() -> Result<usize> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(invalid(format!("{THREADS_ENV} must be a positive integer, got {v:?}"))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)),
    }
}

/// Runs `f` on every item with at most `workers` threads; results keep input order.
fn parallel_map<T: Sync, R: Send>(items: &[T], workers: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let workers = workers.clamp(1, items.len().max(1));
    let mut slots: Vec<Option<R>> = (0..items.len()).map(|_| None).collect();
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let f = &f;
                scope.spawn(move || {
                    (w..items.len()).step_by(workers).map(|i| (i, f(&items[i]))).collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            for (i, r) in h.join().expect("worker panicked") {
                slots[i] = Some(r);
            }
        }
    });
    slots.into_iter().map(|r| r.expect("every slot filled")).collect()
}

fn wants(cfg: &RunConfig, m: usize) -> bool {
    cfg.m_list.as_ref().map_or(true, |l| l.binary_search(&m).is_ok())
}

fn is_breakdown(e: &Error) -> bool {
    matches!(e, Error::SeriousBreakdown { .. } | Error::RankDeflation { .. })
}

/// What one step of a sweep reports, before the oracle comparison.
struct Sample {
    x: DenseMatrix,
    residual: Option<f64>,
    bound: Option<f64>,
    /// Convergence measure compared against the tolerance.
    measure: f64,
}

/// Drives the rational process for one function and collects rows at the
/// requested steps. `eval` produces the sample for a decomposition.
fn sweep(
    cfg: &RunConfig,
    prob: &Problem,
    f: &StieltjesFunction,
    t: Option<f64>,
    reference: Option<&DenseMatrix>,
    mut eval: impl FnMut(&crate::rational::RationalDecomposition, Option<&DenseMatrix>) -> Result<Sample>,
    consecutive: bool,
) -> Result<Vec<Row>> {
    let start = Instant::now();
    let n = prob.a.n();
    let m_cap = cfg.m_max.min(n / prob.b.cols().max(1)).max(1);
    let mut source: Box<dyn PoleSource> = cfg.poles.source(&prob.a, f, cfg.m_max)?;
    let mut lanczos = RationalLanczos::new(&prob.a, &prob.b, &prob.c)?;
    let mut rows = Vec::new();
    let mut previous: Option<DenseMatrix> = None;
    let mut prev_measure = f64::INFINITY;
    let mut ended: Option<(String, Option<Row>)> = None;

    for m in 1..=m_cap {
        if let Err(e) = source.next_pole(&lanczos).and_then(|q| lanczos.step(q)) {
            if is_breakdown(&e) && m > 1 {
                ended = Some((format!("stopped after m={}: {e}", m - 1), None));
                break;
            }
            return Err(e);
        }
        let d = lanczos.decomposition()?;
        let tracking = cfg.m_list.is_none();
        if !tracking && !wants(cfg, m) && !d.exhausted {
            continue;
        }
        let sample = eval(&d, previous.as_ref())?;
        let mut row = Row { m, t, residual: sample.residual, bound: sample.bound, poles: lanczos.poles(), ..Row::default() };
        if let Some(x_ref) = reference {
            let err = cfg.norm.of(&(x_ref - &sample.x));
            row.error = Some(err);
            row.rel_error = Some(err / cfg.norm.of(x_ref).max(f64::MIN_POSITIVE));
        } else {
            row.note = format!("no reference solution for n = {n}");
        }
        if cfg.timing {
            row.wall_ms = Some(start.elapsed().as_secs_f64() * 1e3);
        }
        if wants(cfg, m) {
            rows.push(row.clone());
        }
        if d.exhausted {
            ended = Some((format!("invariant subspace reached at m={m}"), Some(row)));
            break;
        }
        if tracking {
            let below = sample.measure <= cfg.tol && (!consecutive || prev_measure <= cfg.tol);
            if below {
                break;
            }
        }
        prev_measure = sample.measure;
        previous = Some(sample.x);
    }

    if let (Some((note, last)), Some(list)) = (ended, &cfg.m_list) {
        let done = rows.last().map_or(0, |r| r.m);
        for &m in list.iter().filter(|&&m| m > done) {
            let mut row = last.clone().unwrap_or_default();
            if last.is_none() {
                row.t = t;
            }
            row.m = m;
            row.note = note.clone();
            rows.push(row);
        }
    }
    Ok(rows)
}

fn check_sizes(cfg: &RunConfig, prob: &Problem) -> Result<()> {
    let (n, p) = (prob.a.n(), prob.b.cols());
    if let Some(list) = &cfg.m_list {
        let last = *list.last().expect("nonempty");
        if last * p > n {
            return Err(invalid(format!("m = {last} with p = {p} needs m*p <= n = {n}")));
        }
    }
    Ok(())
}

/// Rows for every `(t, m)` cell of an exponential run.
pub fn expm_rows(cfg: &RunConfig) -> Result<Vec<Row>> {
    let prob = generate(&cfg.problem)?;
    check_sizes(cfg, &prob)?;
    let n = prob.a.n();
    let dense_a = (n <= DENSE_ORACLE_MAX_N).then(|| prob.a.to_dense());
    let mu = log_norm_2(&prob.a)?;
    let b_norm = prob.b.norm_fro();
    let workers = worker_count()?;
    let cells = parallel_map(&cfg.t_list, workers, |&t| -> Result<Vec<Row>> {
        let reference = match &dense_a {
            Some(a) => Some(&expm_dense(&a.scale(t))? * &prob.b),
            None => None,
        };
        let f = StieltjesFunction::Exp { t };
        let eval = |d: &crate::rational::RationalDecomposition, _: Option<&DenseMatrix>| -> Result<Sample> {
            // X_m(0) = B for every m
            let x = if t == 0.0 { prob.b.clone() } else { exp_action(d, t)? };
            let res = ResidualEvaluator::new(d)?.at(t)?;
            let bound = if t > 0.0 { Some(error_bound_with_log_norm(mu, d, t, DEFAULT_BOUND_SAMPLES)?) } else { None };
            let residual = match cfg.norm {
                Norm::Inf => res.norm_inf,
                Norm::Two => res.norm_2,
            };
            Ok(Sample { x, residual: Some(residual), bound, measure: res.norm_2 / b_norm })
        };
        sweep(cfg, &prob, &f, Some(t), reference.as_ref(), eval, true)
    });
    let mut rows = Vec::new();
    for cell in cells {
        rows.extend(cell?);
    }
    Ok(rows)
}

/// Rows for a Stieltjes (or `f3 = exp`) run.
pub fn funm_rows(cfg: &RunConfig) -> Result<Vec<Row>> {
    let prob = generate(&cfg.problem)?;
    check_sizes(cfg, &prob)?;
    let n = prob.a.n();
    let limit = if prob.a.is_symmetric() { SYMMETRIC_ORACLE_MAX_N } else { DENSE_ORACLE_MAX_N };
    let reference = if n <= limit { Some(&funm_dense(&prob.a.to_dense(), &cfg.func)? * &prob.b) } else { None };
    let f = cfg.func;
    let eval = |d: &crate::rational::RationalDecomposition, prev: Option<&DenseMatrix>| -> Result<Sample> {
        let x = stieltjes_action(d, &f)?;
        let measure = match prev {
            Some(p) => (&x - p).norm_fro() / x.norm_fro().max(f64::MIN_POSITIVE),
            None => f64::INFINITY,
        };
        Ok(Sample { x, residual: None, bound: None, measure })
    };
    sweep(cfg, &prob, &f, None, reference.as_ref(), eval, false)
}

fn stem(cfg: &RunConfig) -> String {
    match &cfg.problem.kind {
        ProblemKind::FromFile { path } => {
            path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "file".into())
        }
        ProblemKind::Fdm { n0: size }
        | ProblemKind::Poisson { n0: size }
        | ProblemKind::Laplacian { n0: size }
        | ProblemKind::Tridiag121 { n: size }
        | ProblemKind::BlockDiag2x2 { n: size }
        | ProblemKind::DiagLog { n: size } => format!("{}_{size}", cfg.problem.kind.name()),
    }
}

pub fn cmd_expm(cfg: &RunConfig) -> Result<PathBuf> {
    let rows = expm_rows(cfg)?;
    let path = cfg.out.join(format!("expm_{}.csv", stem(cfg)));
    write_atomic(&path, render_csv(&rows).as_bytes())?;
    Ok(path)
}

pub fn cmd_funm(cfg: &RunConfig) -> Result<PathBuf> {
    let rows = funm_rows(cfg)?;
    let tag = match cfg.func {
        StieltjesFunction::InvPower { .. } => "f1",
        StieltjesFunction::Log1pOverX => "f2",
        StieltjesFunction::Exp { .. } => "f3",
    };
    let path = cfg.out.join(format!("funm_{tag}_{}.csv", stem(cfg)));
    write_atomic(&path, render_csv(&rows).as_bytes())?;
    Ok(path)
}

/// Writes `<stem>.mtx` and `<stem>_B.mtx`.
pub fn cmd_gen(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let prob = generate(&cfg.problem)?;
    let base = stem(cfg);
    let a_path = cfg.out.join(format!("{base}.mtx"));
    let b_path = cfg.out.join(format!("{base}_B.mtx"));
    let mut a_bytes = Vec::new();
    write_matrix_market(&prob.a, &mut a_bytes)?;
    let mut b_bytes = Vec::new();
    write_dense_matrix_market(&prob.b, &mut b_bytes)?;
    write_atomic(&a_path, &a_bytes)?;
    write_atomic(&b_path, &b_bytes)?;
    Ok(vec![a_path, b_path])
}

/// 2 for problems with the input, 1 for failures of the computation or I/O.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidConfig(_)
        | Error::InvalidSpec(_)
        | Error::Parse { .. }
        | Error::UnsupportedFormat(_)
        | Error::ZeroShift
        | Error::DimensionMismatch(_) => 2,
        _ => 1,
    }
}

fn execute(cli: &Cli) -> Result<Vec<PathBuf>> {
    match &cli.command {
        Command::Expm(flags) => cmd_expm(&RunConfig::from_flags(flags)?).map(|p| vec![p]),
        Command::Funm(flags) => cmd_funm(&RunConfig::from_flags(flags)?).map(|p| vec![p]),
        Command::Gen(flags) => cmd_gen(&RunConfig::from_flags(flags)?),
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
