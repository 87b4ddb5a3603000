use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use krylov_funm::problems::{generate_matrix, ProblemKind};
use krylov_funm::sparse::read_matrix_market;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_krylov-funm")).args(args).output().expect("binary runs")
}

struct Csv {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Csv {
    fn read(path: &Path) -> Self {
        let text = fs::read_to_string(path).unwrap();
        let mut lines = text.lines();
        let header = lines.next().unwrap().split(',').map(String::from).collect();
        let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
        Self { header, rows }
    }

    fn col(&self, name: &str) -> Vec<Option<f64>> {
        let i = self.header.iter().position(|h| h == name).unwrap();
        self.rows.iter().map(|r| r[i].parse().ok()).collect()
    }
}

fn out_dir(dir: &tempfile::TempDir) -> String {
    dir.path().to_str().unwrap().to_string()
}

fn files(dir: &Path) -> Vec<PathBuf> {
    fs::read_dir(dir).map(|d| d.map(|e| e.unwrap().path()).collect()).unwrap_or_default()
}

#[test]
fn header_names_the_columns() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["expm", "--problem", "poisson", "--n0", "4", "--m", "1..3", "--out", &out_dir(&dir)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = Csv::read(&dir.path().join("expm_poisson_4.csv"));
    for name in ["m", "t", "error", "residual", "bound", "poles_used", "wall_ms"] {
        assert!(csv.header.iter().any(|h| h == name), "missing {name}");
    }
    assert_eq!(csv.rows.len(), 3);
}

#[test]
fn poisson_error_decreases_over_m() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["expm", "--problem", "poisson", "--n0", "8", "--m", "2..14", "--t", "0.5,1", "--out", &out_dir(&dir)]);
    assert!(o.status.success());
    let csv = Csv::read(&dir.path().join("expm_poisson_8.csv"));
    let m = csv.col("m");
    for k in 2..=14 {
        assert_eq!(m.iter().filter(|&&x| x == Some(k as f64)).count(), 2);
    }
    let t = csv.col("t");
    let err = csv.col("error");
    let at_one: Vec<f64> = (0..err.len()).filter(|&i| t[i] == Some(1.0)).map(|i| err[i].unwrap()).collect();
    assert_eq!(at_one.len(), 13);
    assert!(at_one[12] < 1e-3 * at_one[0], "{at_one:?}");
}

#[test]
fn zero_time_row_has_zero_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["expm", "--problem", "fdm", "--n0", "6", "--p", "2", "--t", "0,1", "--m", "3", "--out", &out_dir(&dir)]);
    assert!(o.status.success());
    let csv = Csv::read(&dir.path().join("expm_fdm_6.csv"));
    assert_eq!(csv.col("error")[0], Some(0.0));
    assert!(csv.col("error")[1].unwrap() > 0.0);
}

#[test]
fn tridiag_f2_reaches_1e8() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["funm", "--problem", "tridiag121", "--n", "500", "--func", "f2", "--m", "10,20,30", "--out", &out_dir(&dir)]);
    assert!(o.status.success());
    let err: Vec<f64> = Csv::read(&dir.path().join("funm_f2_tridiag121_500.csv")).col("error").into_iter().map(Option::unwrap).collect();
    assert!(err[0] > err[1] && err[1] > err[2], "{err:?}");
    assert!(err[2] <= 1e-8, "{err:?}");
}

#[test]
fn full_space_funm_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["funm", "--problem", "tridiag121", "--n", "36", "--p", "2", "--m", "18", "--func", "f1:0.5", "--out", &out_dir(&dir)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let err = Csv::read(&dir.path().join("funm_f1_tridiag121_36.csv")).col("error");
    assert!(err[0].unwrap() <= 1e-8, "{err:?}");
}

#[test]
fn f1_on_a_negative_definite_matrix_fails_numerically() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["funm", "--problem", "poisson", "--n0", "6", "--func", "f1:0.5", "--m", "3", "--out", &out_dir(&dir)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("singular set"));
    assert!(files(dir.path()).is_empty(), "no partial output");
}

#[test]
fn validation_failures_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = out_dir(&dir);
    let cases: [&[&str]; 7] = [
        &["expm", "--n0", "4"],
        &["expm", "--problem", "poisson", "--n0", "4", "--poles", "-1,0"],
        &["expm", "--problem", "poisson", "--n0", "4", "--norm", "fro"],
        &["expm", "--problem", "tridiag121", "--n", "6", "--p", "2", "--m", "4"],
        &["expm", "--problem", "poisson", "--n0", "4", "--t", ""],
        &["funm", "--problem", "poisson", "--n0", "4", "--func", "f1:2"],
        &["expm", "--config", "/nonexistent/run.conf"],
    ];
    for args in cases {
        let mut full = args.to_vec();
        full.extend(["--out", &out]);
        let o = run(&full);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(!o.stderr.is_empty());
    }
    assert_eq!(run(&["expm", "--bogus"]).status.code(), Some(2));
    assert!(files(dir.path()).is_empty());
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("run.conf");
    fs::write(&conf, "# diaglog sweep\nproblem = diaglog\nn = 40\nm = 1..4\nt = 1\nout = ignored\n").unwrap();
    let o = run(&["expm", "--config", conf.to_str().unwrap(), "--t", "0.5", "--out", &out_dir(&dir)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = Csv::read(&dir.path().join("expm_diaglog_40.csv"));
    assert!(csv.col("t").iter().all(|&t| t == Some(0.5)));
    assert_eq!(csv.rows.len(), 4);
}

#[test]
fn timing_is_opt_in() {
    let dir = tempfile::tempdir().unwrap();
    let base = ["funm", "--problem", "tridiag121", "--n", "50", "--func", "f2", "--m", "1..3", "--out"];
    let mut args = base.to_vec();
    let out = out_dir(&dir);
    args.push(&out);
    assert!(run(&args).status.success());
    let path = dir.path().join("funm_f2_tridiag121_50.csv");
    assert!(Csv::read(&path).col("wall_ms").iter().all(Option::is_none));
    args.push("--timing");
    assert!(run(&args).status.success());
    assert!(Csv::read(&path).col("wall_ms").iter().all(|w| w.is_some_and(|x| x >= 0.0)));
}

#[test]
fn gen_writes_matrix_market() {
    let dir = tempfile::tempdir().unwrap();
    let out = out_dir(&dir);
    assert!(run(&["gen", "--problem", "tridiag121", "--n", "3", "--out", &out]).status.success());
    let a = read_matrix_market(dir.path().join("tridiag121_3.mtx")).unwrap();
    assert_eq!((a.n(), a.nnz()), (3, 7));

    assert!(run(&["gen", "--problem", "poisson", "--n0", "4", "--out", &out]).status.success());
    let a = read_matrix_market(dir.path().join("poisson_4.mtx")).unwrap();
    assert_eq!((a.n(), a.nnz()), (16, 64));
    assert!(a.is_symmetric());
    let direct = generate_matrix(&ProblemKind::Poisson { n0: 4 }).unwrap();
    assert_eq!(a.to_dense().to_row_major(), direct.to_dense().to_row_major());
}

#[test]
fn generated_files_reproduce_the_generator_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = out_dir(&dir);
    assert!(run(&["gen", "--problem", "poisson", "--n0", "5", "--p", "2", "--seed", "9", "--out", &out]).status.success());
    let file = format!("file:{}", dir.path().join("poisson_5.mtx").display());
    let common = ["--p", "2", "--seed", "9", "--m", "1..4", "--t", "0.1", "--out"];
    let mut a = vec!["expm", "--problem", "poisson", "--n0", "5"];
    a.extend(common);
    a.push(&out);
    let mut b = vec!["expm", "--problem", &file];
    b.extend(common);
    b.push(&out);
    let csv = dir.path().join("expm_poisson_5.csv");
    assert!(run(&a).status.success());
    let x = fs::read(&csv).unwrap();
    fs::remove_file(&csv).unwrap();
    let o = run(&b);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(x, fs::read(&csv).unwrap());
    assert_eq!(Csv::read(&csv).rows.len(), 4);
}

#[test]
fn worker_count_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for threads in ["1", "3"] {
        let out = dir.path().join(threads);
        let o = Command::new(env!("CARGO_BIN_EXE_krylov-funm"))
            .args(["expm", "--problem", "fdm", "--n0", "7", "--p", "2", "--t", "0.01,0.1,1", "--m", "1..6"])
            .args(["--out", out.to_str().unwrap()])
            .env("KRYLOV_FUNM_THREADS", threads)
            .output()
            .unwrap();
        assert!(o.status.success());
        outputs.push(fs::read(out.join("expm_fdm_7.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    let bad = Command::new(env!("CARGO_BIN_EXE_krylov-funm"))
        .args(["expm", "--problem", "fdm", "--n0", "4", "--out", &out_dir(&dir)])
        .env("KRYLOV_FUNM_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}
