use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use ctmc_envelope_cli::csv::parse_columns;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ctmc-envelope")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn column<'a>(header: &[String], cols: &'a [Vec<f64>], name: &str) -> &'a [f64] {
    let idx = header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
    &cols[idx]
}

#[test]
fn default_validate_passes() {
    let out = run(&["validate", "--trials", "100"]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    assert!(stdout(&out).contains("all checks passed"));
}

#[test]
fn invalid_endpoint_is_named() {
    // a - 30b has negative off-diagonal entries for δ = 0.1
    let out = run(&["validate", "--lambda-low", "-30", "--trials", "50"]);
    assert_eq!(code(&out), 1);
    let text = stdout(&out);
    let line = text.lines().find(|l| l.contains("lambda-low")).unwrap();
    assert!(line.contains("FAIL"), "{line}");
}

#[test]
fn config_without_grid_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("exp.conf");
    fs::write(&path, "d = 101\nt = 1\n").unwrap();
    let out = run(&["price", "--config", path.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("delta"));
}

#[test]
fn unreadable_inputs_are_usage_errors() {
    assert_eq!(code(&run(&["price", "--q0", "file:/nonexistent/q.txt"])), 2);
    assert_eq!(code(&run(&["price", "--method", "simpson"])), 2);
    assert_eq!(code(&run(&["price", "--bogus"])), 2);
}

#[test]
fn mismatched_matrix_is_a_domain_error() {
    let out = run(&["price", "--q", "drift:11:0.1"]);
    assert_eq!(code(&out), 1);
}

fn price_columns(args: &[&str]) -> (Vec<String>, Vec<Vec<f64>>) {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("price.csv");
    let mut all = vec!["price", "--out", path.to_str().unwrap()];
    all.extend_from_slice(args);
    let out = run(&all);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    parse_columns(&fs::read_to_string(&path).unwrap()).unwrap()
}

#[test]
fn default_price_has_one_row_per_state() {
    let (header, cols) = price_columns(&["--refs", "-1,0,1"]);
    assert_eq!(header, ["state_index", "x", "payoff", "upper", "lower", "ref_-1", "ref_0", "ref_1"]);
    assert_eq!(cols[0].len(), 101);
    let (upper, lower) = (column(&header, &cols, "upper"), column(&header, &cols, "lower"));
    for i in 0..101 {
        assert!((0.0..=1.0).contains(&upper[i]) && (0.0..=1.0).contains(&lower[i]));
        assert!(lower[i] <= upper[i]);
        for r in ["ref_-1", "ref_0", "ref_1"] {
            let v = column(&header, &cols, r)[i];
            assert!(lower[i] - 1e-6 <= v && v <= upper[i] + 1e-6);
        }
    }
}

#[test]
fn zero_horizon_returns_payoff() {
    let (header, cols) = price_columns(&["--t", "0"]);
    let payoff = column(&header, &cols, "payoff");
    assert_eq!(column(&header, &cols, "upper"), payoff);
    assert_eq!(column(&header, &cols, "lower"), payoff);
}

#[test]
fn nisio_bull_spread() {
    let (header, cols) = price_columns(&[
        "--q0", "zero", "--q", "laplacian", "--lambda-low", "0.5", "--lambda-high", "1.5",
        "--payoff", "bull", "--method", "nisio", "--n", "8", "--k", "0",
    ]);
    let (upper, lower) = (column(&header, &cols, "upper"), column(&header, &cols, "lower"));
    assert!(lower.iter().zip(upper).all(|(l, u)| l <= u));
    // payoff capped at L - K = 1
    assert!(upper.iter().all(|&u| (0.0..=1.0 + 1e-9).contains(&u)));
    assert!(upper[100] > 0.9);
}

#[test]
fn compare_exit_status_follows_tolerance() {
    assert_eq!(code(&run(&["compare"])), 0);
    assert_eq!(code(&run(&["compare", "--tol", "0"])), 1);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cmp.csv");
    let out = run(&[
        "compare", "--method", "nisio", "--n", "6", "--k", "4", "--against", "nisio:6:4", "--tol", "0",
        "--out", path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let (header, cols) = parse_columns(&fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(header.len(), 9);
    assert!(column(&header, &cols, "diff_upper").iter().all(|&v| v == 0.0));
    assert!(column(&header, &cols, "diff_lower").iter().all(|&v| v == 0.0));
}

fn write_matrix(path: &Path, rows: &[[f64; 2]]) {
    let body: Vec<String> = rows.iter().map(|r| format!("{} {}", r[0], r[1])).collect();
    fs::write(path, format!("2\n{}\n", body.join("\n"))).unwrap();
}

fn expm(args: &[&str]) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut all = vec!["expm"];
    all.extend_from_slice(args);
    let out = run(&all);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    parse_columns(&stdout(&out)).unwrap()
}

#[test]
fn expm_of_two_state_chain() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("q.txt");
    write_matrix(&path, &[[-1.0, 1.0], [1.0, -1.0]]);
    let spec = format!("file:{}", path.display());

    let (header, cols) = expm(&["--matrix", &spec, "--t", "0.5"]);
    assert_eq!(header, ["row", "c0", "c1", "row_sum"]);
    let diag = 0.5 * (1.0 + (-1.0f64).exp());
    assert!((cols[1][0] - diag).abs() < 1e-14);
    assert!((cols[2][0] - (1.0 - diag)).abs() < 1e-14);
    assert!(cols[3].iter().all(|&s| (s - 1.0).abs() < 1e-14));

    let (_, id) = expm(&["--matrix", &spec, "--t", "0"]);
    assert_eq!((id[1].clone(), id[2].clone()), (vec![1.0, 0.0], vec![0.0, 1.0]));

    let (_, euler) = expm(&["--matrix", &spec, "--t", "0.5", "--k", "1"]);
    assert_eq!((euler[1].clone(), euler[2].clone()), (vec![0.5, 0.5], vec![0.5, 0.5]));
}

#[test]
fn expm_of_builtin_matrix_is_stochastic() {
    let (header, cols) = expm(&["--matrix", "laplacian:11:1", "--t", "2"]);
    assert_eq!(header.len(), 13);
    assert!(cols[12].iter().all(|&s| (s - 1.0).abs() < 1e-12));
    assert!(cols[1..12].iter().flatten().all(|&v| v >= 0.0));
}

#[test]
fn config_file_matches_flags() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("vol.conf");
    fs::write(
        &conf,
        "# volatility uncertainty\nd = 101\ndelta = 0.1\nq0 = zero\nq = laplacian\nlambda_low = 0.5\nlambda_high = 1.5\npayoff = bull\n",
    )
    .unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    let from_file = run(&["price", "--config", conf.to_str().unwrap(), "--out", a.to_str().unwrap()]);
    let from_flags = run(&[
        "price", "--q0", "zero", "--q", "laplacian", "--lambda-low", "0.5", "--lambda-high", "1.5",
        "--payoff", "bull", "--out", b.to_str().unwrap(),
    ]);
    assert_eq!((code(&from_file), code(&from_flags)), (0, 0));
    assert_eq!(fs::read(a).unwrap(), fs::read(b).unwrap());
}

#[test]
fn stdout_csv_matches_file_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.csv");
    let to_file = run(&["price", "--steps", "200", "--out", path.to_str().unwrap()]);
    let to_stdout = run(&["price", "--steps", "200"]);
    assert_eq!(code(&to_file), 0);
    assert_eq!(fs::read_to_string(path).unwrap(), stdout(&to_stdout));
    assert!(String::from_utf8_lossy(&to_stdout.stderr).contains("wall time"));
}
