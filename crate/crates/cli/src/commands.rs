use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use anyhow::{Context, Result};
use ctmc_envelope::io::{parse_matrix, parse_vector};
use ctmc_envelope::ode::euler_step_ratio;
use ctmc_envelope::{
    build_drift_b, build_laplacian_a, check_pmp, compare_methods, euler_product_exp,
    interval_generator, linear_reference, mat_exp, payoff_bull, payoff_butterfly, price_bounds,
    validate_q_matrix, Direction, ExpMethod, GeneratorFamily, Matrix, Payoff, PriceBounds,
    PricingMethod, QMatrix, StateGrid, Tolerances, Vector,
};

use crate::config::{usage, ExperimentConfig, MatrixSpec, PayoffSpec};
use crate::csv;

/// Digits used when printing matrix exponentials.
pub const EXPM_DIGITS: usize = 15;

/// Builds the raw matrix named by `spec` on the config grid.
pub fn build_matrix(spec: &MatrixSpec, d: usize, delta: f64) -> Result<Matrix> {
    let m = match spec {
        MatrixSpec::Laplacian { d: md, delta: mdelta } => {
            build_laplacian_a(md.unwrap_or(d), mdelta.unwrap_or(delta))?.into_matrix()
        }
        MatrixSpec::Drift { d: md, delta: mdelta } => {
            build_drift_b(md.unwrap_or(d), mdelta.unwrap_or(delta))?.into_matrix()
        }
        MatrixSpec::Zero => Matrix::zeros(d),
        MatrixSpec::File(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| usage(format!("cannot read matrix file {}: {e}", path.display())))?;
            parse_matrix(&text)
                .map_err(|e| usage(format!("invalid matrix file {}: {e}", path.display())))?
        }
    };
    Ok(m)
}

fn grid_matrix(cfg: &ExperimentConfig, spec: &MatrixSpec, name: &str) -> Result<Matrix> {
    let m = build_matrix(spec, cfg.d, cfg.delta)?;
    if m.dim() != cfg.d {
        anyhow::bail!("{name} = {spec} has dimension {} but the grid has d = {}", m.dim(), cfg.d);
    }
    Ok(m)
}

fn rate_matrix(cfg: &ExperimentConfig, spec: &MatrixSpec, name: &str) -> Result<QMatrix> {
    let m = grid_matrix(cfg, spec, name)?;
    validate_q_matrix(&m, Tolerances::DEFAULT.q_row_sum).with_context(|| format!("{name} = {spec}"))
}

pub fn build_family(cfg: &ExperimentConfig) -> Result<(QMatrix, QMatrix, GeneratorFamily)> {
    let q0 = rate_matrix(cfg, &cfg.q0, "q0")?;
    let q = rate_matrix(cfg, &cfg.q, "q")?;
    let fam = interval_generator(&q0, &q, cfg.lambda_low, cfg.lambda_high, Direction::Upper)?;
    Ok((q0, q, fam))
}

pub fn build_payoff(cfg: &ExperimentConfig) -> Result<Payoff> {
    let grid = StateGrid::new(cfg.d, cfg.delta)?;
    let payoff = match &cfg.payoff {
        PayoffSpec::Butterfly => payoff_butterfly(&grid, cfg.strike_k, cfg.strike_l)?,
        PayoffSpec::Bull => payoff_bull(&grid, cfg.strike_k, cfg.strike_l)?,
        PayoffSpec::File(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| usage(format!("cannot read payoff file {}: {e}", path.display())))?;
            let values = parse_vector(&text)
                .map_err(|e| usage(format!("invalid payoff file {}: {e}", path.display())))?;
            Payoff::custom(grid, values)?
        }
    };
    Ok(payoff)
}

fn warn_step_size(fam: &GeneratorFamily, t: f64, method: PricingMethod) {
    let ratio = match method {
        PricingMethod::OdeEuler { steps } | PricingMethod::OdeRk4 { steps } => {
            euler_step_ratio(fam, t, steps)
        }
        PricingMethod::Nisio { n, exp: ExpMethod::EulerProduct(k) } => {
            euler_step_ratio(fam, t, (1usize << n).saturating_mul(k as usize))
        }
        PricingMethod::Nisio { .. } => return,
    };
    if ratio > 1.0 {
        eprintln!(
            "warning: step size times generator norm is {ratio:.3} > 1 for {method}; \
             the explicit scheme is not monotone and may oscillate"
        );
    }
}

fn compute_bounds(cfg: &ExperimentConfig, method: PricingMethod) -> Result<(GeneratorFamily, QMatrix, QMatrix, Payoff, PriceBounds)> {
    let (q0, q, fam) = build_family(cfg)?;
    let payoff = build_payoff(cfg)?;
    warn_step_size(&fam, cfg.t, method);
    let bounds = price_bounds(&fam, &payoff, cfg.t, method)?;
    Ok((fam, q0, q, payoff, bounds))
}

/// Writes `text` to `path`, or to standard output when no path is given.
fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            Ok(stdout.flush()?)
        }
    }
}

/// Summary lines go to stdout unless stdout carries the CSV.
fn report(cfg: &ExperimentConfig, line: &str) {
    if cfg.out.is_some() {
        println!("{line}");
    } else {
        eprintln!("{line}");
    }
}

fn curve_summary(name: &str, v: &Vector) -> String {
    format!("{name:>12}: min {:>14}  max {:>14}", csv::format_sig(v.min(), 9), csv::format_sig(v.max(), 9))
}

pub fn cmd_validate(cfg: &ExperimentConfig) -> Result<bool> {
    let mut rows: Vec<(String, bool, String)> = Vec::new();
    let mut matrices = Vec::new();
    for (name, spec) in [("q0", &cfg.q0), ("q", &cfg.q)] {
        let m = grid_matrix(cfg, spec, name)?;
        let label = format!("{name} = {spec}");
        match validate_q_matrix(&m, Tolerances::DEFAULT.q_row_sum) {
            Ok(_) => rows.push((label, true, String::new())),
            Err(e) => rows.push((label, false, e.to_string())),
        }
        matrices.push(m);
    }
    let mut endpoints = Vec::new();
    for (name, lambda) in [("lambda-low", cfg.lambda_low), ("lambda-high", cfg.lambda_high)] {
        let m = matrices[0].add_scaled(lambda, &matrices[1]);
        let label = format!("q0 + {lambda}·q ({name})");
        match validate_q_matrix(&m, Tolerances::DEFAULT.q_row_sum) {
            Ok(qm) => {
                rows.push((label, true, String::new()));
                endpoints.push(qm);
            }
            Err(e) => rows.push((label, false, e.to_string())),
        }
    }
    if cfg.lambda_low > cfg.lambda_high {
        rows.push((
            "interval ordering".into(),
            false,
            format!("lambda-low {} > lambda-high {}", cfg.lambda_low, cfg.lambda_high),
        ));
    }
    if endpoints.len() == 2 && cfg.lambda_low <= cfg.lambda_high {
        let fam = GeneratorFamily::sublinear(endpoints, Direction::Upper)?;
        for dir in [Direction::Upper, Direction::Lower] {
            let report = check_pmp(&fam.with_direction(dir), cfg.trials, cfg.seed);
            for check in report.checks {
                let detail = match &check.counterexample {
                    Some(c) => format!("{} of {} failed; {c}", check.failures, check.evaluated),
                    None => format!("{} evaluated", check.evaluated),
                };
                rows.push((format!("{dir:?}: {}", check.name), check.passed(), detail));
            }
        }
    } else {
        rows.push(("maximum principle checks".into(), false, "skipped: invalid generator family".into()));
    }

    let width = rows.iter().map(|r| r.0.chars().count()).max().unwrap_or(0);
    for (label, ok, detail) in &rows {
        let pad = width - label.chars().count();
        println!("{label}{}  {}  {detail}", " ".repeat(pad), if *ok { "pass" } else { "FAIL" });
    }
    let all = rows.iter().all(|r| r.1);
    println!("{}", if all { "all checks passed" } else { "validation failed" });
    Ok(all)
}

pub fn cmd_price(cfg: &ExperimentConfig) -> Result<()> {
    let start = Instant::now();
    let method = cfg.pricing_method();
    let (_, q0, q, payoff, bounds) = compute_bounds(cfg, method)?;
    let mut refs = Vec::with_capacity(cfg.refs.len());
    for &lambda in &cfg.refs {
        let qm = validate_q_matrix(
            &q0.as_matrix().add_scaled(lambda, q.as_matrix()),
            Tolerances::DEFAULT.q_row_sum,
        )
        .with_context(|| format!("reference model q0 + {lambda}·q"))?;
        refs.push((lambda, linear_reference(&qm, &payoff, cfg.t)?));
    }
    let text = csv::price_csv(&bounds, &payoff, &refs);
    emit(cfg.out.as_deref(), &text)?;

    report(cfg, &format!("method {method}, t = {}, {} states", cfg.t, cfg.d));
    report(cfg, &curve_summary("payoff", &payoff.values));
    report(cfg, &curve_summary("upper", &bounds.upper));
    report(cfg, &curve_summary("lower", &bounds.lower));
    for (lambda, v) in &refs {
        report(cfg, &curve_summary(&csv::ref_label(*lambda), v));
    }
    report(cfg, &format!("wall time: {:.3} s", start.elapsed().as_secs_f64()));
    Ok(())
}

pub fn cmd_compare(cfg: &ExperimentConfig) -> Result<bool> {
    let start = Instant::now();
    let first = cfg.pricing_method();
    let (fam, _, _, payoff, b1) = compute_bounds(cfg, first)?;
    warn_step_size(&fam, cfg.t, cfg.against);
    let b2 = price_bounds(&fam, &payoff, cfg.t, cfg.against)?;
    let cmp = compare_methods(&b1, &b2)?;
    emit(cfg.out.as_deref(), &csv::compare_csv(&cmp, &payoff))?;

    let ok = cmp.max_abs_diff_upper <= cfg.tol && cmp.max_abs_diff_lower <= cfg.tol;
    report(cfg, &format!("method 1: {first}"));
    report(cfg, &format!("method 2: {}", cfg.against));
    report(cfg, &format!("max |upper_1 - upper_2| = {}", csv::format_sig(cmp.max_abs_diff_upper, 9)));
    report(cfg, &format!("max |lower_1 - lower_2| = {}", csv::format_sig(cmp.max_abs_diff_lower, 9)));
    report(cfg, &format!("tolerance {}: {}", cfg.tol, if ok { "pass" } else { "FAIL" }));
    report(cfg, &format!("wall time: {:.3} s", start.elapsed().as_secs_f64()));
    Ok(ok)
}

pub struct ExpmRequest {
    pub matrix: MatrixSpec,
    pub d: usize,
    pub delta: f64,
    pub t: f64,
    pub k: Option<u64>,
    pub out: Option<std::path::PathBuf>,
}

pub fn cmd_expm(req: &ExpmRequest) -> Result<()> {
    let m = build_matrix(&req.matrix, req.d, req.delta)?;
    if !(req.t.is_finite() && req.t >= 0.0) {
        return Err(usage(format!("t must be finite and nonnegative, got {}", req.t)));
    }
    let e = match req.k {
        None => mat_exp(&m, req.t)?,
        Some(k) => euler_product_exp(&m, req.t, k).map_err(|e| usage(e.to_string()))?,
    };
    emit(req.out.as_deref(), &csv::matrix_csv(&e, EXPM_DIGITS))
}
