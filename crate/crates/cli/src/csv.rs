//! Plot-ready CSV output.

use std::fmt::Write as _;

use ctmc_envelope::{ComparisonReport, Payoff, PriceBounds, StateGrid, Vector};

/// Significant digits for price columns.
pub const PRICE_DIGITS: usize = 9;

/// Formats `v` with `digits` significant digits, `%g` style: fixed notation
/// for decimal exponents in `-4..digits`, scientific otherwise, trailing
/// zeros removed.
pub fn format_sig(v: f64, digits: usize) -> String {
    assert!(digits >= 1);
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let sci = format!("{:.*e}", digits - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if (-4..digits as i32).contains(&exp) {
        let decimals = (digits as i32 - 1 - exp) as usize;
        trim_fraction(&format!("{v:.decimals$}")).to_string()
    } else {
        format!("{}e{exp}", trim_fraction(mantissa))
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Column label for a reference model, e.g. `ref_-1` or `ref_0.5`.
pub fn ref_label(lambda: f64) -> String {
    format!("ref_{lambda}")
}

fn push_row(out: &mut String, cells: &[String]) {
    out.push_str(&cells.join(","));
    out.push('\n');
}

fn grid_cells(grid: &StateGrid, payoff: &Payoff, i: usize) -> Vec<String> {
    vec![
        i.to_string(),
        format_sig(grid.x(i), PRICE_DIGITS),
        format_sig(payoff.values[i], PRICE_DIGITS),
    ]
}

/// `state_index,x,payoff,upper,lower[,ref_<λ>...]`
pub fn price_csv(bounds: &PriceBounds, payoff: &Payoff, refs: &[(f64, Vector)]) -> String {
    let mut out = String::new();
    let mut header: Vec<String> = ["state_index", "x", "payoff", "upper", "lower"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend(refs.iter().map(|(l, _)| ref_label(*l)));
    push_row(&mut out, &header);
    for i in 0..bounds.grid.dim() {
        let mut cells = grid_cells(&bounds.grid, payoff, i);
        cells.push(format_sig(bounds.upper[i], PRICE_DIGITS));
        cells.push(format_sig(bounds.lower[i], PRICE_DIGITS));
        cells.extend(refs.iter().map(|(_, v)| format_sig(v[i], PRICE_DIGITS)));
        push_row(&mut out, &cells);
    }
    out
}

/// Both methods' bounds side by side plus absolute differences.
pub fn compare_csv(report: &ComparisonReport, payoff: &Payoff) -> String {
    let mut out = String::new();
    let header = [
        "state_index", "x", "payoff", "upper_1", "lower_1", "upper_2", "lower_2", "diff_upper",
        "diff_lower",
    ];
    push_row(&mut out, &header.map(String::from));
    let grid = &report.first.grid;
    for i in 0..grid.dim() {
        let mut cells = grid_cells(grid, payoff, i);
        for v in [
            &report.first.upper,
            &report.first.lower,
            &report.second.upper,
            &report.second.lower,
            &report.diff_upper,
            &report.diff_lower,
        ] {
            cells.push(format_sig(v[i], PRICE_DIGITS));
        }
        push_row(&mut out, &cells);
    }
    out
}

/// `row,c0,...,c{d-1},row_sum`
pub fn matrix_csv(m: &ctmc_envelope::Matrix, digits: usize) -> String {
    let mut out = String::from("row");
    for j in 0..m.dim() {
        let _ = write!(out, ",c{j}");
    }
    out.push_str(",row_sum\n");
    for i in 0..m.dim() {
        let mut cells = vec![i.to_string()];
        cells.extend(m.row(i).iter().map(|&v| format_sig(v, digits)));
        cells.push(format_sig(m.row(i).iter().sum(), digits));
        push_row(&mut out, &cells);
    }
    out
}

/// Reads a CSV written by this module into its header and numeric columns.
pub fn parse_columns(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>), String> {
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .ok_or("empty csv")?
        .split(',')
        .map(String::from)
        .collect();
    let mut columns = vec![Vec::new(); header.len()];
    for (n, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != header.len() {
            return Err(format!("row {} has {} cells", n + 1, cells.len()));
        }
        for (col, cell) in columns.iter_mut().zip(cells) {
            col.push(cell.parse().map_err(|_| format!("row {}: bad number {cell:?}", n + 1))?);
        }
    }
    Ok((header, columns))
}
