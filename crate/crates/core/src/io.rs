//! Plain-text matrices and vectors: a first line holding the dimension `d`,
//! followed by `d` rows of `d` whitespace-separated numbers (matrices) or
//! `d` whitespace-separated numbers on any number of lines (vectors).
//! Blank lines and lines starting with `#` are ignored.

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_number(line: usize, token: &str) -> Result<f64> {
    let v: f64 = token.parse().map_err(|_| Error::Parse {
        line,
        message: format!("not a number: {token:?}"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            line,
            message: format!("non-finite value {token:?}"),
        });
    }
    Ok(v)
}

fn parse_dim<'a>(lines: &mut impl Iterator<Item = (usize, &'a str)>) -> Result<usize> {
    let (line, first) = lines.next().ok_or(Error::Parse {
        line: 1,
        message: "empty input".into(),
    })?;
    match first.parse::<usize>() {
        Ok(d) if d > 0 => Ok(d),
        _ => Err(Error::Parse {
            line,
            message: format!("expected a positive dimension, found {first:?}"),
        }),
    }
}

pub fn parse_matrix(text: &str) -> Result<Matrix> {
    let mut lines = content_lines(text);
    let d = parse_dim(&mut lines)?;
    let mut data = Vec::with_capacity(d * d);
    let mut rows = 0;
    for (line, content) in lines {
        if rows == d {
            return Err(Error::Parse {
                line,
                message: format!("more than {d} rows"),
            });
        }
        let row = content
            .split_whitespace()
            .map(|t| parse_number(line, t))
            .collect::<Result<Vec<_>>>()?;
        if row.len() != d {
            return Err(Error::Parse {
                line,
                message: format!("expected {d} entries, found {}", row.len()),
            });
        }
        data.extend(row);
        rows += 1;
    }
    if rows != d {
        return Err(Error::Parse {
            line: text.lines().count(),
            message: format!("expected {d} rows, found {rows}"),
        });
    }
    Matrix::from_row_major(d, data)
}

pub fn parse_vector(text: &str) -> Result<Vector> {
    let mut lines = content_lines(text);
    let d = parse_dim(&mut lines)?;
    let mut values = Vec::with_capacity(d);
    for (line, content) in lines {
        for token in content.split_whitespace() {
            values.push(parse_number(line, token)?);
        }
    }
    if values.len() != d {
        return Err(Error::Parse {
            line: text.lines().count(),
            message: format!("expected {d} values, found {}", values.len()),
        });
    }
    Ok(Vector::new(values))
}

/// Writes `m` in the format read by [`parse_matrix`]; values use Rust's
/// shortest round-trip representation.
pub fn format_matrix(m: &Matrix) -> String {
    let mut out = format!("{}\n", m.dim());
    for i in 0..m.dim() {
        let row: Vec<String> = m.row(i).iter().map(|v| format!("{v:?}")).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}
