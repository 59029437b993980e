//! Dense `d × d` linear algebra: storage types, matrix exponentials and the
//! affine flow of `u' = q u + f`.

use std::fmt;
use std::ops::{Deref, DerefMut, Index, IndexMut};

use crate::error::{Error, Result};

/// Numerical tolerances shared by checks across the crate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    /// Row sums of `e^{tq}` must lie within this distance of one.
    pub stochastic_row_sum: f64,
    /// Entries of `e^{tq}` may dip this far below zero.
    pub stochastic_nonnegativity: f64,
    /// Allowed defect of `e^{(s+t)q} = e^{sq} e^{tq}`.
    pub semigroup: f64,
    /// Row-sum tolerance when validating rate matrices, relative to the row scale.
    pub q_row_sum: f64,
    /// Slack for the positive maximum principle.
    pub pmp: f64,
}

impl Tolerances {
    pub const DEFAULT: Tolerances = Tolerances {
        stochastic_row_sum: 1e-10,
        stochastic_nonnegativity: 1e-12,
        semigroup: 1e-9,
        q_row_sum: 1e-12,
        pmp: 1e-12,
    };
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::DEFAULT
    }
}

/// A real vector indexed by the states of the chain.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn new(values: Vec<f64>) -> Self {
        Vector(values)
    }

    /// Like [`Vector::new`] but rejects NaN and infinite entries.
    pub fn try_new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: format!("vector entry {i}"),
            });
        }
        Ok(Vector(values))
    }

    pub fn zeros(dim: usize) -> Self {
        Vector(vec![0.0; dim])
    }

    pub fn constant(dim: usize, value: f64) -> Self {
        Vector(vec![value; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    /// `max_i |u_i|`
    pub fn norm_inf(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs_diff(&self, other: &Vector) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.0
            .iter()
            .zip(&other.0)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn add_scalar(&self, alpha: f64) -> Vector {
        Vector(self.0.iter().map(|v| v + alpha).collect())
    }

    pub fn scale(&self, c: f64) -> Vector {
        Vector(self.0.iter().map(|v| c * v).collect())
    }

    /// `self + c · other`
    pub fn axpy(&self, c: f64, other: &Vector) -> Vector {
        debug_assert_eq!(self.dim(), other.dim());
        Vector(self.0.iter().zip(&other.0).map(|(a, b)| a + c * b).collect())
    }

    pub(crate) fn check_dim(&self, expected: usize) -> Result<()> {
        if self.dim() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: self.dim(),
            });
        }
        Ok(())
    }
}

impl From<Vec<f64>> for Vector {
    fn from(values: Vec<f64>) -> Self {
        Vector(values)
    }
}

impl Deref for Vector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for Vector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

/// A square matrix stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    dim: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(dim: usize) -> Self {
        Matrix {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Matrix::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Builds a matrix from row-major data of length `dim * dim`.
    pub fn from_row_major(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("matrix dimension must be positive".into()));
        }
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: data.len(),
            });
        }
        Ok(Matrix { dim, data })
    }

    /// Builds a matrix from a list of rows; every row must have as many
    /// entries as there are rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Matrix::from_row_major(dim, data)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub(crate) fn check_finite(&self, what: &str) -> Result<()> {
        match self.data.iter().position(|v| !v.is_finite()) {
            None => Ok(()),
            Some(p) => Err(Error::NonFinite {
                context: format!("{what} entry ({}, {})", p / self.dim, p % self.dim),
            }),
        }
    }

    pub fn scale(&self, c: f64) -> Matrix {
        Matrix {
            dim: self.dim,
            data: self.data.iter().map(|v| c * v).collect(),
        }
    }

    /// `self + c · other`
    pub fn add_scaled(&self, c: f64, other: &Matrix) -> Matrix {
        assert_eq!(self.dim, other.dim, "matrix dimensions differ");
        Matrix {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + c * b).collect(),
        }
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.dim, other.dim, "matrix dimensions differ");
        let d = self.dim;
        let mut out = vec![0.0; d * d];
        for i in 0..d {
            let out_row = &mut out[i * d..(i + 1) * d];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (o, b) in out_row.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        Matrix { dim: d, data: out }
    }

    pub fn mul_vec(&self, u: &[f64]) -> Vector {
        assert_eq!(self.dim, u.len(), "matrix/vector dimensions differ");
        Vector((0..self.dim).map(|i| row_dot(self.row(i), u)).collect())
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!(self.dim, other.dim, "matrix dimensions differ");
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn row_sums(&self) -> Vector {
        Vector((0..self.dim).map(|i| self.row(i).iter().sum()).collect())
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.dim + j]
    }
}

impl fmt::Display for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.dim {
            let row: Vec<String> = self.row(i).iter().map(|v| format!("{v}")).collect();
            writeln!(f, "{}", row.join(" "))?;
        }
        Ok(())
    }
}

#[inline]
pub(crate) fn row_dot(row: &[f64], u: &[f64]) -> f64 {
    row.iter().zip(u).map(|(a, b)| a * b).sum()
}

/// Maximum absolute row sum, the operator norm induced by `‖·‖_∞`.
pub fn op_norm_inf(a: &Matrix) -> f64 {
    (0..a.dim())
        .map(|i| a.row(i).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// How `e^{hq}` is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum ExpMethod {
    /// Scaling and squaring with a truncated Taylor series.
    #[default]
    ScalingSquaring,
    /// `(I + (h/k) q)^k`.
    EulerProduct(u64),
}

// Scaled argument norm and Taylor degree: 0.5^15 / 15! < 3e-17.
const TAYLOR_NORM_BOUND: f64 = 0.5;
const TAYLOR_DEGREE: u32 = 14;

/// `e^{ta}` by scaling and squaring.
pub fn mat_exp(a: &Matrix, t: f64) -> Result<Matrix> {
    a.check_finite("matrix")?;
    check_time(t)?;
    let b = a.scale(t);
    let norm = op_norm_inf(&b);
    let squarings = if norm > TAYLOR_NORM_BOUND {
        (norm / TAYLOR_NORM_BOUND).log2().ceil() as i32
    } else {
        0
    };
    let b = b.scale(0.5f64.powi(squarings));

    // Horner: I + b(I + b/2(I + b/3(...)))
    let d = a.dim();
    let mut acc = Matrix::identity(d);
    for j in (1..=TAYLOR_DEGREE).rev() {
        let mut next = b.matmul(&acc).scale(1.0 / j as f64);
        for i in 0..d {
            next[(i, i)] += 1.0;
        }
        acc = next;
    }
    for _ in 0..squarings {
        acc = acc.matmul(&acc);
    }
    Ok(acc)
}

/// `(I + (h/k) a)^k` by binary powering.
pub fn euler_product_exp(a: &Matrix, h: f64, k: u64) -> Result<Matrix> {
    a.check_finite("matrix")?;
    check_time(h)?;
    if k == 0 {
        return Err(Error::InvalidParameter("euler product needs k >= 1".into()));
    }
    let d = a.dim();
    let mut base = a.scale(h / k as f64);
    for i in 0..d {
        base[(i, i)] += 1.0;
    }
    let mut result: Option<Matrix> = None;
    let mut k = k;
    loop {
        if k & 1 == 1 {
            result = Some(match result {
                None => base.clone(),
                Some(r) => r.matmul(&base),
            });
        }
        k >>= 1;
        if k == 0 {
            break;
        }
        base = base.matmul(&base);
    }
    Ok(result.expect("k >= 1"))
}

pub fn mat_exp_with(a: &Matrix, t: f64, method: ExpMethod) -> Result<Matrix> {
    match method {
        ExpMethod::ScalingSquaring => mat_exp(a, t),
        ExpMethod::EulerProduct(k) => euler_product_exp(a, t, k),
    }
}

fn check_time(t: f64) -> Result<()> {
    if !t.is_finite() || t < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "time must be finite and nonnegative, got {t}"
        )));
    }
    Ok(())
}

/// The affine map `u ↦ M u + c` with `M = e^{hq}` and `c = ∫_0^h e^{sq} f ds`.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineFlow {
    pub linear: Matrix,
    pub offset: Vector,
}

impl AffineFlow {
    pub fn apply(&self, u: &[f64]) -> Vector {
        let mut out = self.linear.mul_vec(u);
        for (o, c) in out.iter_mut().zip(self.offset.iter()) {
            *o += c;
        }
        out
    }

    /// Row `i` of the flow applied to `u`.
    #[inline]
    pub fn apply_row(&self, i: usize, u: &[f64]) -> f64 {
        row_dot(self.linear.row(i), u) + self.offset[i]
    }

    /// Whether the linear part is a stochastic matrix within `tol`.
    pub fn is_stochastic(&self, tol: &Tolerances) -> bool {
        let d = self.linear.dim();
        (0..d).all(|i| {
            let row = self.linear.row(i);
            row.iter().all(|&v| v >= -tol.stochastic_nonnegativity)
                && (row.iter().sum::<f64>() - 1.0).abs() <= tol.stochastic_row_sum
        })
    }
}

/// Affine flow of `u' = q u + f` over time `h`, from the exponential of the
/// augmented block matrix `[[q, f], [0, 0]]`.
pub fn affine_flow(q: &Matrix, f: &Vector, h: f64) -> Result<AffineFlow> {
    affine_flow_with(q, f, h, ExpMethod::ScalingSquaring)
}

/// [`affine_flow`] with a selectable exponential. With
/// [`ExpMethod::EulerProduct`] the offset is the matching explicit Euler
/// quadrature of the integral term.
pub fn affine_flow_with(q: &Matrix, f: &Vector, h: f64, method: ExpMethod) -> Result<AffineFlow> {
    let d = q.dim();
    f.check_dim(d)?;
    q.check_finite("matrix")?;
    if !f.is_finite() {
        return Err(Error::NonFinite {
            context: "flow forcing vector".into(),
        });
    }
    if f.iter().all(|&v| v == 0.0) {
        return Ok(AffineFlow {
            linear: mat_exp_with(q, h, method)?,
            offset: Vector::zeros(d),
        });
    }
    let mut aug = Matrix::zeros(d + 1);
    for i in 0..d {
        for j in 0..d {
            aug[(i, j)] = q[(i, j)];
        }
        aug[(i, d)] = f[i];
    }
    let e = mat_exp_with(&aug, h, method)?;
    let mut linear = Matrix::zeros(d);
    for i in 0..d {
        for j in 0..d {
            linear[(i, j)] = e[(i, j)];
        }
    }
    let offset = Vector((0..d).map(|i| e[(i, d)]).collect());
    Ok(AffineFlow { linear, offset })
}
