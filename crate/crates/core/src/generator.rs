//! Rate matrices, finite dual families of convex Q-operators and the
//! discretization matrices used for drift and volatility uncertainty.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{op_norm_inf, row_dot, Matrix, Tolerances, Vector};

/// One violated rate-matrix condition.
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    PositiveDiagonal { row: usize, value: f64 },
    NegativeOffDiagonal { row: usize, col: usize, value: f64 },
    NonZeroRowSum { row: usize, sum: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Violation::PositiveDiagonal { row, value } => {
                write!(f, "diagonal entry ({row}, {row}) = {value} is positive")
            }
            Violation::NegativeOffDiagonal { row, col, value } => {
                write!(f, "off-diagonal entry ({row}, {col}) = {value} is negative")
            }
            Violation::NonZeroRowSum { row, sum } => write!(f, "row {row} sums to {sum}"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ViolationReport {
    pub violations: Vec<Violation>,
}

impl ViolationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ViolationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        write!(f, "{}", parts.join("; "))
    }
}

/// A validated rate matrix: nonpositive diagonal, nonnegative off-diagonal
/// entries and zero row sums.
#[derive(Clone, Debug, PartialEq)]
pub struct QMatrix(Matrix);

impl QMatrix {
    pub fn new(m: Matrix) -> Result<Self> {
        validate_q_matrix(&m, Tolerances::DEFAULT.q_row_sum)
    }

    /// Wraps `m` without checking the rate-matrix conditions. Families built
    /// from such matrices can violate the maximum principle; this exists so
    /// that checkers can be exercised on invalid input.
    pub fn from_matrix_unchecked(m: Matrix) -> Self {
        QMatrix(m)
    }

    pub fn zeros(dim: usize) -> Self {
        QMatrix(Matrix::zeros(dim))
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }
}

impl AsRef<Matrix> for QMatrix {
    fn as_ref(&self) -> &Matrix {
        &self.0
    }
}

/// Checks the rate-matrix conditions. The row-sum test is relative: a row
/// passes when `|Σ_j m_ij| ≤ tol · max(1, max_j |m_ij|)`.
pub fn validate_q_matrix(m: &Matrix, tol: f64) -> Result<QMatrix> {
    m.check_finite("matrix")?;
    let d = m.dim();
    let mut report = ViolationReport::default();
    for i in 0..d {
        let row = m.row(i);
        for (j, &v) in row.iter().enumerate() {
            if i == j && v > 0.0 {
                report.violations.push(Violation::PositiveDiagonal { row: i, value: v });
            } else if i != j && v < 0.0 {
                report.violations.push(Violation::NegativeOffDiagonal {
                    row: i,
                    col: j,
                    value: v,
                });
            }
        }
        let sum: f64 = row.iter().sum();
        let scale = row.iter().fold(1.0f64, |s, v| s.max(v.abs()));
        if sum.abs() > tol * scale {
            report.violations.push(Violation::NonZeroRowSum { row: i, sum });
        }
    }
    if report.is_empty() {
        Ok(QMatrix(m.clone()))
    } else {
        Err(Error::NotQMatrix(report))
    }
}

fn check_grid_params(d: usize, delta: f64) -> Result<()> {
    if d < 2 {
        return Err(Error::InvalidParameter(format!("grid needs d >= 2, got {d}")));
    }
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "grid spacing must be positive, got {delta}"
        )));
    }
    Ok(())
}

/// Second-difference matrix with Neumann boundary rows, scaled by `1/δ²`.
pub fn build_laplacian_a(d: usize, delta: f64) -> Result<QMatrix> {
    check_grid_params(d, delta)?;
    let s = 1.0 / (delta * delta);
    let mut m = Matrix::zeros(d);
    m[(0, 0)] = -s;
    m[(0, 1)] = s;
    for i in 1..d - 1 {
        m[(i, i - 1)] = s;
        m[(i, i)] = -2.0 * s;
        m[(i, i + 1)] = s;
    }
    m[(d - 1, d - 2)] = s;
    m[(d - 1, d - 1)] = -s;
    Ok(QMatrix(m))
}

/// Forward-difference matrix scaled by `1/δ`; the last row is zero.
pub fn build_drift_b(d: usize, delta: f64) -> Result<QMatrix> {
    check_grid_params(d, delta)?;
    let s = 1.0 / delta;
    let mut m = Matrix::zeros(d);
    for i in 0..d - 1 {
        m[(i, i)] = -s;
        m[(i, i + 1)] = s;
    }
    Ok(QMatrix(m))
}

/// Uniform state grid `x_i = i δ`, `i = 0..d-1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StateGrid {
    dim: usize,
    delta: f64,
}

impl StateGrid {
    pub fn new(dim: usize, delta: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("grid needs at least one point".into()));
        }
        if !(delta.is_finite() && delta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "grid spacing must be positive, got {delta}"
            )));
        }
        Ok(StateGrid { dim, delta })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.delta
    }

    pub fn points(&self) -> Vector {
        Vector::new((0..self.dim).map(|i| self.x(i)).collect())
    }
}

/// Whether a family describes the supremum (upper bound) or the infimum
/// (lower bound) envelope.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Direction {
    Upper,
    Lower,
}

impl Direction {
    pub fn flipped(self) -> Self {
        match self {
            Direction::Upper => Direction::Lower,
            Direction::Lower => Direction::Upper,
        }
    }

    /// Whether `candidate` strictly improves on `incumbent`.
    #[inline]
    pub(crate) fn better(self, candidate: f64, incumbent: f64) -> bool {
        match self {
            Direction::Upper => candidate > incumbent,
            Direction::Lower => candidate < incumbent,
        }
    }
}

/// A member `(q, f)` of a dual family.
#[derive(Clone, Debug, PartialEq)]
pub struct Member {
    pub q: QMatrix,
    pub penalty: Vector,
}

impl Member {
    pub fn linear(q: QMatrix) -> Self {
        let d = q.dim();
        Member {
            q,
            penalty: Vector::zeros(d),
        }
    }
}

/// Finite dual representation `{(q_k, f_k)}` of a convex Q-operator
/// `Q u = max_k (q_k u + f_k)`.
///
/// In the [`Direction::Lower`] direction the family represents the
/// conjugate operator `u ↦ -Q(-u) = min_k (q_k u - f_k)`, which for
/// sublinear families (all `f_k = 0`) is the plain componentwise minimum.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorFamily {
    dim: usize,
    members: Vec<Member>,
    direction: Direction,
}

impl GeneratorFamily {
    /// Checks that the family is nonempty, dimensionally consistent, that
    /// every penalty is nonpositive and that some member has zero penalty.
    pub fn new(members: Vec<Member>, direction: Direction) -> Result<Self> {
        let first = members
            .first()
            .ok_or_else(|| Error::InvalidFamily("family has no members".into()))?;
        let dim = first.q.dim();
        for m in &members {
            if m.q.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: m.q.dim(),
                });
            }
            m.penalty.check_dim(dim)?;
            m.q.as_matrix().check_finite("generator")?;
            if !m.penalty.is_finite() {
                return Err(Error::NonFinite {
                    context: "penalty vector".into(),
                });
            }
            if m.penalty.iter().any(|&v| v > 0.0) {
                return Err(Error::InvalidFamily("penalties must be nonpositive".into()));
            }
        }
        if !members.iter().any(|m| m.penalty.iter().all(|&v| v == 0.0)) {
            return Err(Error::InvalidFamily(
                "some member must carry a zero penalty".into(),
            ));
        }
        Ok(GeneratorFamily {
            dim,
            members,
            direction,
        })
    }

    /// Family of linear generators with zero penalties.
    pub fn sublinear(generators: Vec<QMatrix>, direction: Direction) -> Result<Self> {
        GeneratorFamily::new(generators.into_iter().map(Member::linear).collect(), direction)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[Member] {
        &self.members
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn with_direction(&self, direction: Direction) -> Self {
        GeneratorFamily {
            direction,
            ..self.clone()
        }
    }

    /// True when every penalty vanishes.
    pub fn is_sublinear(&self) -> bool {
        self.members
            .iter()
            .all(|m| m.penalty.iter().all(|&v| v == 0.0))
    }

    /// `max_k ‖q_k‖_∞`
    pub fn max_generator_norm(&self) -> f64 {
        self.members
            .iter()
            .map(|m| op_norm_inf(m.q.as_matrix()))
            .fold(0.0, f64::max)
    }

    /// Penalty of member `k` as it enters the envelope for this direction:
    /// `f_k` for upper, `-f_k` for lower.
    pub fn signed_penalty(&self, k: usize) -> Vector {
        let f = &self.members[k].penalty;
        match self.direction {
            Direction::Upper => f.clone(),
            Direction::Lower => f.scale(-1.0),
        }
    }
}

/// The two-member family `{q0 + λ_l q, q0 + λ_h q}` with zero penalties,
/// representing `Q u = q0 u + max_{λ ∈ [λ_l, λ_h]} λ q u`.
pub fn interval_generator(
    q0: &QMatrix,
    q: &QMatrix,
    lambda_low: f64,
    lambda_high: f64,
    direction: Direction,
) -> Result<GeneratorFamily> {
    if !(lambda_low.is_finite() && lambda_high.is_finite()) {
        return Err(Error::InvalidParameter("interval endpoints must be finite".into()));
    }
    if lambda_low > lambda_high {
        return Err(Error::InvalidParameter(format!(
            "empty interval [{lambda_low}, {lambda_high}]"
        )));
    }
    if q0.dim() != q.dim() {
        return Err(Error::DimensionMismatch {
            expected: q0.dim(),
            found: q.dim(),
        });
    }
    let endpoint = |lambda: f64| -> Result<QMatrix> {
        let m = q0.as_matrix().add_scaled(lambda, q.as_matrix());
        validate_q_matrix(&m, Tolerances::DEFAULT.q_row_sum).map_err(|e| match e {
            Error::NotQMatrix(report) => Error::InvalidGenerator { lambda, report },
            other => other,
        })
    };
    GeneratorFamily::sublinear(vec![endpoint(lambda_low)?, endpoint(lambda_high)?], direction)
}

/// `Q u`: componentwise max (or min) over members of `q_k u + f_k`.
pub fn apply_q_operator(fam: &GeneratorFamily, u: &Vector) -> Result<Vector> {
    apply_q_operator_with_argmax(fam, u).map(|(v, _)| v)
}

/// [`apply_q_operator`] together with the attaining member per component;
/// ties go to the lowest index.
pub fn apply_q_operator_with_argmax(
    fam: &GeneratorFamily,
    u: &Vector,
) -> Result<(Vector, Vec<usize>)> {
    u.check_dim(fam.dim())?;
    let d = fam.dim();
    let dir = fam.direction();
    let penalties: Vec<Vector> = (0..fam.len()).map(|k| fam.signed_penalty(k)).collect();
    let mut best = Vector::zeros(d);
    let mut arg = vec![0usize; d];
    for i in 0..d {
        for (k, m) in fam.members().iter().enumerate() {
            let v = row_dot(m.q.as_matrix().row(i), u) + penalties[k][i];
            if k == 0 || dir.better(v, best[i]) {
                best[i] = v;
                arg[i] = k;
            }
        }
    }
    Ok((best, arg))
}

/// Outcome of one group of maximum-principle checks.
#[derive(Clone, Debug, PartialEq)]
pub struct PmpCheck {
    pub name: &'static str,
    pub evaluated: usize,
    pub failures: usize,
    pub counterexample: Option<String>,
}

impl PmpCheck {
    fn new(name: &'static str) -> Self {
        PmpCheck {
            name,
            evaluated: 0,
            failures: 0,
            counterexample: None,
        }
    }

    fn record(&mut self, ok: bool, describe: impl FnOnce() -> String) {
        self.evaluated += 1;
        if !ok {
            self.failures += 1;
            if self.counterexample.is_none() {
                self.counterexample = Some(describe());
            }
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PmpReport {
    pub checks: Vec<PmpCheck>,
}

impl PmpReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(PmpCheck::passed)
    }
}

const AXIOM_SCALES: [f64; 3] = [0.5, 1.0, 10.0];
const AXIOM_CONSTANTS: [f64; 4] = [-5.0, 0.5, 1.0, 5.0];

/// Randomized check of the positive maximum principle plus the sign axioms
/// of a Q-operator: `(Q λe_i)_i ≤ 0`, `(Q(-λe_j))_i ≤ 0` for `i ≠ j` and
/// `Q α = 0` for constants.
///
/// Each comparison allows a slack of `1e-12 · max(1, L ‖u‖_∞)` where `L` is
/// the largest generator norm, which covers rounding in `q u`.
pub fn check_pmp(fam: &GeneratorFamily, trials: usize, rng_seed: u64) -> PmpReport {
    let d = fam.dim();
    let tol = Tolerances::DEFAULT.pmp;
    let norm = fam.max_generator_norm();
    let slack = |u: &Vector| tol * (norm * u.norm_inf()).max(1.0);
    let eval = |u: &Vector| apply_q_operator(fam, u).expect("dimension checked");

    let mut random = PmpCheck::new("maximum principle at argmax (random vectors)");
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    for trial in 0..trials {
        let scale = 10f64.powf(rng.gen_range(-1.0..1.0));
        // every third vector is quantised so that the maximum is often tied
        let quantise = trial % 3 == 0;
        let u = Vector::new(
            (0..d)
                .map(|_| {
                    let x: f64 = rng.gen_range(-1.0..1.0);
                    scale * if quantise { (2.0 * x).round() / 2.0 } else { x }
                })
                .collect(),
        );
        let qu = eval(&u);
        let top = u.max();
        let s = slack(&u);
        for i in (0..d).filter(|&i| u[i] == top) {
            random.record(qu[i] <= s, || {
                format!("u = {:?}: (Qu)_{i} = {:e} > 0", u.as_slice(), qu[i])
            });
        }
    }

    let mut diag = PmpCheck::new("(Q λe_i)_i <= 0");
    let mut off = PmpCheck::new("(Q(-λe_j))_i <= 0 for i != j");
    for &lambda in &AXIOM_SCALES {
        for j in 0..d {
            let mut e = Vector::zeros(d);
            e[j] = lambda;
            let qe = eval(&e);
            diag.record(qe[j] <= slack(&e), || {
                format!("λ = {lambda}, i = {j}: (Q λe_i)_i = {:e}", qe[j])
            });
            e[j] = -lambda;
            let qe = eval(&e);
            for i in (0..d).filter(|&i| i != j) {
                off.record(qe[i] <= slack(&e), || {
                    format!("λ = {lambda}, i = {i}, j = {j}: (Q(-λe_j))_i = {:e}", qe[i])
                });
            }
        }
    }

    let mut constants = PmpCheck::new("Q α = 0 for constants");
    for &alpha in &AXIOM_CONSTANTS {
        let c = Vector::constant(d, alpha);
        let qc = eval(&c);
        let s = slack(&c);
        constants.record(qc.norm_inf() <= s, || {
            format!("α = {alpha}: ‖Qα‖_∞ = {:e}", qc.norm_inf())
        });
    }

    PmpReport {
        checks: vec![random, diag, off, constants],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[[f64; 2]]) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    #[test]
    fn validates_simple_chain() {
        assert!(validate_q_matrix(&m(&[[-1.0, 1.0], [1.0, -1.0]]), 1e-12).is_ok());
    }

    #[test]
    fn reports_each_violation() {
        let err = validate_q_matrix(&m(&[[1.0, -1.0], [0.0, 0.0]]), 1e-12).unwrap_err();
        let Error::NotQMatrix(report) = err else {
            panic!("expected a violation report");
        };
        assert_eq!(
            report.violations,
            vec![
                Violation::PositiveDiagonal { row: 0, value: 1.0 },
                Violation::NegativeOffDiagonal {
                    row: 0,
                    col: 1,
                    value: -1.0
                },
            ]
        );
    }

    #[test]
    fn row_sum_violation_is_reported() {
        let err = validate_q_matrix(&m(&[[-1.0, 2.0], [0.0, 0.0]]), 1e-12).unwrap_err();
        assert!(err.to_string().contains("row 0 sums to 1"));
    }

    #[test]
    fn laplacian_pattern() {
        let a = build_laplacian_a(3, 1.0).unwrap();
        let expect = Matrix::from_rows(&[[-1.0, 1.0, 0.0], [1.0, -2.0, 1.0], [0.0, 1.0, -1.0]]).unwrap();
        assert_eq!(a.as_matrix(), &expect);

        let a = build_laplacian_a(2, 0.5).unwrap();
        assert_eq!(a.as_matrix(), &m(&[[-4.0, 4.0], [4.0, -4.0]]));

        let a = build_laplacian_a(101, 0.1).unwrap();
        assert!(a.as_matrix().row_sums().iter().all(|&s| s == 0.0));
        assert!(validate_q_matrix(a.as_matrix(), 1e-12).is_ok());
        assert!((op_norm_inf(a.as_matrix()) - 400.0).abs() < 1e-9);
    }

    #[test]
    fn drift_pattern() {
        let b = build_drift_b(3, 1.0).unwrap();
        let expect = Matrix::from_rows(&[[-1.0, 1.0, 0.0], [0.0, -1.0, 1.0], [0.0, 0.0, 0.0]]).unwrap();
        assert_eq!(b.as_matrix(), &expect);
        assert_eq!(build_drift_b(2, 0.1).unwrap().as_matrix(), &m(&[[-10.0, 10.0], [0.0, 0.0]]));
        assert!(validate_q_matrix(build_drift_b(101, 0.1).unwrap().as_matrix(), 1e-12).is_ok());
    }

    #[test]
    fn builders_reject_bad_parameters() {
        assert!(build_laplacian_a(1, 0.1).is_err());
        assert!(build_drift_b(5, 0.0).is_err());
        assert!(build_drift_b(5, f64::NAN).is_err());
    }

    #[test]
    fn drift_and_volatility_families_are_valid() {
        let a = build_laplacian_a(101, 0.1).unwrap();
        let b = build_drift_b(101, 0.1).unwrap();
        let fam = interval_generator(&a, &b, -1.0, 1.0, Direction::Upper).unwrap();
        assert_eq!(fam.len(), 2);
        for member in fam.members() {
            assert!(validate_q_matrix(member.q.as_matrix(), 1e-12).is_ok());
        }

        let fam = interval_generator(&QMatrix::zeros(101), &a, 0.5, 1.5, Direction::Upper).unwrap();
        assert_eq!(fam.members()[0].q.as_matrix(), &a.as_matrix().scale(0.5));
        assert_eq!(fam.members()[1].q.as_matrix(), &a.as_matrix().scale(1.5));
        assert!(fam.is_sublinear());
    }

    #[test]
    fn zero_width_interval_degenerates() {
        let a = build_laplacian_a(5, 1.0).unwrap();
        let b = build_drift_b(5, 1.0).unwrap();
        let fam = interval_generator(&a, &b, 1.0, 1.0, Direction::Upper).unwrap();
        assert_eq!(fam.members()[0], fam.members()[1]);
    }

    #[test]
    fn incompatible_interval_is_rejected() {
        let a = build_laplacian_a(5, 1.0).unwrap();
        let b = build_drift_b(5, 1.0).unwrap();
        // a - 3b has (0,1) entry 1 - 3 < 0
        let err = interval_generator(&a, &b, -3.0, 1.0, Direction::Upper).unwrap_err();
        assert!(matches!(err, Error::InvalidGenerator { lambda, .. } if lambda == -3.0));
        assert!(interval_generator(&a, &b, 1.0, -1.0, Direction::Upper).is_err());
    }

    #[test]
    fn family_invariants() {
        let q = QMatrix::new(m(&[[-1.0, 1.0], [1.0, -1.0]])).unwrap();
        assert!(GeneratorFamily::new(vec![], Direction::Upper).is_err());
        let positive = Member {
            q: q.clone(),
            penalty: Vector::new(vec![0.1, 0.0]),
        };
        assert!(GeneratorFamily::new(vec![positive, Member::linear(q.clone())], Direction::Upper).is_err());
        let penalised = Member {
            q: q.clone(),
            penalty: Vector::new(vec![-0.1, 0.0]),
        };
        assert!(GeneratorFamily::new(vec![penalised.clone()], Direction::Upper).is_err());
        let fam = GeneratorFamily::new(vec![penalised, Member::linear(q)], Direction::Upper).unwrap();
        assert!(!fam.is_sublinear());
    }

    #[test]
    fn q_operator_on_constants_vanishes() {
        let a = build_laplacian_a(6, 0.5).unwrap();
        let b = build_drift_b(6, 0.5).unwrap();
        let fam = interval_generator(&a, &b, -1.0, 1.0, Direction::Upper).unwrap();
        let out = apply_q_operator(&fam, &Vector::constant(6, 3.7)).unwrap();
        assert!(out.norm_inf() < 1e-12);
    }

    #[test]
    fn q_operator_enumerates_members() {
        let b = m(&[[-1.0, 1.0], [0.0, 0.0]]);
        // -b is not a rate matrix but the operator only needs the products
        let fam = GeneratorFamily::sublinear(
            vec![
                QMatrix::from_matrix_unchecked(b.scale(-1.0)),
                QMatrix::from_matrix_unchecked(b),
            ],
            Direction::Upper,
        )
        .unwrap();
        let (v, arg) = apply_q_operator_with_argmax(&fam, &Vector::new(vec![0.0, 1.0])).unwrap();
        assert_eq!(v.as_slice(), &[1.0, 0.0]);
        // second component ties at 0: lowest index wins
        assert_eq!(arg, vec![1, 0]);

        let (v, arg) = apply_q_operator_with_argmax(
            &fam.with_direction(Direction::Lower),
            &Vector::new(vec![0.0, 1.0]),
        )
        .unwrap();
        assert_eq!(v.as_slice(), &[-1.0, 0.0]);
        assert_eq!(arg, vec![0, 0]);
    }

    #[test]
    fn q_operator_dimension_mismatch() {
        let fam = GeneratorFamily::sublinear(vec![QMatrix::zeros(3)], Direction::Upper).unwrap();
        assert!(matches!(
            apply_q_operator(&fam, &Vector::zeros(2)),
            Err(Error::DimensionMismatch { expected: 3, found: 2 })
        ));
    }

    #[test]
    fn lower_direction_uses_conjugate_penalty() {
        let q = QMatrix::new(m(&[[-1.0, 1.0], [1.0, -1.0]])).unwrap();
        let fam = GeneratorFamily::new(
            vec![
                Member::linear(q.clone()),
                Member {
                    q: QMatrix::zeros(2),
                    penalty: Vector::new(vec![-0.5, -0.5]),
                },
            ],
            Direction::Lower,
        )
        .unwrap();
        // constants are still annihilated
        let out = apply_q_operator(&fam, &Vector::constant(2, 2.0)).unwrap();
        assert_eq!(out.as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn pmp_passes_for_interval_family() {
        let a = build_laplacian_a(101, 0.1).unwrap();
        let b = build_drift_b(101, 0.1).unwrap();
        let fam = interval_generator(&a, &b, -1.0, 1.0, Direction::Upper).unwrap();
        let report = check_pmp(&fam, 200, 7);
        assert!(report.passed(), "{report:?}");
        let constants = report.checks.iter().find(|c| c.name.contains("constants")).unwrap();
        assert!(constants.passed() && constants.evaluated > 0);
    }

    #[test]
    fn pmp_detects_invalid_generator() {
        let bad = QMatrix::from_matrix_unchecked(m(&[[1.0, -1.0], [0.0, 0.0]]));
        let fam = GeneratorFamily::sublinear(vec![bad], Direction::Upper).unwrap();
        let report = check_pmp(&fam, 50, 1);
        assert!(!report.passed());
        let diag = report.checks.iter().find(|c| c.name.starts_with("(Q λe_i)")).unwrap();
        assert!(!diag.passed());
        assert!(diag.counterexample.as_deref().unwrap().contains("i = 0"));
    }

    #[test]
    fn grid_points() {
        let g = StateGrid::new(101, 0.1).unwrap();
        assert_eq!(g.x(0), 0.0);
        assert!((g.x(100) - 10.0).abs() < 1e-12);
        assert!(StateGrid::new(3, -1.0).is_err());
    }
}
