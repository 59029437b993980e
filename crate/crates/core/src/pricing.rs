//! European payoffs and upper/lower price bounds under generator uncertainty.

use std::fmt;
use std::thread;

use crate::error::{Error, Result};
use crate::generator::{Direction, GeneratorFamily, QMatrix, StateGrid};
use crate::linalg::{mat_exp, ExpMethod, Vector};
use crate::nisio::Envelope;
use crate::ode::{solve_euler_with, solve_rk4_with, Storage};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PayoffKind {
    Butterfly { strike: f64, upper: f64 },
    Bull { strike: f64, upper: f64 },
    Custom,
}

/// A payoff sampled on a state grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Payoff {
    pub kind: PayoffKind,
    pub grid: StateGrid,
    pub values: Vector,
}

impl Payoff {
    pub fn custom(grid: StateGrid, values: Vector) -> Result<Self> {
        values.check_dim(grid.dim())?;
        if !values.is_finite() {
            return Err(Error::NonFinite {
                context: "payoff".into(),
            });
        }
        Ok(Payoff {
            kind: PayoffKind::Custom,
            grid,
            values,
        })
    }
}

fn check_strikes(k: f64, l: f64) -> Result<()> {
    if !(k.is_finite() && l.is_finite() && k < l) {
        return Err(Error::InvalidParameter(format!(
            "strikes need K < L, got K = {k}, L = {l}"
        )));
    }
    Ok(())
}

/// `(L - K - |x - L|)^+`
pub fn payoff_butterfly(grid: &StateGrid, k: f64, l: f64) -> Result<Payoff> {
    check_strikes(k, l)?;
    let values = (0..grid.dim())
        .map(|i| (l - k - (grid.x(i) - l).abs()).max(0.0))
        .collect();
    Ok(Payoff {
        kind: PayoffKind::Butterfly { strike: k, upper: l },
        grid: *grid,
        values: Vector::new(values),
    })
}

/// `min{(x - K)^+, L - K}`
pub fn payoff_bull(grid: &StateGrid, k: f64, l: f64) -> Result<Payoff> {
    check_strikes(k, l)?;
    let values = (0..grid.dim())
        .map(|i| (grid.x(i) - k).max(0.0).min(l - k))
        .collect();
    Ok(Payoff {
        kind: PayoffKind::Bull { strike: k, upper: l },
        grid: *grid,
        values: Vector::new(values),
    })
}

/// How a price bound is computed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PricingMethod {
    OdeEuler { steps: usize },
    OdeRk4 { steps: usize },
    /// Level-`n` dyadic envelope.
    Nisio { n: u32, exp: ExpMethod },
}

impl PricingMethod {
    pub fn validate(&self) -> Result<()> {
        match *self {
            PricingMethod::OdeEuler { steps } | PricingMethod::OdeRk4 { steps } if steps == 0 => {
                Err(Error::InvalidParameter("ODE methods need steps >= 1".into()))
            }
            PricingMethod::Nisio { n, .. } if n > crate::nisio::MAX_LEVEL => Err(
                Error::InvalidParameter(format!("refinement level {n} is too large")),
            ),
            PricingMethod::Nisio {
                exp: ExpMethod::EulerProduct(0),
                ..
            } => Err(Error::InvalidParameter("euler product needs k >= 1".into())),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for PricingMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PricingMethod::OdeEuler { steps } => write!(f, "ode-euler(steps={steps})"),
            PricingMethod::OdeRk4 { steps } => write!(f, "ode-rk4(steps={steps})"),
            PricingMethod::Nisio {
                n,
                exp: ExpMethod::ScalingSquaring,
            } => write!(f, "nisio(n={n}, exact exponentials)"),
            PricingMethod::Nisio {
                n,
                exp: ExpMethod::EulerProduct(k),
            } => write!(f, "nisio(n={n}, k={k})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PriceBounds {
    pub grid: StateGrid,
    pub upper: Vector,
    pub lower: Vector,
    pub method: PricingMethod,
    pub t: f64,
    pub members: usize,
}

/// Prices `payoff` at horizon `t` under the family in both directions.
/// The two directions are evaluated on separate threads.
pub fn price_bounds(
    fam: &GeneratorFamily,
    payoff: &Payoff,
    t: f64,
    method: PricingMethod,
) -> Result<PriceBounds> {
    method.validate()?;
    payoff.values.check_dim(fam.dim())?;
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "maturity must be finite and nonnegative, got {t}"
        )));
    }
    let upper_fam = fam.with_direction(Direction::Upper);
    let lower_fam = fam.with_direction(Direction::Lower);
    let (upper, lower) = thread::scope(|s| {
        let upper = s.spawn(|| price_one(&upper_fam, &payoff.values, t, method));
        let lower = price_one(&lower_fam, &payoff.values, t, method);
        (upper.join().expect("upper bound worker panicked"), lower)
    });
    Ok(PriceBounds {
        grid: payoff.grid,
        upper: upper?,
        lower: lower?,
        method,
        t,
        members: fam.len(),
    })
}

fn price_one(fam: &GeneratorFamily, u0: &Vector, t: f64, method: PricingMethod) -> Result<Vector> {
    if t == 0.0 {
        return Ok(u0.clone());
    }
    let storage = Storage::Snapshots(2);
    match method {
        PricingMethod::OdeEuler { steps } => {
            Ok(solve_euler_with(fam, u0, t, steps, storage)?.final_value().clone())
        }
        PricingMethod::OdeRk4 { steps } => {
            Ok(solve_rk4_with(fam, u0, t, steps, storage)?.final_value().clone())
        }
        PricingMethod::Nisio { n, exp } => Envelope::with_method(fam, exp).envelope(t, n, u0),
    }
}

/// Price under the single generator `q_lin`: `e^{t q_lin} u_0`.
pub fn linear_reference(q_lin: &QMatrix, payoff: &Payoff, t: f64) -> Result<Vector> {
    payoff.values.check_dim(q_lin.dim())?;
    Ok(mat_exp(q_lin.as_matrix(), t)?.mul_vec(&payoff.values))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonReport {
    pub max_abs_diff_upper: f64,
    pub max_abs_diff_lower: f64,
    pub diff_upper: Vector,
    pub diff_lower: Vector,
    pub first: PriceBounds,
    pub second: PriceBounds,
}

impl ComparisonReport {
    pub fn max_abs_diff(&self) -> f64 {
        self.max_abs_diff_upper.max(self.max_abs_diff_lower)
    }
}

pub fn compare_methods(b1: &PriceBounds, b2: &PriceBounds) -> Result<ComparisonReport> {
    if b1.grid != b2.grid {
        return Err(Error::InvalidParameter(
            "price bounds live on different grids".into(),
        ));
    }
    let diff = |a: &Vector, b: &Vector| -> Vector {
        Vector::new(a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).collect())
    };
    let diff_upper = diff(&b1.upper, &b2.upper);
    let diff_lower = diff(&b1.lower, &b2.lower);
    Ok(ComparisonReport {
        max_abs_diff_upper: diff_upper.norm_inf(),
        max_abs_diff_lower: diff_lower.norm_inf(),
        diff_upper,
        diff_lower,
        first: b1.clone(),
        second: b2.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::{build_drift_b, build_laplacian_a, interval_generator};

    fn grid() -> StateGrid {
        StateGrid::new(101, 0.1).unwrap()
    }

    fn value_at(p: &Payoff, x: f64) -> f64 {
        let i = (x / p.grid.delta()).round() as usize;
        p.values[i]
    }

    #[test]
    fn butterfly_values() {
        let p = payoff_butterfly(&grid(), 4.0, 5.0).unwrap();
        assert!((value_at(&p, 5.0) - 1.0).abs() < 1e-12);
        assert!(value_at(&p, 4.0).abs() < 1e-12);
        assert_eq!(value_at(&p, 6.5), 0.0);
        assert!(p.values.iter().all(|&v| (0.0..=1.0).contains(&v)));
        assert!(payoff_butterfly(&grid(), 5.0, 5.0).is_err());
    }

    #[test]
    fn bull_values() {
        let p = payoff_bull(&grid(), 4.0, 5.0).unwrap();
        assert!((value_at(&p, 5.0) - 1.0).abs() < 1e-12);
        assert_eq!(value_at(&p, 3.0), 0.0);
        assert!((value_at(&p, 4.5) - 0.5).abs() < 1e-12);
        assert!(p.values.windows(2).all(|w| w[0] <= w[1]));
        assert!(payoff_bull(&grid(), 6.0, 5.0).is_err());
    }

    #[test]
    fn zero_width_interval_gives_linear_price() {
        let g = StateGrid::new(21, 0.5).unwrap();
        let a = build_laplacian_a(21, 0.5).unwrap();
        let b = build_drift_b(21, 0.5).unwrap();
        let fam = interval_generator(&a, &b, 0.3, 0.3, Direction::Upper).unwrap();
        let payoff = payoff_butterfly(&g, 4.0, 5.0).unwrap();
        let bounds = price_bounds(
            &fam,
            &payoff,
            1.0,
            PricingMethod::Nisio {
                n: 4,
                exp: ExpMethod::ScalingSquaring,
            },
        )
        .unwrap();
        let reference = linear_reference(&fam.members()[0].q, &payoff, 1.0).unwrap();
        assert!(bounds.upper.max_abs_diff(&reference) <= 1e-9);
        assert!(bounds.lower.max_abs_diff(&reference) <= 1e-9);
    }

    #[test]
    fn time_zero_returns_payoff() {
        let g = StateGrid::new(11, 1.0).unwrap();
        let a = build_laplacian_a(11, 1.0).unwrap();
        let fam = interval_generator(&QMatrix::zeros(11), &a, 0.5, 1.5, Direction::Upper).unwrap();
        let payoff = payoff_bull(&g, 4.0, 5.0).unwrap();
        for method in [
            PricingMethod::OdeEuler { steps: 10 },
            PricingMethod::Nisio {
                n: 3,
                exp: ExpMethod::EulerProduct(10),
            },
        ] {
            let b = price_bounds(&fam, &payoff, 0.0, method).unwrap();
            assert_eq!(b.upper, payoff.values);
            assert_eq!(b.lower, payoff.values);
        }
        assert_eq!(linear_reference(&a, &payoff, 0.0).unwrap(), payoff.values);
    }

    #[test]
    fn comparing_with_itself_gives_zero() {
        let g = StateGrid::new(11, 1.0).unwrap();
        let a = build_laplacian_a(11, 1.0).unwrap();
        let fam = interval_generator(&QMatrix::zeros(11), &a, 0.5, 1.5, Direction::Upper).unwrap();
        let payoff = payoff_bull(&g, 4.0, 5.0).unwrap();
        let b = price_bounds(&fam, &payoff, 1.0, PricingMethod::OdeRk4 { steps: 100 }).unwrap();
        let report = compare_methods(&b, &b).unwrap();
        assert_eq!(report.max_abs_diff(), 0.0);

        let mut other = b.clone();
        other.grid = StateGrid::new(11, 0.5).unwrap();
        assert!(compare_methods(&b, &other).is_err());
    }

    #[test]
    fn method_validation() {
        assert!(PricingMethod::OdeEuler { steps: 0 }.validate().is_err());
        assert!(PricingMethod::Nisio {
            n: 3,
            exp: ExpMethod::EulerProduct(0)
        }
        .validate()
        .is_err());
        assert!(PricingMethod::Nisio {
            n: 10,
            exp: ExpMethod::EulerProduct(10)
        }
        .validate()
        .is_ok());
    }
}
