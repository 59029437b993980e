//! Continuous-time Markov chains on finite state spaces under convex
//! expectations.
//!
//! A convex Q-operator is given by a finite family of rate matrices with
//! penalties, `Q u = max_k (q_k u + f_k)`. Its semigroup `S(t)` solves the
//! nonlinear equation `u' = Q u` and can be computed two ways:
//!
//! * by iterating the one-step envelope over refining time partitions
//!   ([`nisio`]), or
//! * by integrating the ODE with fixed-step solvers ([`ode`]).
//!
//! [`pricing`] uses both to bound prices of European claims when the drift
//! or volatility of a discretized Brownian motion is only known to lie in
//! an interval.

pub mod error;
pub mod generator;
pub mod io;
pub mod linalg;
pub mod nisio;
pub mod ode;
pub mod pricing;

pub use error::{Error, Result};
pub use generator::{
    apply_q_operator, apply_q_operator_with_argmax, build_drift_b, build_laplacian_a, check_pmp,
    interval_generator, validate_q_matrix, Direction, GeneratorFamily, Member, PmpCheck, PmpReport,
    QMatrix, StateGrid, Violation, ViolationReport,
};
pub use linalg::{
    affine_flow, affine_flow_with, euler_product_exp, mat_exp, mat_exp_with, op_norm_inf,
    AffineFlow, ExpMethod, Matrix, Tolerances, Vector,
};
pub use nisio::{Control, ControlStep, Envelope, EnvelopeDiagnostics, LevelRecord, Partition};
pub use ode::{solve_euler, solve_rk4, Storage, Trajectory};
pub use pricing::{
    compare_methods, linear_reference, payoff_bull, payoff_butterfly, price_bounds,
    ComparisonReport, Payoff, PayoffKind, PriceBounds, PricingMethod,
};
