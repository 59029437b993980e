//! Fixed-step integrators for the nonlinear pricing equation `u' = Q u`.

use crate::error::{Error, Result};
use crate::generator::{apply_q_operator, GeneratorFamily};
use crate::linalg::Vector;

/// Default number of stored snapshots, endpoints included.
pub const DEFAULT_SNAPSHOTS: usize = 101;

/// Which time levels a solver keeps.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Storage {
    /// Every step.
    Full,
    /// About this many evenly spaced steps; the first and last step are
    /// always kept.
    Snapshots(usize),
}

impl Default for Storage {
    fn default() -> Self {
        Storage::Snapshots(DEFAULT_SNAPSHOTS)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub values: Vec<Vector>,
}

impl Trajectory {
    pub fn final_value(&self) -> &Vector {
        self.values.last().expect("trajectory holds the initial value")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectory holds the initial time")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Scheme {
    Euler,
    Rk4,
}

/// Explicit Euler: `u_{j+1} = u_j + h Q(u_j)`.
pub fn solve_euler(fam: &GeneratorFamily, u0: &Vector, t: f64, steps: usize) -> Result<Trajectory> {
    solve(fam, u0, t, steps, Storage::default(), Scheme::Euler)
}

pub fn solve_euler_with(
    fam: &GeneratorFamily,
    u0: &Vector,
    t: f64,
    steps: usize,
    storage: Storage,
) -> Result<Trajectory> {
    solve(fam, u0, t, steps, storage, Scheme::Euler)
}

/// Classical four-stage Runge-Kutta.
pub fn solve_rk4(fam: &GeneratorFamily, u0: &Vector, t: f64, steps: usize) -> Result<Trajectory> {
    solve(fam, u0, t, steps, Storage::default(), Scheme::Rk4)
}

pub fn solve_rk4_with(
    fam: &GeneratorFamily,
    u0: &Vector,
    t: f64,
    steps: usize,
    storage: Storage,
) -> Result<Trajectory> {
    solve(fam, u0, t, steps, storage, Scheme::Rk4)
}

/// `(t / steps) · max_k ‖q_k‖_∞`. Above one the Euler map `I + hQ` is no
/// longer monotone.
pub fn euler_step_ratio(fam: &GeneratorFamily, t: f64, steps: usize) -> f64 {
    t / steps as f64 * fam.max_generator_norm()
}

fn solve(
    fam: &GeneratorFamily,
    u0: &Vector,
    t: f64,
    steps: usize,
    storage: Storage,
    scheme: Scheme,
) -> Result<Trajectory> {
    u0.check_dim(fam.dim())?;
    if !u0.is_finite() {
        return Err(Error::NonFinite {
            context: "initial value".into(),
        });
    }
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "horizon must be finite and nonnegative, got {t}"
        )));
    }
    if steps == 0 {
        return Err(Error::InvalidParameter("need at least one time step".into()));
    }
    let keep = keep_mask(steps, storage);
    let h = t / steps as f64;
    let mut times = vec![0.0];
    let mut values = vec![u0.clone()];
    let mut u = u0.clone();
    for j in 1..=steps {
        u = match scheme {
            Scheme::Euler => u.axpy(h, &apply_q_operator(fam, &u)?),
            Scheme::Rk4 => rk4_step(fam, &u, h)?,
        };
        if !u.is_finite() {
            return Err(Error::Diverged { step: j });
        }
        if keep(j) {
            times.push(if j == steps { t } else { j as f64 * h });
            values.push(u.clone());
        }
    }
    Ok(Trajectory { times, values })
}

fn rk4_step(fam: &GeneratorFamily, u: &Vector, h: f64) -> Result<Vector> {
    let k1 = apply_q_operator(fam, u)?;
    let k2 = apply_q_operator(fam, &u.axpy(0.5 * h, &k1))?;
    let k3 = apply_q_operator(fam, &u.axpy(0.5 * h, &k2))?;
    let k4 = apply_q_operator(fam, &u.axpy(h, &k3))?;
    Ok(Vector::new(
        (0..u.dim())
            .map(|i| u[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
            .collect(),
    ))
}

fn keep_mask(steps: usize, storage: Storage) -> impl Fn(usize) -> bool {
    let intervals = match storage {
        Storage::Full => steps,
        Storage::Snapshots(s) => s.saturating_sub(1).clamp(1, steps),
    };
    // step j is kept when it is the first step at or past a snapshot mark
    move |j: usize| j == steps || (j * intervals) / steps != ((j - 1) * intervals) / steps
}
