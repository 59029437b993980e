//! Semigroup envelope of a generator family.
//!
//! The one-step operator `E_h u = max_k S_k(h) u` takes the componentwise
//! best of the affine flows `S_k(h) u = e^{h q_k} u + ∫_0^h e^{s q_k} f_k ds`.
//! Concatenating one-step operators along a partition `0 = t_0 < … < t_m = t`
//! gives `E_π`, and refining dyadic partitions increases `E_π u`
//! monotonically towards the envelope `S(t) u`.
//!
//! The same value is the supremum of `S_θ u` over space-time discrete
//! controls `θ`, where every state picks its own generator on every step.
//! [`Envelope::extract_worst_case_control`] recovers a maximizing control for
//! a dyadic partition and [`Envelope::control_evaluate`] replays it.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use crate::error::{Error, Result};
use crate::generator::{Direction, GeneratorFamily};
use crate::linalg::{affine_flow_with, AffineFlow, ExpMethod, Vector};

/// Largest dyadic refinement level accepted (`2^30` steps).
pub const MAX_LEVEL: u32 = 30;

/// Slack used when judging monotonicity of dyadic refinement.
pub const REFINEMENT_SLACK: f64 = 1e-10;

/// A finite time grid `0 = t_0 < t_1 < … < t_m`.
#[derive(Clone, Debug, PartialEq)]
pub struct Partition {
    times: Vec<f64>,
}

impl Partition {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.first() != Some(&0.0) {
            return Err(Error::InvalidParameter("partition must start at 0".into()));
        }
        if times.iter().any(|t| !t.is_finite()) {
            return Err(Error::NonFinite {
                context: "partition time".into(),
            });
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter(
                "partition times must be strictly increasing".into(),
            ));
        }
        Ok(Partition { times })
    }

    /// `m` equal steps of length `t / m`, built from cumulative sums so that
    /// every step length is exactly `t / m`.
    pub fn uniform(t: f64, m: usize) -> Result<Self> {
        if m == 0 || t == 0.0 {
            return Partition::new(vec![0.0]);
        }
        let h = t / m as f64;
        Partition::new((0..=m).map(|j| j as f64 * h).collect())
    }

    /// The dyadic grid `{k t 2^{-n}}`.
    pub fn dyadic(t: f64, n: u32) -> Result<Self> {
        check_level(n)?;
        Partition::uniform(t, 1usize << n)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn end(&self) -> f64 {
        *self.times.last().expect("partition is nonempty")
    }

    /// `max_j (t_j - t_{j-1})`, zero for the trivial partition.
    pub fn mesh(&self) -> f64 {
        self.durations().fold(0.0, f64::max)
    }

    pub fn durations(&self) -> impl DoubleEndedIterator<Item = f64> + '_ {
        self.times.windows(2).map(|w| w[1] - w[0])
    }

    /// The partition with `point` added (no-op if already present).
    pub fn refined(&self, point: f64) -> Result<Self> {
        let mut times = self.times.clone();
        match times.binary_search_by(|t| t.total_cmp(&point)) {
            Ok(_) => {}
            Err(pos) => times.insert(pos, point),
        }
        Partition::new(times)
    }
}

fn check_level(n: u32) -> Result<()> {
    if n > MAX_LEVEL {
        return Err(Error::InvalidParameter(format!(
            "refinement level {n} exceeds {MAX_LEVEL}"
        )));
    }
    Ok(())
}

/// One step of a control: every state `i` evolves with the row of member
/// `selection[i]` for `duration`.
#[derive(Clone, Debug, PartialEq)]
pub struct ControlStep {
    pub selection: Vec<usize>,
    pub duration: f64,
}

/// Space-time discrete control `θ = ((q_1, h_1), …, (q_m, h_m))`. Step 1 is
/// outermost: `S_θ u = S_1(h_1) ⋯ S_m(h_m) u`, so step `m` acts on `u` first.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Control {
    steps: Vec<ControlStep>,
}

impl Control {
    pub fn new(steps: Vec<ControlStep>) -> Result<Self> {
        for s in &steps {
            if !(s.duration.is_finite() && s.duration > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "control durations must be positive, got {}",
                    s.duration
                )));
            }
        }
        Ok(Control { steps })
    }

    pub fn steps(&self) -> &[ControlStep] {
        &self.steps
    }

    pub fn total(&self) -> f64 {
        self.steps.iter().map(|s| s.duration).sum()
    }
}

/// Result of one dyadic level in [`Envelope::envelope_refined`].
#[derive(Clone, Debug, PartialEq)]
pub struct LevelRecord {
    pub n: u32,
    pub value: Vector,
    /// Max-abs change against the previous level; `None` on the first level.
    pub increment: Option<f64>,
    /// Whether this level moved in the envelope's direction (up for upper,
    /// down for lower) up to [`REFINEMENT_SLACK`].
    pub monotone: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnvelopeDiagnostics {
    pub levels: Vec<LevelRecord>,
    pub converged: bool,
    pub final_level: u32,
}

/// Evaluates envelopes of one family, caching affine flows by member and
/// step length. The cache is shared behind a mutex, so an `Envelope` can be
/// used from several threads.
#[derive(Debug)]
pub struct Envelope<'a> {
    family: &'a GeneratorFamily,
    method: ExpMethod,
    cache: Mutex<HashMap<(usize, u64), Arc<AffineFlow>>>,
}

impl<'a> Envelope<'a> {
    pub fn new(family: &'a GeneratorFamily) -> Self {
        Envelope::with_method(family, ExpMethod::ScalingSquaring)
    }

    pub fn with_method(family: &'a GeneratorFamily, method: ExpMethod) -> Self {
        Envelope {
            family,
            method,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn family(&self) -> &GeneratorFamily {
        self.family
    }

    pub fn method(&self) -> ExpMethod {
        self.method
    }

    /// Affine flow of member `k` over time `h`, for this envelope's direction.
    pub fn flow(&self, k: usize, h: f64) -> Result<Arc<AffineFlow>> {
        let len = self.family.len();
        if k >= len {
            return Err(Error::IndexOutOfBounds { index: k, len });
        }
        let key = (k, h.to_bits());
        if let Some(f) = self.cache.lock().expect("flow cache poisoned").get(&key) {
            return Ok(Arc::clone(f));
        }
        let member = &self.family.members()[k];
        let flow = Arc::new(affine_flow_with(
            member.q.as_matrix(),
            &self.family.signed_penalty(k),
            h,
            self.method,
        )?);
        self.cache
            .lock()
            .expect("flow cache poisoned")
            .insert(key, Arc::clone(&flow));
        Ok(flow)
    }

    fn flows(&self, h: f64) -> Result<Vec<Arc<AffineFlow>>> {
        (0..self.family.len()).map(|k| self.flow(k, h)).collect()
    }

    /// `E_h u`.
    pub fn one_step(&self, h: f64, u: &Vector) -> Result<Vector> {
        self.one_step_with_argmax(h, u).map(|(v, _)| v)
    }

    /// `E_h u` with the attaining member for each state (lowest index on ties).
    pub fn one_step_with_argmax(&self, h: f64, u: &Vector) -> Result<(Vector, Vec<usize>)> {
        u.check_dim(self.family.dim())?;
        if h == 0.0 {
            return Ok((u.clone(), vec![0; u.dim()]));
        }
        let flows = self.flows(h)?;
        Ok(best_of(self.family.direction(), &flows, u))
    }

    /// `E_π u`; the last subinterval acts on `u` first.
    pub fn iterate_partition(&self, pi: &Partition, u: &Vector) -> Result<Vector> {
        u.check_dim(self.family.dim())?;
        let mut v = u.clone();
        for h in pi.durations().rev() {
            v = self.one_step(h, &v)?;
        }
        Ok(v)
    }

    /// `E_{t 2^{-n}}^{2^n} u`. Every step uses the same length `t / 2^n`.
    pub fn envelope(&self, t: f64, n: u32, u: &Vector) -> Result<Vector> {
        check_time(t)?;
        check_level(n)?;
        u.check_dim(self.family.dim())?;
        if t == 0.0 {
            return Ok(u.clone());
        }
        let steps = 1usize << n;
        let flows = self.flows(t / steps as f64)?;
        let dir = self.family.direction();
        let mut v = u.clone();
        for _ in 0..steps {
            v = best_of(dir, &flows, &v).0;
        }
        Ok(v)
    }

    /// Raises the dyadic level until consecutive levels differ by at most
    /// `tol` in max-norm or `n_max` is reached.
    pub fn envelope_refined(
        &self,
        t: f64,
        u: &Vector,
        tol: f64,
        n_max: u32,
    ) -> Result<(Vector, EnvelopeDiagnostics)> {
        if !(tol > 0.0) {
            return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
        }
        check_level(n_max)?;
        let dir = self.family.direction();
        let first = self.envelope(t, 0, u)?;
        let mut levels = vec![LevelRecord {
            n: 0,
            value: first,
            increment: None,
            monotone: true,
        }];
        let mut converged = t == 0.0;
        let mut n = 0;
        while !converged && n < n_max {
            n += 1;
            let value = self.envelope(t, n, u)?;
            let prev = &levels.last().expect("nonempty").value;
            let increment = value.max_abs_diff(prev);
            let monotone = value.iter().zip(prev.iter()).all(|(&a, &b)| match dir {
                Direction::Upper => a >= b - REFINEMENT_SLACK,
                Direction::Lower => a <= b + REFINEMENT_SLACK,
            });
            converged = increment <= tol;
            levels.push(LevelRecord {
                n,
                value,
                increment: Some(increment),
                monotone,
            });
        }
        let value = levels.last().expect("nonempty").value.clone();
        Ok((
            value,
            EnvelopeDiagnostics {
                levels,
                converged,
                final_level: n,
            },
        ))
    }

    /// `S_θ u`: each step applies the row-wise mixture of member flows.
    pub fn control_evaluate(&self, theta: &Control, u: &Vector) -> Result<Vector> {
        let d = self.family.dim();
        u.check_dim(d)?;
        let mut v = u.clone();
        for step in theta.steps().iter().rev() {
            if step.selection.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: step.selection.len(),
                });
            }
            let mut next = Vector::zeros(d);
            for (i, &k) in step.selection.iter().enumerate() {
                next[i] = self.flow(k, step.duration)?.apply_row(i, &v);
            }
            v = next;
        }
        Ok(v)
    }

    /// Runs the level-`n` envelope recording the attaining member per state
    /// and step, and returns those choices as a control that
    /// [`Envelope::control_evaluate`] replays.
    pub fn extract_worst_case_control(&self, t: f64, n: u32, u: &Vector) -> Result<Control> {
        check_time(t)?;
        check_level(n)?;
        u.check_dim(self.family.dim())?;
        if t == 0.0 {
            return Ok(Control::default());
        }
        let steps = 1usize << n;
        let h = t / steps as f64;
        let flows = self.flows(h)?;
        let dir = self.family.direction();
        let mut v = u.clone();
        let mut applied = Vec::with_capacity(steps);
        for _ in 0..steps {
            let (next, arg) = best_of(dir, &flows, &v);
            applied.push(ControlStep {
                selection: arg,
                duration: h,
            });
            v = next;
        }
        // the first step applied to u is the innermost, i.e. the last one
        applied.reverse();
        Control::new(applied)
    }
}

fn check_time(t: f64) -> Result<()> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "time must be finite and nonnegative, got {t}"
        )));
    }
    Ok(())
}

fn best_of(dir: Direction, flows: &[Arc<AffineFlow>], u: &Vector) -> (Vector, Vec<usize>) {
    let d = u.dim();
    let mut best = Vector::zeros(d);
    let mut arg = vec![0usize; d];
    for i in 0..d {
        for (k, flow) in flows.iter().enumerate() {
            let v = flow.apply_row(i, u);
            if k == 0 || dir.better(v, best[i]) {
                best[i] = v;
                arg[i] = k;
            }
        }
    }
    (best, arg)
}

/// `E_h u` with exact exponentials.
pub fn one_step(fam: &GeneratorFamily, h: f64, u: &Vector) -> Result<Vector> {
    Envelope::new(fam).one_step(h, u)
}

/// `E_π u` with exact exponentials.
pub fn iterate_partition(fam: &GeneratorFamily, pi: &Partition, u: &Vector) -> Result<Vector> {
    Envelope::new(fam).iterate_partition(pi, u)
}

/// Level-`n` dyadic envelope with exact exponentials.
pub fn envelope(fam: &GeneratorFamily, t: f64, n: u32, u: &Vector) -> Result<Vector> {
    Envelope::new(fam).envelope(t, n, u)
}

pub fn envelope_refined(
    fam: &GeneratorFamily,
    t: f64,
    u: &Vector,
    tol: f64,
    n_max: u32,
) -> Result<(Vector, EnvelopeDiagnostics)> {
    Envelope::new(fam).envelope_refined(t, u, tol, n_max)
}

pub fn control_evaluate(fam: &GeneratorFamily, theta: &Control, u: &Vector) -> Result<Vector> {
    Envelope::new(fam).control_evaluate(theta, u)
}

pub fn extract_worst_case_control(
    fam: &GeneratorFamily,
    t: f64,
    n: u32,
    u: &Vector,
) -> Result<Control> {
    Envelope::new(fam).extract_worst_case_control(t, n, u)
}
