#![allow(dead_code)]

use ctmc_envelope::{Direction, GeneratorFamily, Matrix, Member, QMatrix, Vector};
use rand::Rng;

/// Closed-form `e^{tq}` for `q = [[-a, a], [b, -b]]`.
pub fn two_state_exp(a: f64, b: f64, t: f64) -> [[f64; 2]; 2] {
    let s = a + b;
    let e = (-s * t).exp();
    [
        [(b + a * e) / s, a * (1.0 - e) / s],
        [b * (1.0 - e) / s, (a + b * e) / s],
    ]
}

pub fn two_state(a: f64, b: f64) -> QMatrix {
    QMatrix::new(Matrix::from_rows(&[[-a, a], [b, -b]]).unwrap()).unwrap()
}

/// Rate matrix with off-diagonal rates uniform in `[0, max_rate)`.
pub fn random_q<R: Rng>(rng: &mut R, d: usize, max_rate: f64) -> QMatrix {
    let mut m = Matrix::zeros(d);
    for i in 0..d {
        let mut sum = 0.0;
        for j in 0..d {
            if i != j {
                let r = rng.gen_range(0.0..max_rate);
                m[(i, j)] = r;
                sum += r;
            }
        }
        m[(i, i)] = -sum;
    }
    QMatrix::new(m).unwrap()
}

pub fn random_vector<R: Rng>(rng: &mut R, d: usize, scale: f64) -> Vector {
    Vector::new((0..d).map(|_| rng.gen_range(-scale..scale)).collect())
}

/// Two to four members; with `penalised`, all but one carry a random
/// nonpositive penalty.
pub fn random_family<R: Rng>(rng: &mut R, d: usize, penalised: bool, direction: Direction) -> GeneratorFamily {
    let m = rng.gen_range(2..=4);
    let zero_at = rng.gen_range(0..m);
    let members = (0..m)
        .map(|k| {
            let q = random_q(rng, d, 2.0);
            let penalty = if penalised && k != zero_at {
                Vector::new((0..d).map(|_| -rng.gen_range(0.0..0.5)).collect())
            } else {
                Vector::zeros(d)
            };
            Member { q, penalty }
        })
        .collect();
    GeneratorFamily::new(members, direction).unwrap()
}

pub fn assert_le(a: &Vector, b: &Vector, slack: f64, what: &str) {
    for i in 0..a.dim() {
        assert!(a[i] <= b[i] + slack, "{what}: component {i}: {} > {} + {slack}", a[i], b[i]);
    }
}
