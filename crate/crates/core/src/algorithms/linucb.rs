use nalgebra::DMatrix;
use rand::RngCore;

use super::{argmax_random_tie, BanditAlgorithm};

/// Above this estimate of cond(A) the inverse is recomputed from `A`
/// instead of trusting the accumulated Sherman-Morrison updates.
const CONDITION_LIMIT: f64 = 1e12;

/// Disjoint LinUCB: one ridge regression per action.
///
/// `theta_a = A_a^-1 b_a`, `score_a = theta_a . x + alpha * sqrt(x' A_a^-1 x)`
/// with `A_a` initialized to `ridge * I`. The inverse is maintained with
/// rank-one updates, so a learn step is O(d^2).
#[derive(Debug, Clone)]
pub struct LinUcb {
    d: usize,
    alpha: f64,
    ridge: f64,
    arms: Vec<Arm>,
}

#[derive(Debug, Clone)]
struct Arm {
    // row-major d x d
    design: Vec<f64>,
    inverse: Vec<f64>,
    response: Vec<f64>,
    theta: Vec<f64>,
}

impl LinUcb {
    pub fn new(k: usize, d: usize, alpha: f64, ridge: f64) -> Self {
        assert!(k >= 1, "LinUCB needs at least one action");
        assert!(ridge > 0.0, "ridge must be positive");
        let mut eye = vec![0.0; d * d];
        let mut eye_inv = vec![0.0; d * d];
        for i in 0..d {
            eye[i * d + i] = ridge;
            eye_inv[i * d + i] = 1.0 / ridge;
        }
        let arm = Arm {
            design: eye,
            inverse: eye_inv,
            response: vec![0.0; d],
            theta: vec![0.0; d],
        };
        LinUcb {
            d,
            alpha,
            ridge,
            arms: vec![arm; k],
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    pub fn theta(&self, action: usize) -> &[f64] {
        &self.arms[action].theta
    }

    pub fn response(&self, action: usize) -> &[f64] {
        &self.arms[action].response
    }

    /// `A_a` as a matrix.
    pub fn design_matrix(&self, action: usize) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.d, self.d, &self.arms[action].design)
    }

    /// The maintained `A_a^-1`.
    pub fn inverse_matrix(&self, action: usize) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.d, self.d, &self.arms[action].inverse)
    }

    pub fn scores(&self, context: &[f64]) -> Vec<f64> {
        let mut scratch = vec![0.0; self.d];
        self.arms
            .iter()
            .map(|arm| self.score(arm, context, &mut scratch))
            .collect()
    }

    fn score(&self, arm: &Arm, x: &[f64], scratch: &mut [f64]) -> f64 {
        let mean = dot(&arm.theta, x);
        if self.alpha == 0.0 {
            return mean;
        }
        mat_vec(&arm.inverse, x, scratch);
        let width = dot(x, scratch).max(0.0).sqrt();
        mean + self.alpha * width
    }
}

impl Arm {
    fn update(&mut self, x: &[f64], reward: bool) {
        let d = x.len();
        let mut v = vec![0.0; d];
        mat_vec(&self.inverse, x, &mut v);
        let denom = 1.0 + dot(x, &v);
        for i in 0..d {
            let vi = v[i] / denom;
            let row = &mut self.inverse[i * d..(i + 1) * d];
            for (j, cell) in row.iter_mut().enumerate() {
                *cell -= vi * v[j];
            }
            let row = &mut self.design[i * d..(i + 1) * d];
            for (j, cell) in row.iter_mut().enumerate() {
                *cell += x[i] * x[j];
            }
        }
        if reward {
            for (b, xi) in self.response.iter_mut().zip(x) {
                *b += xi;
            }
        }
        if condition_estimate(&self.design, &self.inverse, d) > CONDITION_LIMIT {
            self.refactor(d);
        }
        let mut theta = vec![0.0; d];
        mat_vec(&self.inverse, &self.response, &mut theta);
        self.theta = theta;
    }

    /// Recomputes the inverse from the design matrix by Cholesky.
    fn refactor(&mut self, d: usize) {
        let a = DMatrix::from_row_slice(d, d, &self.design);
        if let Some(chol) = a.cholesky() {
            let inv = chol.inverse();
            for i in 0..d {
                for j in 0..d {
                    self.inverse[i * d + j] = inv[(i, j)];
                }
            }
        }
    }
}

impl BanditAlgorithm for LinUcb {
    fn n_actions(&self) -> usize {
        self.arms.len()
    }

    fn choose(&self, context: &[f64], rng: &mut dyn RngCore) -> usize {
        debug_assert_eq!(context.len(), self.d);
        let scores = self.scores(context);
        argmax_random_tie(&scores, rng)
    }

    fn learn(&mut self, context: &[f64], action: usize, reward: bool) {
        self.arms[action].update(context, reward);
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn mat_vec(m: &[f64], x: &[f64], out: &mut [f64]) {
    let d = x.len();
    for (i, o) in out.iter_mut().enumerate() {
        *o = dot(&m[i * d..(i + 1) * d], x);
    }
}

/// `||A||_inf * ||A^-1||_inf`; infinite if the inverse went non-finite.
fn condition_estimate(a: &[f64], inv: &[f64], d: usize) -> f64 {
    let norm = |m: &[f64]| {
        (0..d)
            .map(|i| m[i * d..(i + 1) * d].iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    };
    let c = norm(a) * norm(inv);
    if c.is_finite() {
        c
    } else {
        f64::INFINITY
    }
}
