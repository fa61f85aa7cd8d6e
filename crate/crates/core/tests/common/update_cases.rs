//! Random instances comparing the closed-form update rules with the
//! numeric minimizers in `argmin`.

#![allow(dead_code)]

use dmb_core::update::{composite_da_apply, da_apply, md_apply};
use dmb_core::{project, BregmanGenerator, FeasibleSet, Rng, UpdateState, Vector};

use super::argmin;

/// Largest coordinate discrepancy over the instances of one rule.
#[derive(Debug, Clone, Copy)]
pub struct OracleReport {
    pub instances: usize,
    pub max_error: f64,
}

fn random_vector(rng: &mut Rng, n: usize, scale: f64) -> Vector {
    (0..n).map(|_| scale * rng.normal()).collect()
}

fn random_set(rng: &mut Rng, n: usize) -> FeasibleSet {
    match rng.below(3) {
        0 => FeasibleSet::Unconstrained,
        1 => FeasibleSet::ball(0.2 + 2.0 * rng.uniform()).unwrap(),
        _ => {
            let lower: Vector = (0..n).map(|_| -0.1 - rng.uniform()).collect();
            let upper: Vector = (0..n).map(|_| 0.1 + rng.uniform()).collect();
            FeasibleSet::boxed(lower, upper).unwrap()
        }
    }
}

fn weighted_oracle(set: &FeasibleSet, g: &[f64], alpha: f64, weights: &[f64], center: &[f64]) -> Vec<f64> {
    match set {
        FeasibleSet::Unconstrained => argmin::weighted_quadratic_free(g, alpha, weights, center),
        FeasibleSet::Ball { radius } => argmin::weighted_quadratic_on_ball(g, alpha, weights, center, *radius),
        FeasibleSet::Box { lower, upper } => {
            argmin::weighted_quadratic_on_box(g, alpha, weights, center, lower.as_slice(), upper.as_slice())
        }
    }
}

/// Dual averaging: `argmin_W ⟨s, w⟩ + (α/2)‖w‖²`.
pub fn dual_averaging(seed: u64, instances: usize) -> OracleReport {
    let mut rng = Rng::new(seed);
    let mut max_error: f64 = 0.0;
    for _ in 0..instances {
        let n = 1 + rng.below(8);
        let set = random_set(&mut rng, n);
        let alpha = 0.5 + 4.5 * rng.uniform();
        let mut state = UpdateState::initial(Vector::zeros(n));
        let mut s = Vector::zeros(n);
        for _ in 0..1 + rng.below(4) {
            let g = random_vector(&mut rng, n, 2.0);
            s.add_assign(&g).unwrap();
            da_apply(&mut state, &g, alpha, &set).unwrap();
        }
        let ones = vec![1.0; n];
        let zeros = vec![0.0; n];
        let oracle = weighted_oracle(&set, s.as_slice(), alpha, &ones, &zeros);
        max_error = max_error.max(argmin::max_abs_diff(state.predictor().as_slice(), &oracle));
    }
    OracleReport { instances, max_error }
}

/// Mirror descent: `argmin_W ⟨g, w⟩ + (L + β) d(w, w_i)` with Euclidean or
/// diagonal generators.
pub fn mirror_descent(seed: u64, instances: usize) -> OracleReport {
    let mut rng = Rng::new(seed);
    let mut max_error: f64 = 0.0;
    for _ in 0..instances {
        let n = 1 + rng.below(8);
        let set = random_set(&mut rng, n);
        let (generator, weights) = if rng.bernoulli(0.5) {
            (BregmanGenerator::Euclidean, vec![1.0; n])
        } else {
            let w: Vec<f64> = (0..n).map(|_| 1.0 + 2.0 * rng.uniform()).collect();
            (BregmanGenerator::diagonal(Vector::new(w.clone())).unwrap(), w)
        };
        let center = project(&set, &random_vector(&mut rng, n, 1.0)).unwrap();
        let g = random_vector(&mut rng, n, 2.0);
        let smoothness = rng.uniform();
        let beta = 0.2 + 3.0 * rng.uniform();
        let mut state = UpdateState::initial(center.clone());
        md_apply(&mut state, &g, beta, smoothness, &generator, &set).unwrap();
        let oracle = weighted_oracle(&set, g.as_slice(), smoothness + beta, &weights, center.as_slice());
        max_error = max_error.max(argmin::max_abs_diff(state.predictor().as_slice(), &oracle));
    }
    OracleReport { instances, max_error }
}

/// ℓ1 dual averaging: `argmin ⟨s, w⟩ + jλ‖w‖₁ + (α/2)‖w‖²` after `j` steps.
pub fn composite(seed: u64, instances: usize) -> OracleReport {
    let mut rng = Rng::new(seed);
    let mut max_error: f64 = 0.0;
    for _ in 0..instances {
        let n = 1 + rng.below(8);
        let lambda = 0.5 * rng.uniform();
        let alpha = 0.5 + 4.5 * rng.uniform();
        let mut state = UpdateState::initial(Vector::zeros(n));
        let steps = 1 + rng.below(5);
        for _ in 0..steps {
            let g = random_vector(&mut rng, n, 1.0);
            composite_da_apply(&mut state, &g, alpha, lambda).unwrap();
        }
        let tau = steps as f64 * lambda;
        let oracle = argmin::l1_quadratic(state.grad_sum().as_slice(), tau, alpha);
        max_error = max_error.max(argmin::max_abs_diff(state.predictor().as_slice(), &oracle));
    }
    OracleReport { instances, max_error }
}
