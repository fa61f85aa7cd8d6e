//! Update rules `(w_{j+1}, a_{j+1}) = φ(a_j, g_j, α_j)`.
//!
//! Every rule keeps the current predictor in its state; dual-averaging
//! rules additionally keep the running gradient sum. All rules start from
//! `w₁ = argmin_W h`, which is the projection of the origin for the
//! generators supported here.

use crate::bregman::BregmanGenerator;
use crate::error::{check_dim, Error, Result};
use crate::feasible::{project, project_in_place, FeasibleSet};
use crate::vector::Vector;

/// Auxiliary state `a_j` of an update rule.
#[derive(Debug, Clone, PartialEq)]
pub struct UpdateState {
    step: u64,
    predictor: Vector,
    grad_sum: Vector,
}

impl UpdateState {
    /// State before any gradient has been seen, predicting `w₁`.
    pub fn initial(predictor: Vector) -> Self {
        let dim = predictor.dim();
        UpdateState {
            step: 0,
            predictor,
            grad_sum: Vector::zeros(dim),
        }
    }

    /// Number of updates applied so far.
    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn predictor(&self) -> &Vector {
        &self.predictor
    }

    /// `Σ g_i` over all gradients fed so far.
    pub fn grad_sum(&self) -> &Vector {
        &self.grad_sum
    }

    pub fn dim(&self) -> usize {
        self.predictor.dim()
    }

    fn advance(&mut self, g: &Vector, next: Vector) -> Result<()> {
        self.grad_sum.add_assign(g)?;
        self.predictor = next;
        self.step += 1;
        Ok(())
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(Error::Schedule(format!("alpha must be positive, got {alpha}")))
    }
}

/// Projected gradient step `w_{j+1} = π_W(w_j − g/α)`.
pub fn pgd_apply(state: &mut UpdateState, g: &Vector, alpha: f64, set: &FeasibleSet) -> Result<()> {
    check_alpha(alpha)?;
    check_dim(state.dim(), g.dim())?;
    let mut next = state.predictor.clone();
    next.axpy(-1.0 / alpha, g)?;
    project_in_place(set, &mut next)?;
    state.advance(g, next)
}

/// Euclidean dual averaging `w_{j+1} = π_W(−(1/α) Σ g_i)`.
pub fn da_apply(state: &mut UpdateState, g: &Vector, alpha: f64, set: &FeasibleSet) -> Result<()> {
    check_alpha(alpha)?;
    check_dim(state.dim(), g.dim())?;
    let mut sum = state.grad_sum.clone();
    sum.add_assign(g)?;
    let mut next = sum.map(|s| -s / alpha);
    project_in_place(set, &mut next)?;
    state.grad_sum = sum;
    state.predictor = next;
    state.step += 1;
    Ok(())
}

/// Mirror descent `w_{i+1} = argmin_W ⟨g, w⟩ + (L + β) d(w, w_i)`.
pub fn md_apply(
    state: &mut UpdateState,
    g: &Vector,
    beta: f64,
    smoothness: f64,
    generator: &BregmanGenerator,
    set: &FeasibleSet,
) -> Result<()> {
    if !(beta >= 0.0) || !(smoothness >= 0.0) {
        return Err(Error::Schedule(format!(
            "mirror descent needs beta >= 0 and L >= 0, got beta={beta}, L={smoothness}"
        )));
    }
    mirror_apply(state, g, smoothness + beta, generator, set)
}

fn mirror_apply(
    state: &mut UpdateState,
    g: &Vector,
    alpha: f64,
    generator: &BregmanGenerator,
    set: &FeasibleSet,
) -> Result<()> {
    check_alpha(alpha)?;
    check_dim(state.dim(), g.dim())?;
    let next = generator.mirror_step(g, alpha, &state.predictor, set)?;
    state.advance(g, next)
}

/// ℓ1-regularized dual averaging on unconstrained `W` with Euclidean `h`:
/// `w_{j+1} = argmin ⟨ḡ, w⟩ + λ‖w‖₁ + (α/j)·½‖w‖²` with `ḡ = (1/j) Σ g_i`.
///
/// Evaluated on the raw sum as `−sign(s)·max(|s| − jλ, 0)/α`, which equals the
/// soft-thresholded average form and coincides bitwise with [`da_apply`]
/// when `λ = 0`. Coordinates with `|ḡ_t| = λ` map to zero.
pub fn composite_da_apply(state: &mut UpdateState, g: &Vector, alpha: f64, lambda: f64) -> Result<()> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::Input(format!("lambda must be >= 0, got {lambda}")));
    }
    check_alpha(alpha)?;
    check_dim(state.dim(), g.dim())?;
    let mut sum = state.grad_sum.clone();
    sum.add_assign(g)?;
    let j = (state.step + 1) as f64;
    let threshold = j * lambda;
    let next = sum.map(|s| {
        let shrunk = (s.abs() - threshold).max(0.0);
        if shrunk == 0.0 {
            0.0
        } else {
            -(s.signum() * shrunk) / alpha
        }
    });
    state.grad_sum = sum;
    state.predictor = next;
    state.step += 1;
    Ok(())
}

/// A deterministic update rule.
#[derive(Debug, Clone, PartialEq)]
pub enum Rule {
    ProjectedGradient { set: FeasibleSet },
    DualAveraging { set: FeasibleSet },
    /// Mirror descent; the schedule's `α_j` plays the role of `L + β_j`.
    MirrorDescent {
        set: FeasibleSet,
        generator: BregmanGenerator,
    },
    CompositeDualAveraging { lambda: f64 },
}

impl Rule {
    pub fn name(&self) -> &'static str {
        match self {
            Rule::ProjectedGradient { .. } => "pgd",
            Rule::DualAveraging { .. } => "da",
            Rule::MirrorDescent { .. } => "md",
            Rule::CompositeDualAveraging { .. } => "composite-da",
        }
    }

    pub fn feasible_set(&self) -> &FeasibleSet {
        match self {
            Rule::ProjectedGradient { set }
            | Rule::DualAveraging { set }
            | Rule::MirrorDescent { set, .. } => set,
            Rule::CompositeDualAveraging { .. } => &FeasibleSet::Unconstrained,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.feasible_set().validate()?;
        if let Rule::CompositeDualAveraging { lambda } = self {
            if !(*lambda >= 0.0) {
                return Err(Error::Input(format!("lambda must be >= 0, got {lambda}")));
            }
        }
        Ok(())
    }

    /// State predicting `w₁ = argmin_W h`.
    pub fn initial_state(&self, dim: usize) -> Result<UpdateState> {
        let origin = Vector::zeros(dim);
        let w1 = project(self.feasible_set(), &origin)?;
        Ok(UpdateState::initial(w1))
    }

    pub fn apply(&self, state: &mut UpdateState, g: &Vector, alpha: f64) -> Result<()> {
        match self {
            Rule::ProjectedGradient { set } => pgd_apply(state, g, alpha, set),
            Rule::DualAveraging { set } => da_apply(state, g, alpha, set),
            Rule::MirrorDescent { set, generator } => mirror_apply(state, g, alpha, generator, set),
            Rule::CompositeDualAveraging { lambda } => composite_da_apply(state, g, alpha, *lambda),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    fn v(x: &[f64]) -> Vector {
        Vector::new(x.to_vec())
    }

    #[test]
    fn pgd_examples() {
        let ball10 = FeasibleSet::ball(10.0).unwrap();
        let mut s = UpdateState::initial(Vector::zeros(2));
        pgd_apply(&mut s, &v(&[1.0, 0.0]), 2.0, &ball10).unwrap();
        assert_eq!(s.predictor(), &v(&[-0.5, 0.0]));
        assert_eq!(s.step(), 1);

        let mut s = UpdateState::initial(Vector::zeros(2));
        pgd_apply(&mut s, &v(&[-3.0, -4.0]), 1.0, &FeasibleSet::ball(1.0).unwrap()).unwrap();
        assert!((s.predictor()[0] - 0.6).abs() < 1e-15 && (s.predictor()[1] - 0.8).abs() < 1e-15);

        let mut s = UpdateState::initial(v(&[0.3, -0.2]));
        pgd_apply(&mut s, &Vector::zeros(2), 5.0, &ball10).unwrap();
        assert_eq!(s.predictor(), &v(&[0.3, -0.2]));
    }

    #[test]
    fn nonpositive_alpha_is_a_schedule_error() {
        let mut s = UpdateState::initial(Vector::zeros(2));
        let g = v(&[1.0, 1.0]);
        for alpha in [0.0, -1.0, f64::NAN] {
            assert!(matches!(
                pgd_apply(&mut s, &g, alpha, &FeasibleSet::Unconstrained),
                Err(Error::Schedule(_))
            ));
            assert!(matches!(
                da_apply(&mut s, &g, alpha, &FeasibleSet::Unconstrained),
                Err(Error::Schedule(_))
            ));
        }
        assert!(matches!(
            md_apply(&mut s, &g, 0.0, 0.0, &BregmanGenerator::Euclidean, &FeasibleSet::Unconstrained),
            Err(Error::Schedule(_))
        ));
        assert_eq!(s.step(), 0);
    }

    #[test]
    fn da_examples() {
        let rule = Rule::DualAveraging {
            set: FeasibleSet::ball(10.0).unwrap(),
        };
        let mut s = rule.initial_state(2).unwrap();
        assert_eq!(s.predictor(), &Vector::zeros(2));
        rule.apply(&mut s, &v(&[1.0, 0.0]), 2.0).unwrap();
        assert_eq!(s.predictor(), &v(&[-0.5, 0.0]));
        assert_eq!(s.grad_sum(), &v(&[1.0, 0.0]));
    }

    #[test]
    fn md_examples() {
        let mut s = UpdateState::initial(Vector::zeros(2));
        md_apply(&mut s, &v(&[2.0, 0.0]), 1.0, 1.0, &BregmanGenerator::Euclidean, &FeasibleSet::Unconstrained)
            .unwrap();
        assert_eq!(s.predictor(), &v(&[-1.0, 0.0]));
        let before = s.predictor().clone();
        md_apply(&mut s, &Vector::zeros(2), 1.0, 1.0, &BregmanGenerator::Euclidean, &FeasibleSet::Unconstrained)
            .unwrap();
        assert_eq!(s.predictor(), &before);
    }

    #[test]
    fn composite_with_zero_lambda_is_dual_averaging() {
        let mut rng = Rng::new(21);
        let mut a = UpdateState::initial(Vector::zeros(4));
        let mut b = a.clone();
        for j in 1..50u64 {
            let g: Vector = (0..4).map(|_| rng.normal()).collect();
            let alpha = 1.0 + (j as f64).sqrt();
            da_apply(&mut a, &g, alpha, &FeasibleSet::Unconstrained).unwrap();
            composite_da_apply(&mut b, &g, alpha, 0.0).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn composite_kills_small_averages() {
        let mut s = UpdateState::initial(Vector::zeros(3));
        composite_da_apply(&mut s, &v(&[0.5, -0.5, 0.2]), 1.0, 0.5).unwrap();
        assert_eq!(s.predictor(), &Vector::zeros(3));
        composite_da_apply(&mut s, &v(&[0.5, -0.5, 0.2]), 1.0, 0.5).unwrap();
        assert_eq!(s.predictor(), &Vector::zeros(3));
        assert!(composite_da_apply(&mut s, &v(&[0.0; 3]), 1.0, -0.1).is_err());
    }

    #[test]
    fn euclidean_md_equals_pgd_along_trajectories() {
        let mut rng = Rng::new(22);
        let set = FeasibleSet::ball(2.0).unwrap();
        let sched = crate::schedule::Schedule::sqrt(1.0, 0.7).unwrap();
        let mut a = UpdateState::initial(Vector::zeros(3));
        let mut b = a.clone();
        for j in 1..200 {
            let g: Vector = (0..3).map(|_| 3.0 * rng.normal()).collect();
            let alpha = sched.alpha(j);
            pgd_apply(&mut a, &g, alpha, &set).unwrap();
            md_apply(&mut b, &g, alpha - sched.smoothness(), sched.smoothness(), &BregmanGenerator::Euclidean, &set)
                .unwrap();
            let gap = a.predictor().dist_sq(b.predictor()).unwrap().sqrt();
            assert!(gap <= 1e-12, "step {j}: {gap}");
        }
    }

    #[test]
    fn outputs_stay_feasible() {
        let mut rng = Rng::new(23);
        let ball = FeasibleSet::ball(1.0).unwrap();
        let boxed = FeasibleSet::boxed(v(&[-0.5, 0.0]), v(&[0.5, 2.0])).unwrap();
        let rules = [
            Rule::ProjectedGradient { set: ball.clone() },
            Rule::DualAveraging { set: ball.clone() },
            Rule::DualAveraging { set: boxed.clone() },
            Rule::MirrorDescent {
                set: ball.clone(),
                generator: BregmanGenerator::diagonal(v(&[1.0, 2.0])).unwrap(),
            },
            Rule::MirrorDescent {
                set: boxed.clone(),
                generator: BregmanGenerator::Euclidean,
            },
        ];
        for rule in rules {
            let mut s = rule.initial_state(2).unwrap();
            assert!(rule.feasible_set().contains(s.predictor(), 1e-12));
            for j in 1..300u64 {
                let g: Vector = (0..2).map(|_| 5.0 * rng.normal()).collect();
                rule.apply(&mut s, &g, 0.5 + 0.1 * (j as f64).sqrt()).unwrap();
                assert!(rule.feasible_set().contains(s.predictor(), 1e-12), "{}", rule.name());
            }
        }
    }

    #[test]
    fn rules_are_deterministic() {
        let mut rng = Rng::new(24);
        let grads: Vec<Vector> = (0..100).map(|_| (0..3).map(|_| rng.normal()).collect()).collect();
        let rule = Rule::MirrorDescent {
            set: FeasibleSet::ball(1.0).unwrap(),
            generator: BregmanGenerator::diagonal(v(&[1.0, 1.5, 3.0])).unwrap(),
        };
        let run = || {
            let mut s = rule.initial_state(3).unwrap();
            for (j, g) in grads.iter().enumerate() {
                rule.apply(&mut s, g, 1.0 + (j as f64 + 1.0).sqrt()).unwrap();
            }
            s
        };
        let (a, b) = (run(), run());
        assert_eq!(
            a.predictor().iter().map(|x| x.to_bits()).collect::<Vec<_>>(),
            b.predictor().iter().map(|x| x.to_bits()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn dual_averaging_depends_only_on_the_sum() {
        // Integer gradients keep every partial sum exact, so any order of
        // the prefix must give the identical predictor.
        let mut rng = Rng::new(25);
        let set = FeasibleSet::ball(3.0).unwrap();
        let mut grads: Vec<Vector> = (0..30)
            .map(|_| (0..3).map(|_| (rng.below(21) as f64) - 10.0).collect())
            .collect();
        let run = |grads: &[Vector]| {
            let mut s = UpdateState::initial(Vector::zeros(3));
            for g in grads {
                da_apply(&mut s, g, 7.0, &set).unwrap();
            }
            s.predictor().clone()
        };
        let reference = run(&grads);
        for _ in 0..10 {
            for i in (1..grads.len()).rev() {
                grads.swap(i, rng.below(i + 1));
            }
            assert_eq!(run(&grads), reference);
        }
    }
}
