//! Serial engines: one update per input, and one update per mini-batch of
//! `b` inputs fed the batch-averaged gradient.

use crate::error::{Error, Result};
use crate::ledger::{RegretLedger, RegretTerm};
use crate::problem::Problem;
use crate::rng::Rng;
use crate::schedule::Schedule;
use crate::update::{Rule, UpdateState};
use crate::vector::{Vector, VectorAccumulator};

/// What a run keeps beyond the streaming aggregates.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Keep every per-input regret term in the ledger.
    pub record_terms: bool,
    /// Keep the predictor used for each update period.
    pub record_iterates: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub ledger: RegretLedger,
    pub state: UpdateState,
    /// `(1/m) Σ w_i` over every prediction made.
    pub predictor_mean: Vector,
    pub updates: u64,
    /// Predictor of each update period (one per input for serial runs, one
    /// per batch otherwise), when requested.
    pub iterates: Option<Vec<Vector>>,
}

/// Shared per-input bookkeeping for the online engines.
#[derive(Debug, Clone)]
pub(crate) struct Observer<'a> {
    problem: &'a Problem,
    ledger: RegretLedger,
    predictor_sum: VectorAccumulator,
    iterates: Option<Vec<Vector>>,
}

impl<'a> Observer<'a> {
    pub(crate) fn new(problem: &'a Problem, options: RunOptions) -> Self {
        Observer {
            problem,
            ledger: RegretLedger::new(problem.minimizer.is_some(), options.record_terms),
            predictor_sum: VectorAccumulator::new(problem.dim),
            iterates: options.record_iterates.then(Vec::new),
        }
    }

    /// Suffers the loss of predicting `w` on `z`.
    pub(crate) fn observe(&mut self, w: &Vector, z: &Vector) -> Result<f64> {
        let loss = self.problem.loss_value(w, z)?;
        let comparator_loss = match &self.problem.minimizer {
            Some(w_star) => Some(self.problem.loss_value(w_star, z)?),
            None => None,
        };
        self.ledger.record(RegretTerm {
            loss,
            comparator_loss,
        });
        Ok(loss)
    }

    /// Accounts `inputs` predictions made with `w` in the predictor mean.
    pub(crate) fn hold(&mut self, w: &Vector, inputs: u64) -> Result<()> {
        if inputs > 0 {
            self.predictor_sum.add_weighted(inputs as f64, w)?;
            if let Some(it) = &mut self.iterates {
                it.push(w.clone());
            }
        }
        Ok(())
    }

    pub(crate) fn finish(mut self, state: UpdateState) -> RunOutcome {
        self.ledger.finish();
        let m = self.ledger.inputs().max(1) as f64;
        RunOutcome {
            predictor_mean: self.predictor_sum.total().map(|x| x / m),
            updates: state.step(),
            ledger: self.ledger,
            state,
            iterates: self.iterates,
        }
    }
}

pub(crate) fn check_horizon(m: u64) -> Result<()> {
    if m == 0 {
        Err(Error::Input("horizon m must be >= 1".into()))
    } else {
        Ok(())
    }
}

/// Serial online prediction: predict, observe, suffer, update, per input.
pub fn run_serial(
    rule: &Rule,
    schedule: &Schedule,
    problem: &Problem,
    m: u64,
    rng: &Rng,
) -> Result<RunOutcome> {
    run_serial_with(rule, schedule, problem, m, rng, RunOptions::default())
}

pub fn run_serial_with(
    rule: &Rule,
    schedule: &Schedule,
    problem: &Problem,
    m: u64,
    rng: &Rng,
    options: RunOptions,
) -> Result<RunOutcome> {
    check_horizon(m)?;
    rule.validate()?;
    let mut state = rule.initial_state(problem.dim)?;
    let mut stream = problem.stream(rng.clone());
    let mut observer = Observer::new(problem, options);
    for _ in 0..m {
        let z = stream.next_input()?;
        let w = state.predictor();
        observer.observe(w, &z)?;
        observer.hold(w, 1)?;
        let g = problem.loss_gradient(w, &z)?;
        let alpha = schedule.alpha(state.step() + 1);
        rule.apply(&mut state, &g, alpha)?;
    }
    Ok(observer.finish(state))
}

/// Serial mini-batch prediction with batch size `b`.
///
/// The predictor is fixed within a batch; gradients are summed in input
/// order with compensation and divided by `b` once at the batch end. A
/// trailing partial batch is predicted on and counted but never updates.
pub fn run_minibatch(
    rule: &Rule,
    schedule: &Schedule,
    problem: &Problem,
    m: u64,
    b: u64,
    rng: &Rng,
) -> Result<RunOutcome> {
    run_minibatch_with(rule, schedule, problem, m, b, rng, RunOptions::default())
}

pub fn run_minibatch_with(
    rule: &Rule,
    schedule: &Schedule,
    problem: &Problem,
    m: u64,
    b: u64,
    rng: &Rng,
    options: RunOptions,
) -> Result<RunOutcome> {
    check_horizon(m)?;
    if b == 0 {
        return Err(Error::Input("batch size must be >= 1".into()));
    }
    rule.validate()?;
    let mut state = rule.initial_state(problem.dim)?;
    let mut stream = problem.stream(rng.clone());
    let mut observer = Observer::new(problem, options);
    let mut acc = VectorAccumulator::new(problem.dim);
    let mut seen = 0u64;
    while seen < m {
        let batch = b.min(m - seen);
        acc.reset();
        let w = state.predictor();
        for _ in 0..batch {
            let z = stream.next_input()?;
            observer.observe(w, &z)?;
            acc.add(&problem.loss_gradient(w, &z)?)?;
        }
        observer.hold(w, batch)?;
        seen += batch;
        if batch == b {
            let g_bar = acc.total().map(|x| x / b as f64);
            let alpha = schedule.alpha(state.step() + 1);
            rule.apply(&mut state, &g_bar, alpha)?;
        }
    }
    Ok(observer.finish(state))
}

/// Empirical `E‖∇f̄(w, z̄) − ∇F(w)‖²` over `samples` mini-batches of size `b`.
pub fn empirical_avg_grad_variance(
    problem: &Problem,
    w: &Vector,
    b: usize,
    samples: usize,
    rng: &Rng,
) -> Result<f64> {
    problem.empirical_grad_variance(w, b, samples, rng.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feasible::FeasibleSet;
    use crate::loss::Loss;

    fn da() -> Rule {
        Rule::DualAveraging {
            set: FeasibleSet::Unconstrained,
        }
    }

    fn quad() -> Problem {
        Problem::quadratic(Vector::new(vec![1.0, 1.0]), 1.0).unwrap()
    }

    #[test]
    fn single_input_predicts_the_origin() {
        let p = quad();
        let s = Schedule::variance_tuned(1.0, p.sigma(), p.diameter, 1).unwrap();
        let out = run_serial_with(&da(), &s, &p, 1, &Rng::new(1), RunOptions { record_iterates: true, record_terms: true }).unwrap();
        assert_eq!(out.iterates.unwrap(), vec![Vector::zeros(2)]);
        assert_eq!(out.ledger.inputs(), 1);
        assert_eq!(out.updates, 1);
    }

    #[test]
    fn deterministic_source_has_nonnegative_terms() {
        let w_star = Vector::new(vec![0.5, -1.5]);
        let p = Problem::constant(Loss::Quadratic, w_star.clone()).unwrap();
        let s = Schedule::sqrt(1.0, 0.5).unwrap();
        let out = run_serial_with(&da(), &s, &p, 200, &Rng::new(2), RunOptions { record_terms: true, record_iterates: true }).unwrap();
        let terms = out.ledger.terms().unwrap();
        for (term, w) in terms.iter().zip(out.iterates.unwrap()) {
            let r = term.regret().unwrap();
            assert!(r >= 0.0);
            assert!((r - 0.5 * w.dist_sq(&w_star).unwrap()).abs() < 1e-12);
        }
        assert!(out.ledger.regret().unwrap() >= 0.0);
    }

    #[test]
    fn batch_of_one_matches_serial() {
        let p = quad();
        let s = Schedule::variance_tuned(1.0, p.sigma(), p.diameter, 1).unwrap();
        let opts = RunOptions { record_terms: true, record_iterates: true };
        let a = run_serial_with(&da(), &s, &p, 1000, &Rng::new(3), opts).unwrap();
        let b = run_minibatch_with(&da(), &s, &p, 1000, 1, &Rng::new(3), opts).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn whole_horizon_batch_never_moves() {
        let p = quad();
        let s = Schedule::variance_tuned(1.0, p.sigma(), p.diameter, 500).unwrap();
        let opts = RunOptions { record_terms: true, record_iterates: true };
        let out = run_minibatch_with(&da(), &s, &p, 500, 500, &Rng::new(4), opts).unwrap();
        assert_eq!(out.iterates.as_ref().unwrap(), &vec![Vector::zeros(2)]);
        assert_eq!(out.updates, 1);
        let mut stream = p.stream(Rng::new(4));
        for term in out.ledger.terms().unwrap() {
            let z = stream.next_input().unwrap();
            assert_eq!(term.loss, p.loss_value(&Vector::zeros(2), &z).unwrap());
        }
    }

    #[test]
    fn batch_larger_than_horizon_never_updates() {
        let p = quad();
        let s = Schedule::sqrt(1.0, 1.0).unwrap();
        let out = run_minibatch(&da(), &s, &p, 10, 64, &Rng::new(5)).unwrap();
        assert_eq!(out.updates, 0);
        assert_eq!(out.ledger.inputs(), 10);
        assert_eq!(out.state.predictor(), &Vector::zeros(2));
    }

    #[test]
    fn predictions_are_constant_within_batches() {
        let p = quad();
        let s = Schedule::variance_tuned(1.0, p.sigma(), p.diameter, 7).unwrap();
        let opts = RunOptions { record_terms: true, record_iterates: true };
        let out = run_minibatch_with(&da(), &s, &p, 100, 7, &Rng::new(6), opts).unwrap();
        let iterates = out.iterates.unwrap();
        assert_eq!(iterates.len(), 15);
        let mut stream = p.stream(Rng::new(6));
        for (i, term) in out.ledger.terms().unwrap().iter().enumerate() {
            let z = stream.next_input().unwrap();
            assert_eq!(term.loss, p.loss_value(&iterates[i / 7], &z).unwrap());
        }
        assert_eq!(out.updates, 14);
    }

    #[test]
    fn averaged_gradient_is_the_gradient_of_the_averaged_loss() {
        // For the quadratic loss ∇f̄(w, z̄) = w − mean(z̄); rerun the first
        // batch by hand and compare the resulting update.
        let p = quad();
        let s = Schedule::sqrt(1.0, 0.25).unwrap();
        let out = run_minibatch_with(&da(), &s, &p, 16, 16, &Rng::new(7), RunOptions { record_iterates: true, ..Default::default() })
            .unwrap();
        let mut stream = p.stream(Rng::new(7));
        let zs: Vec<Vector> = (0..16).map(|_| stream.next_input().unwrap()).collect();
        let z_bar = Vector::mean_of(&zs).unwrap();
        let g_bar = Vector::zeros(2).sub(&z_bar).unwrap();
        let expected = g_bar.scaled(-1.0 / s.alpha(1));
        assert!(out.state.predictor().dist_sq(&expected).unwrap().sqrt() < 1e-14);
    }

    #[test]
    fn replay_exhaustion_surfaces_as_run_error() {
        let p = Problem::replay(Loss::Quadratic, vec![Vector::zeros(2); 5], Some(Vector::zeros(2))).unwrap();
        let s = Schedule::sqrt(1.0, 1.0).unwrap();
        assert!(matches!(run_serial(&da(), &s, &p, 6, &Rng::new(0)), Err(Error::Run(_))));
    }

    #[test]
    fn zero_horizon_rejected() {
        let p = quad();
        let s = Schedule::sqrt(1.0, 1.0).unwrap();
        assert!(run_serial(&da(), &s, &p, 0, &Rng::new(0)).is_err());
        assert!(run_minibatch(&da(), &s, &p, 10, 0, &Rng::new(0)).is_err());
    }

    #[test]
    fn variance_scales_with_batch_size() {
        let p = Problem::quadratic(Vector::new(vec![1.0, -1.0, 0.5, 0.0]), 0.5).unwrap();
        let w = Vector::new(vec![0.2, 0.1, -0.3, 1.0]);
        let v1 = empirical_avg_grad_variance(&p, &w, 1, 100_000, &Rng::new(8)).unwrap();
        assert!((v1 - 1.0).abs() < 0.05);
        let v100 = empirical_avg_grad_variance(&p, &w, 100, 100_000, &Rng::new(9)).unwrap();
        assert!((v100 / 0.01 - 1.0).abs() < 0.1, "{v100}");
        let v10 = empirical_avg_grad_variance(&p, &w, 10, 100_000, &Rng::new(10)).unwrap();
        let ratio = v10 / v1;
        assert!(ratio >= 0.9 / 10.0 && ratio <= 1.1 / 10.0);
    }
}
