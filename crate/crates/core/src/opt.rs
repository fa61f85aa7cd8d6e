//! Distributed mini-batch for stochastic optimization: no prediction duty,
//! averaged output, and optimality-gap measurement.

use crate::dmb::{BatchSchedule, NodeSums};
use crate::error::{Error, Result};
use crate::minibatch::{check_horizon, RunOutcome};
use crate::network::SpanningTree;
use crate::problem::Problem;
use crate::rng::Rng;
use crate::schedule::Schedule;
use crate::update::{Rule, UpdateState};
use crate::vector::{CompensatedSum, Vector, VectorAccumulator};

#[derive(Debug, Clone, PartialEq)]
pub struct OptRun {
    /// `w̄ = (1/r) Σ_{j=1..r} w_j`.
    pub average: Vector,
    /// Update cycles `r = ⌊m/b⌋`.
    pub batches: u64,
    pub samples_consumed: u64,
    /// `G(w̄)`, when the problem has a closed-form objective.
    pub gap: Option<f64>,
    pub state: UpdateState,
    /// `w_1 … w_r`, when requested.
    pub iterates: Option<Vec<Vector>>,
}

/// Streaming mean `w̄_j = w̄_{j−1} + (w_j − w̄_{j−1})/j`.
#[derive(Debug, Clone)]
struct StreamingMean {
    mean: Vector,
    count: u64,
}

impl StreamingMean {
    fn new(dim: usize) -> Self {
        StreamingMean {
            mean: Vector::zeros(dim),
            count: 0,
        }
    }

    fn push(&mut self, w: &Vector) -> Result<()> {
        self.count += 1;
        let delta = w.sub(&self.mean)?;
        self.mean.axpy(1.0 / self.count as f64, &delta)
    }
}

fn cycles(m: u64, b: u64) -> Result<u64> {
    check_horizon(m)?;
    if b == 0 {
        return Err(Error::Input("batch size must be >= 1".into()));
    }
    let r = m / b;
    if r == 0 {
        return Err(Error::Run(format!("batch size {b} exceeds the sample budget {m}: no update cycle fits")));
    }
    Ok(r)
}

fn finish(problem: &Problem, mean: StreamingMean, b: u64, state: UpdateState, iterates: Option<Vec<Vector>>) -> OptRun {
    let gap = optimality_gap(problem, &mean.mean).ok();
    OptRun {
        batches: mean.count,
        samples_consumed: mean.count * b,
        average: mean.mean,
        gap,
        state,
        iterates,
    }
}

/// Distributed mini-batch optimization over `tree`: `r = ⌊m/b⌋` cycles of
/// `b` gradients (round-robin over the nodes), each reduced over the tree
/// and fed to the rule with `α_j`. Leftover samples are not drawn.
#[allow(clippy::too_many_arguments)]
pub fn run_dmb_opt(
    rule: &Rule,
    schedule: &Schedule,
    problem: &Problem,
    m: u64,
    tree: &SpanningTree,
    b: u64,
    rng: &Rng,
    record_iterates: bool,
) -> Result<OptRun> {
    let batch = BatchSchedule::new(b, 0, tree.k())?;
    let r = cycles(m, b)?;
    rule.validate()?;
    let k = tree.k() as u64;
    let mut state = rule.initial_state(problem.dim)?;
    let mut stream = problem.stream(rng.clone());
    let mut sums = NodeSums::new(tree.k(), problem.dim);
    let mut mean = StreamingMean::new(problem.dim);
    let mut iterates = record_iterates.then(Vec::new);
    let mut index = 0u64;
    for j in 1..=r {
        let w = state.predictor();
        mean.push(w)?;
        if let Some(it) = &mut iterates {
            it.push(w.clone());
        }
        for _ in 0..batch.b() {
            let z = stream.next_input()?;
            sums.add((index % k) as usize, &problem.loss_gradient(w, &z)?)?;
            index += 1;
        }
        let (g_bar, _) = sums.reduce(tree, b)?;
        rule.apply(&mut state, &g_bar, schedule.alpha(j))?;
    }
    Ok(finish(problem, mean, b, state, iterates))
}

/// Serial mini-batch optimization: the single-machine counterpart of
/// [`run_dmb_opt`].
pub fn run_minibatch_opt(
    rule: &Rule,
    schedule: &Schedule,
    problem: &Problem,
    m: u64,
    b: u64,
    rng: &Rng,
    record_iterates: bool,
) -> Result<OptRun> {
    let r = cycles(m, b)?;
    rule.validate()?;
    let mut state = rule.initial_state(problem.dim)?;
    let mut stream = problem.stream(rng.clone());
    let mut acc = VectorAccumulator::new(problem.dim);
    let mut mean = StreamingMean::new(problem.dim);
    let mut iterates = record_iterates.then(Vec::new);
    for j in 1..=r {
        let w = state.predictor();
        mean.push(w)?;
        if let Some(it) = &mut iterates {
            it.push(w.clone());
        }
        acc.reset();
        for _ in 0..b {
            let z = stream.next_input()?;
            acc.add(&problem.loss_gradient(w, &z)?)?;
        }
        let g_bar = acc.total().map(|x| x / b as f64);
        rule.apply(&mut state, &g_bar, schedule.alpha(j))?;
    }
    Ok(finish(problem, mean, b, state, iterates))
}

/// `G = F(w̄) − F(w*)`; needs a closed-form objective and a known minimizer.
pub fn optimality_gap(problem: &Problem, w_bar: &Vector) -> Result<f64> {
    let unsupported = || Error::Unsupported("optimality gap needs a closed-form objective and a known minimizer".into());
    let w_star = problem.minimizer.as_ref().ok_or_else(unsupported)?;
    let f_bar = problem.expected_loss(w_bar).ok_or_else(unsupported)??;
    let f_star = problem.expected_loss(w_star).ok_or_else(unsupported)??;
    Ok(f_bar - f_star)
}

/// Monte Carlo estimate of `F(w) − F(w_ref)` and its standard error.
pub fn estimate_gap(problem: &Problem, w: &Vector, w_ref: &Vector, samples: usize, rng: &Rng) -> Result<(f64, f64)> {
    if samples < 2 {
        return Err(Error::Input("need at least 2 samples".into()));
    }
    let mut stream = problem.stream(rng.clone());
    let mut sum = CompensatedSum::new();
    let mut sum_sq = CompensatedSum::new();
    for _ in 0..samples {
        let z = stream.next_input()?;
        let d = problem.loss_value(w, &z)? - problem.loss_value(w_ref, &z)?;
        sum.add(d);
        sum_sq.add(d * d);
    }
    let n = samples as f64;
    let mean = sum.total() / n;
    let var = ((sum_sq.total() - n * mean * mean) / (n - 1.0)).max(0.0);
    Ok((mean, (var / n).sqrt()))
}

/// Optimality gap of the averaged online predictor next to `R(m)/m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapVsRegret {
    pub gap: f64,
    pub regret_per_input: f64,
}

/// Pairs `G(w̄_m)` of a serial online run with its `R(m)/m`.
pub fn gap_vs_regret_check(outcome: &RunOutcome, problem: &Problem) -> Result<GapVsRegret> {
    let regret = outcome
        .ledger
        .regret()
        .ok_or_else(|| Error::Unsupported("run did not track regret".into()))?;
    Ok(GapVsRegret {
        gap: optimality_gap(problem, &outcome.predictor_mean)?,
        regret_per_input: regret / outcome.ledger.inputs() as f64,
    })
}
