//! Distributed mini-batch over a simulated network, the no-communication
//! baselines, and interlaced instances that keep working through the
//! vector-sum latency.
//!
//! Time is counted in inputs. Input `i` (0-based, system-wide) is served by
//! node `i mod k`.

use crate::error::{Error, Result};
use crate::ledger::RegretLedger;
use crate::minibatch::{check_horizon, Observer, RunOptions, RunOutcome};
use crate::network::{vector_sum, SpanningTree};
use crate::problem::Problem;
use crate::rng::Rng;
use crate::schedule::Schedule;
use crate::update::{Rule, UpdateState};
use crate::vector::{Vector, VectorAccumulator};

/// Batch size `b` and latency gap `μ` of a DMB run over `k` nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BatchSchedule {
    b: u64,
    mu: u64,
    k: usize,
}

impl BatchSchedule {
    /// Requires `b ≥ k` and `k | b`. Any `μ ≥ 0` is accepted: with
    /// round-robin assignment each node still contributes exactly `b/k`
    /// gradients per cycle.
    pub fn new(b: u64, mu: u64, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Config("k must be >= 1".into()));
        }
        if b < k as u64 || b % k as u64 != 0 {
            return Err(Error::Config(format!("batch size {b} must be a positive multiple of k = {k}")));
        }
        Ok(BatchSchedule { b, mu, k })
    }

    pub fn b(&self) -> u64 {
        self.b
    }

    pub fn mu(&self) -> u64 {
        self.mu
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// `b + μ` inputs per cycle.
    pub fn cycle_len(&self) -> u64 {
        self.b + self.mu
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DmbOptions {
    pub run: RunOptions,
    /// Only the root applies the update and broadcasts the new state.
    pub root_broadcast: bool,
}

/// Per-node accounting of a distributed run.
#[derive(Debug, Clone, PartialEq)]
pub struct DmbTrace {
    pub gradient_inputs: Vec<u64>,
    pub discarded_inputs: Vec<u64>,
    pub vector_sums: u64,
    pub messages: u64,
    /// Every node held the same predictor after every update.
    pub synchronized: bool,
    /// Final predictor held by each node.
    pub node_predictors: Vec<Vector>,
}

impl DmbTrace {
    fn new(k: usize) -> Self {
        DmbTrace {
            gradient_inputs: vec![0; k],
            discarded_inputs: vec![0; k],
            vector_sums: 0,
            messages: 0,
            synchronized: true,
            node_predictors: Vec::new(),
        }
    }

    pub fn total_gradient_inputs(&self) -> u64 {
        self.gradient_inputs.iter().sum()
    }

    pub fn total_discarded_inputs(&self) -> u64 {
        self.discarded_inputs.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DmbOutcome {
    pub run: RunOutcome,
    pub trace: DmbTrace,
}

/// Per-node gradient sums for one batch, reduced over the tree.
#[derive(Debug, Clone)]
pub(crate) struct NodeSums {
    sums: Vec<VectorAccumulator>,
}

impl NodeSums {
    pub(crate) fn new(k: usize, dim: usize) -> Self {
        NodeSums {
            sums: vec![VectorAccumulator::new(dim); k],
        }
    }

    pub(crate) fn add(&mut self, node: usize, g: &Vector) -> Result<()> {
        self.sums[node].add(g)
    }

    /// `(1/b) Σ g` via the tree vector-sum; returns the value and the
    /// number of messages used.
    pub(crate) fn reduce(&mut self, tree: &SpanningTree, b: u64) -> Result<(Vector, u64)> {
        let partials: Vec<Vector> = self.sums.iter().map(VectorAccumulator::total).collect();
        let out = vector_sum(tree, &partials)?;
        self.sums.iter_mut().for_each(VectorAccumulator::reset);
        let g_bar = out.sum.map(|x| x / b as f64);
        Ok((g_bar, out.messages() as u64))
    }
}

fn check_network(tree: &SpanningTree, batch: &BatchSchedule) -> Result<()> {
    if tree.k() != batch.k() {
        return Err(Error::Config(format!(
            "batch schedule built for k = {} but tree has {} nodes",
            batch.k(),
            tree.k()
        )));
    }
    Ok(())
}

/// Distributed mini-batch prediction.
///
/// Each cycle serves `b` inputs whose gradients are accumulated at their
/// nodes, then `μ` inputs that are predicted on but never differentiated;
/// all of them are charged to the ledger. The batch average then updates
/// every node (or only the root, followed by a broadcast). A trailing cycle
/// that does not complete its `b` gradient inputs never updates.
#[allow(clippy::too_many_arguments)]
pub fn run_dmb(
    rule: &Rule,
    schedule: &Schedule,
    problem: &Problem,
    m: u64,
    tree: &SpanningTree,
    batch: &BatchSchedule,
    rng: &Rng,
    options: DmbOptions,
) -> Result<DmbOutcome> {
    check_horizon(m)?;
    check_network(tree, batch)?;
    rule.validate()?;
    let k = batch.k();
    let b = batch.b();
    let mut nodes: Vec<UpdateState> = vec![rule.initial_state(problem.dim)?; k];
    let mut stream = problem.stream(rng.clone());
    let mut observer = Observer::new(problem, options.run);
    let mut sums = NodeSums::new(k, problem.dim);
    let mut trace = DmbTrace::new(k);
    let root = tree.root();
    let mut index = 0u64;
    while index < m {
        let served = batch.cycle_len().min(m - index);
        observer.hold(nodes[root].predictor(), served)?;
        let grads = b.min(served);
        for _ in 0..grads {
            let node = (index % k as u64) as usize;
            let z = stream.next_input()?;
            let w = nodes[node].predictor();
            observer.observe(w, &z)?;
            sums.add(node, &problem.loss_gradient(w, &z)?)?;
            trace.gradient_inputs[node] += 1;
            index += 1;
        }
        for _ in grads..served {
            let node = (index % k as u64) as usize;
            let z = stream.next_input()?;
            observer.observe(nodes[node].predictor(), &z)?;
            trace.discarded_inputs[node] += 1;
            index += 1;
        }
        if grads < b {
            break;
        }
        let (g_bar, messages) = sums.reduce(tree, b)?;
        trace.vector_sums += 1;
        trace.messages += messages;
        let alpha = schedule.alpha(nodes[root].step() + 1);
        if options.root_broadcast {
            rule.apply(&mut nodes[root], &g_bar, alpha)?;
            let updated = nodes[root].clone();
            for (node, state) in nodes.iter_mut().enumerate() {
                if node != root {
                    *state = updated.clone();
                }
            }
            trace.messages += tree.k() as u64 - 1;
        } else {
            for state in &mut nodes {
                rule.apply(state, &g_bar, alpha)?;
            }
        }
        trace.synchronized &= nodes.iter().all(|s| s.predictor() == nodes[root].predictor());
    }
    trace.node_predictors = nodes.iter().map(|s| s.predictor().clone()).collect();
    let root_state = nodes.swap_remove(root);
    Ok(DmbOutcome {
        run: observer.finish(root_state),
        trace,
    })
}

/// Outcome of the no-communication baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct NoCommOutcome {
    /// Ledger over the global input sequence (regret summed over nodes).
    pub ledger: RegretLedger,
    pub node_ledgers: Vec<RegretLedger>,
    pub node_states: Vec<UpdateState>,
}

/// `k` independent learners on the disjoint sub-streams `i ≡ node (mod k)`,
/// each a serial mini-batch learner with batch `per_node_b` (1 for plain
/// serial). Together they process `m` inputs, each node `⌈m/k⌉` at most.
#[allow(clippy::too_many_arguments)]
pub fn run_no_comm(
    rule: &Rule,
    schedule: &Schedule,
    problem: &Problem,
    m: u64,
    k: usize,
    per_node_b: u64,
    rng: &Rng,
    options: RunOptions,
) -> Result<NoCommOutcome> {
    check_horizon(m)?;
    if k == 0 {
        return Err(Error::Config("k must be >= 1".into()));
    }
    if per_node_b == 0 {
        return Err(Error::Config("per-node batch size must be >= 1".into()));
    }
    rule.validate()?;
    let tracks = problem.minimizer.is_some();
    let mut ledger = RegretLedger::new(tracks, options.record_terms);
    let mut node_ledgers = vec![RegretLedger::new(tracks, false); k];
    let mut states = vec![rule.initial_state(problem.dim)?; k];
    let mut sums = vec![VectorAccumulator::new(problem.dim); k];
    let mut stream = problem.stream(rng.clone());
    for index in 0..m {
        let node = (index % k as u64) as usize;
        let z = stream.next_input()?;
        let w = states[node].predictor();
        let term = crate::ledger::RegretTerm {
            loss: problem.loss_value(w, &z)?,
            comparator_loss: match &problem.minimizer {
                Some(w_star) => Some(problem.loss_value(w_star, &z)?),
                None => None,
            },
        };
        ledger.record(term);
        node_ledgers[node].record(term);
        sums[node].add(&problem.loss_gradient(w, &z)?)?;
        if sums[node].count() as u64 == per_node_b {
            let total = sums[node].total();
            let g = if per_node_b == 1 {
                total
            } else {
                total.map(|x| x / per_node_b as f64)
            };
            sums[node].reset();
            let alpha = schedule.alpha(states[node].step() + 1);
            rule.apply(&mut states[node], &g, alpha)?;
        }
    }
    ledger.finish();
    node_ledgers.iter_mut().for_each(RegretLedger::finish);
    Ok(NoCommOutcome {
        ledger,
        node_ledgers,
        node_states: states,
    })
}

/// Loss of the served (averaged) predictor next to the mean loss of the
/// instance predictors, for one input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JensenPoint {
    pub served_loss: f64,
    pub mean_instance_loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterlacedOutcome {
    pub run: RunOutcome,
    /// Number of instances `c = 1 + μ/b`.
    pub instances: usize,
    pub instance_states: Vec<UpdateState>,
    pub vector_sums: u64,
    pub jensen: Option<Vec<JensenPoint>>,
}

/// `c = 1 + μ/b` interlaced DMB instances.
///
/// The input sequence is cut into blocks of `b`; block `q` belongs to
/// instance `q mod c`, which takes its gradients at its own predictor and
/// then launches a vector-sum lasting the next `μ` inputs. The result is
/// applied when the instance becomes active again. Every prediction is
/// the mean of the `c` current instance predictors. All inputs are charged
/// to the ledger; a trailing incomplete block never updates.
#[allow(clippy::too_many_arguments)]
pub fn run_interlaced(
    rule: &Rule,
    schedule: &Schedule,
    problem: &Problem,
    m: u64,
    tree: &SpanningTree,
    batch: &BatchSchedule,
    rng: &Rng,
    options: RunOptions,
    jensen_trace: bool,
) -> Result<InterlacedOutcome> {
    check_horizon(m)?;
    check_network(tree, batch)?;
    let (b, mu) = (batch.b(), batch.mu());
    if mu % b != 0 {
        return Err(Error::Config(format!("interlacing needs b | mu, got b = {b}, mu = {mu}")));
    }
    rule.validate()?;
    let k = batch.k() as u64;
    let c = (1 + mu / b) as usize;
    let mut instances = vec![rule.initial_state(problem.dim)?; c];
    let mut pending: Vec<Option<Vector>> = vec![None; c];
    let mut stream = problem.stream(rng.clone());
    let mut observer = Observer::new(problem, options);
    let mut sums = NodeSums::new(batch.k(), problem.dim);
    let mut jensen = jensen_trace.then(Vec::new);
    let mut vector_sums = 0;
    let mut index = 0u64;
    let mut block = 0usize;
    while index < m {
        let active = block % c;
        if let Some(g_bar) = pending[active].take() {
            let alpha = schedule.alpha(instances[active].step() + 1);
            rule.apply(&mut instances[active], &g_bar, alpha)?;
        }
        let served = if c == 1 {
            instances[0].predictor().clone()
        } else {
            Vector::mean_of(instances.iter().map(UpdateState::predictor))?
        };
        let len = b.min(m - index);
        observer.hold(&served, len)?;
        for _ in 0..len {
            let node = (index % k) as usize;
            let z = stream.next_input()?;
            let loss = observer.observe(&served, &z)?;
            let own = instances[active].predictor();
            sums.add(node, &problem.loss_gradient(own, &z)?)?;
            if let Some(points) = &mut jensen {
                let mut total = 0.0;
                for inst in &instances {
                    total += problem.loss_value(inst.predictor(), &z)?;
                }
                points.push(JensenPoint {
                    served_loss: loss,
                    mean_instance_loss: total / c as f64,
                });
            }
            index += 1;
        }
        if len == b {
            let (g_bar, _) = sums.reduce(tree, b)?;
            pending[active] = Some(g_bar);
            vector_sums += 1;
        }
        block += 1;
    }
    let root_state = instances[0].clone();
    Ok(InterlacedOutcome {
        run: observer.finish(root_state),
        instances: c,
        instance_states: instances,
        vector_sums,
        jensen,
    })
}
