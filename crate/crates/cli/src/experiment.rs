//! Builds problems, rules, schedules and networks from a [`Config`] and
//! runs the requested experiment.

use dmb_core::analysis::{self, BoundParams};
use dmb_core::dmb::{run_interlaced, run_no_comm, DmbOptions};
use dmb_core::stats::{summarize, Summary};
use dmb_core::{
    build_tree, compute_mu, logistic_stream, optimality_gap, run_dmb, run_dmb_opt, run_minibatch, run_serial,
    BatchSchedule, BregmanGenerator, Checkpoint, FeasibleSet, Problem, Rng, Rule, RunOptions, Schedule,
    SpanningTree, Topology, Vector,
};

use crate::config::{Command, Config};
use crate::error::{CliError, CliResult};

/// Substream reserved for generating the synthetic problem itself.
const PROBLEM_STREAM: u64 = u64::MAX;
/// Samples behind Monte Carlo objective estimates.
const OBJECTIVE_SAMPLES: usize = 20_000;

/// One CSV data row.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub variant: String,
    pub trial: usize,
    pub t: u64,
    pub avg_loss: f64,
    pub regret: Option<f64>,
}

/// Result of one experiment: CSV rows (for simulating commands), summary
/// entries, and lines meant for standard output.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub rows: Option<Vec<Row>>,
    pub summary: Vec<(String, String)>,
    pub stdout: Vec<String>,
}

impl Report {
    fn put(&mut self, key: impl Into<String>, value: impl ToString) {
        self.summary.push((key.into(), value.to_string()));
    }
}

#[derive(Debug, Clone)]
struct TrialOutcome {
    checkpoints: Vec<Checkpoint>,
    avg_loss: f64,
    regret: Option<f64>,
    gap: Option<f64>,
}

fn from_ledger(ledger: &dmb_core::RegretLedger) -> TrialOutcome {
    TrialOutcome {
        checkpoints: ledger.checkpoints().to_vec(),
        avg_loss: ledger.average_loss(),
        regret: ledger.regret(),
        gap: None,
    }
}

pub fn build_problem(cfg: &Config) -> CliResult<Problem> {
    let seed = cfg.seed()?;
    let mut problem = match cfg.get_str("problem.kind", "quadratic") {
        "quadratic" => {
            let dim: usize = cfg.get_or("problem.dim", 2)?;
            let w_star = match cfg.get_list::<f64>("problem.w_star")? {
                Some(w) => Vector::new(w),
                None => Vector::filled(dim, 1.0),
            };
            Problem::quadratic(w_star, cfg.get_or("problem.sigma_z", 1.0)?)?
        }
        "logistic" => logistic_stream(
            &Rng::new(seed).substream(PROBLEM_STREAM),
            cfg.get_or("problem.dim", 100)?,
            cfg.get_or("problem.sparsity", 5)?,
            cfg.get_or("problem.density", 0.2)?,
            cfg.get_or("problem.label_noise", 0.0)?,
        )?,
        other => return Err(CliError::Config(format!("unknown problem.kind {other:?}"))),
    };
    if let Some(l) = cfg.get("L")? {
        problem = problem.with_smoothness(l)?;
    }
    if let Some(s2) = cfg.get("sigma2")? {
        problem = problem.with_grad_variance(s2)?;
    }
    if let Some(d) = cfg.get("D")? {
        problem = problem.with_diameter(d)?;
    }
    Ok(problem)
}

fn build_set(cfg: &Config, dim: usize) -> CliResult<FeasibleSet> {
    Ok(match cfg.get_str("rule.set", "none") {
        "none" | "unconstrained" => FeasibleSet::Unconstrained,
        "ball" => FeasibleSet::ball(cfg.get_or("rule.radius", 1.0)?)?,
        "box" => FeasibleSet::boxed(
            Vector::filled(dim, cfg.get_or("rule.lower", -1.0)?),
            Vector::filled(dim, cfg.get_or("rule.upper", 1.0)?),
        )?,
        other => return Err(CliError::Config(format!("unknown rule.set {other:?}"))),
    })
}

pub fn build_rule(cfg: &Config, dim: usize) -> CliResult<Rule> {
    let rule = match cfg.get_str("rule.kind", "da") {
        "da" => Rule::DualAveraging {
            set: build_set(cfg, dim)?,
        },
        "pgd" => Rule::ProjectedGradient {
            set: build_set(cfg, dim)?,
        },
        "md" => {
            let generator = match cfg.get_str("rule.generator", "euclidean") {
                "euclidean" => BregmanGenerator::Euclidean,
                "diagonal" => {
                    let w = cfg.get_list::<f64>("rule.weights")?.unwrap_or_else(|| vec![1.0; dim]);
                    BregmanGenerator::diagonal(Vector::new(w))?
                }
                other => return Err(CliError::Config(format!("unknown rule.generator {other:?}"))),
            };
            Rule::MirrorDescent {
                set: build_set(cfg, dim)?,
                generator,
            }
        }
        "composite" => Rule::CompositeDualAveraging {
            lambda: cfg.get_or("rule.lambda", 0.0)?,
        },
        other => return Err(CliError::Config(format!("unknown rule.kind {other:?}"))),
    };
    rule.validate()?;
    Ok(rule)
}

/// `α_j = L + γ√j` with `γ` from `rule.gamma`, else `gamma0/√b`, else the
/// variance-tuned `σ/(√b·D)`; or `α_j = L + β` for `rule.schedule=constant`.
pub fn build_schedule(cfg: &Config, problem: &Problem, batch: u64) -> CliResult<Schedule> {
    let l = problem.smoothness;
    Ok(match cfg.get_str("rule.schedule", "sqrt") {
        "sqrt" => {
            if let Some(gamma) = cfg.get("rule.gamma")? {
                Schedule::sqrt(l, gamma)?
            } else if let Some(gamma0) = cfg.get("gamma0")? {
                Schedule::batch_scaled(l, gamma0, batch)?
            } else {
                Schedule::variance_tuned(l, problem.sigma(), problem.diameter, batch)?
            }
        }
        "constant" => {
            let beta = cfg
                .get("rule.beta")?
                .ok_or_else(|| CliError::Config("rule.schedule=constant needs rule.beta".into()))?;
            Schedule::constant(l, beta)?
        }
        other => return Err(CliError::Config(format!("unknown rule.schedule {other:?}"))),
    })
}

pub fn build_topology(cfg: &Config) -> CliResult<Topology> {
    let k: usize = cfg.get_or("net.k", 1)?;
    let latency = cfg.get_or("net.latency", 0.5)?;
    let rate = cfg.get_or("net.rate", 4.0)?;
    Ok(match cfg.get_str("net.kind", "tree") {
        "tree" => Topology::dary_tree(k, cfg.get_or("net.arity", 2)?, latency, rate)?,
        "star" => Topology::star(k, latency, rate)?,
        "path" => Topology::path(k, latency, rate)?,
        "complete" => Topology::complete(k, latency, rate)?,
        "file" => {
            let path = cfg
                .raw("net.file")
                .ok_or_else(|| CliError::Config("net.kind=file needs net.file".into()))?;
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            Topology::parse(&text, latency, rate)?
        }
        other => return Err(CliError::Config(format!("unknown net.kind {other:?}"))),
    })
}

struct Network {
    topology: Topology,
    tree: SpanningTree,
}

impl Network {
    fn from_config(cfg: &Config) -> CliResult<Self> {
        let topology = build_topology(cfg)?;
        let tree = build_tree(&topology, cfg.get_or("net.root", 0)?)?;
        Ok(Network { topology, tree })
    }

    fn k(&self) -> usize {
        self.topology.k()
    }

    /// `net.mu` when given, otherwise `⌈r · vector-sum time⌉`.
    fn mu(&self, cfg: &Config) -> CliResult<u64> {
        match cfg.get("net.mu")? {
            Some(mu) => Ok(mu),
            None => Ok(compute_mu(&self.tree, self.topology.latency, self.topology.rate)?.ceil),
        }
    }
}

fn bound_params(cfg: &Config, problem: &Problem, m: u64) -> CliResult<BoundParams> {
    Ok(BoundParams {
        sigma2: problem.grad_variance,
        m: m as f64,
        d: problem.diameter,
        l: problem.smoothness,
        f0: cfg.get("F0")?,
        b: cfg.get_or("b", 1u64)? as f64,
        mu: cfg.get_or("net.mu", 0u64)? as f64,
        k: cfg.get_or("net.k", 1u64)? as f64,
        delta: cfg.get_or("delta", 0.0)?,
        rho: cfg.get_or("rho", 1.0 / 3.0)?,
        theta: cfg.get_or("theta", 1.0)?,
    })
}

type TrialFn<'a> = Box<dyn Fn(&Rng) -> dmb_core::Result<TrialOutcome> + Sync + 'a>;

struct Variant<'a> {
    label: String,
    run: TrialFn<'a>,
}

fn horizon(cfg: &Config) -> CliResult<u64> {
    let m: u64 = cfg.get_or("m", 10_000)?;
    if m == 0 {
        return Err(CliError::Config("m must be >= 1".into()));
    }
    Ok(m)
}

fn check_multiple(b: u64, k: usize) -> CliResult<()> {
    if b == 0 || b % k as u64 != 0 {
        return Err(CliError::Config(format!("b = {b} must be a positive multiple of k = {k}")));
    }
    Ok(())
}

fn dmb_variant<'a>(
    label: String,
    rule: &'a Rule,
    problem: &'a Problem,
    tree: &'a SpanningTree,
    cfg: &Config,
    m: u64,
    b: u64,
    mu: u64,
) -> CliResult<Variant<'a>> {
    check_multiple(b, tree.k())?;
    let schedule = build_schedule(cfg, problem, b)?;
    let batch = BatchSchedule::new(b, mu, tree.k())?;
    let root_broadcast = cfg.get_or("net.root_broadcast", false)?;
    Ok(Variant {
        label,
        run: Box::new(move |rng| {
            let options = DmbOptions {
                run: RunOptions::default(),
                root_broadcast,
            };
            Ok(from_ledger(&run_dmb(rule, &schedule, problem, m, tree, &batch, rng, options)?.run.ledger))
        }),
    })
}

fn run_variants(cfg: &Config, variants: &[Variant<'_>], report: &mut Report) -> CliResult<()> {
    let seed = cfg.seed()?;
    let trials: usize = cfg.get_or("trials", 1)?;
    if trials == 0 {
        return Err(CliError::Config("trials must be >= 1".into()));
    }
    let mut rows = Vec::new();
    let single = variants.len() == 1;
    for variant in variants {
        let outcomes = dmb_core::stats::run_trials(seed, trials, |_, rng| (variant.run)(rng))?;
        for (trial, out) in outcomes.iter().enumerate() {
            for cp in &out.checkpoints {
                rows.push(Row {
                    variant: variant.label.clone(),
                    trial,
                    t: cp.t,
                    avg_loss: cp.avg_loss,
                    regret: cp.regret,
                });
            }
        }
        let prefix = if single {
            "result".to_string()
        } else {
            format!("result.{}", variant.label)
        };
        let put_summary = |report: &mut Report, name: &str, s: Summary| {
            report.put(format!("{prefix}.{name}.mean"), s.mean);
            report.put(format!("{prefix}.{name}.se"), s.std_err);
        };
        let avg: Vec<f64> = outcomes.iter().map(|o| o.avg_loss).collect();
        put_summary(report, "avg_loss", summarize(&avg));
        let regrets: Option<Vec<f64>> = outcomes.iter().map(|o| o.regret).collect();
        if let Some(r) = regrets {
            put_summary(report, "regret", summarize(&r));
        }
        let gaps: Option<Vec<f64>> = outcomes.iter().map(|o| o.gap).collect();
        if let Some(g) = gaps {
            put_summary(report, "gap", summarize(&g));
        }
    }
    report.rows = Some(rows);
    Ok(())
}

/// Runs `cfg.command`.
pub fn run(cfg: &Config) -> CliResult<Report> {
    let mut report = Report::default();
    match cfg.command {
        Command::Bounds => bounds(cfg, &mut report)?,
        Command::Speedup => speedup(cfg, &mut report)?,
        Command::BatchSize => batch_size(cfg, &mut report)?,
        Command::Replay => return Err(CliError::Config("replay is handled by the runner".into())),
        _ => simulate(cfg, &mut report)?,
    }
    Ok(report)
}

fn simulate(cfg: &Config, report: &mut Report) -> CliResult<()> {
    let m = horizon(cfg)?;
    let problem = build_problem(cfg)?;
    let rule = build_rule(cfg, problem.dim)?;
    let mut params = bound_params(cfg, &problem, m)?;
    report.put("problem.L", problem.smoothness);
    report.put("problem.sigma2", problem.grad_variance);
    report.put("problem.D", problem.diameter);
    let network = match cfg.command {
        Command::Dmb | Command::Interlaced | Command::Opt | Command::SweepBatch | Command::SweepLatency => {
            Some(Network::from_config(cfg)?)
        }
        _ => None,
    };
    let (problem, rule) = (&problem, &rule);
    let mut variants = Vec::new();
    match cfg.command {
        Command::Serial => {
            let schedule = build_schedule(cfg, problem, 1)?;
            variants.push(Variant {
                label: "serial".into(),
                run: Box::new(move |rng| Ok(from_ledger(&run_serial(rule, &schedule, problem, m, rng)?.ledger))),
            });
            report.put("bound.psi_serial", analysis::psi_serial(&params));
        }
        Command::Minibatch => {
            let b: u64 = cfg.get_or("b", 1)?;
            let schedule = build_schedule(cfg, problem, b)?;
            variants.push(Variant {
                label: "minibatch".into(),
                run: Box::new(move |rng| Ok(from_ledger(&run_minibatch(rule, &schedule, problem, m, b, rng)?.ledger))),
            });
            params.b = b as f64;
            let bound = analysis::psi_minibatch(&params);
            report.put("bound.psi_minibatch", bound.closed);
            report.put("bound.psi_minibatch_general", bound.general);
        }
        Command::Nocomm => {
            let k: usize = cfg.get_or("net.k", 1)?;
            let per_node_b: u64 = cfg.get_or("per_node_b", 1)?;
            let schedule = build_schedule(cfg, problem, per_node_b)?;
            variants.push(Variant {
                label: "nocomm".into(),
                run: Box::new(move |rng| {
                    Ok(from_ledger(&run_no_comm(rule, &schedule, problem, m, k, per_node_b, rng, RunOptions::default())?.ledger))
                }),
            });
            report.put("bound.psi_nocomm", analysis::psi_nocomm(&params));
        }
        Command::Dmb | Command::Interlaced => {
            let net = network.as_ref().expect("network built");
            let b: u64 = cfg.get_or("b", net.k() as u64)?;
            let mu = net.mu(cfg)?;
            report.put("net.depth", net.tree.depth());
            report.put("net.mu", mu);
            if cfg.command == Command::Dmb {
                variants.push(dmb_variant("dmb".into(), rule, problem, &net.tree, cfg, m, b, mu)?);
            } else {
                check_multiple(b, net.k())?;
                let schedule = build_schedule(cfg, problem, b)?;
                let batch = BatchSchedule::new(b, mu, net.k())?;
                if mu % b != 0 {
                    return Err(CliError::Config(format!("interlaced runs need b | mu, got b = {b}, mu = {mu}")));
                }
                report.put("interlaced.instances", 1 + mu / b);
                let tree = &net.tree;
                variants.push(Variant {
                    label: "interlaced".into(),
                    run: Box::new(move |rng| {
                        let out = run_interlaced(rule, &schedule, problem, m, tree, &batch, rng, RunOptions::default(), false)?;
                        Ok(from_ledger(&out.run.ledger))
                    }),
                });
            }
            params.b = b as f64;
            params.mu = mu as f64;
            params.k = net.k() as f64;
            let bound = analysis::psi_dmb(&params);
            report.put("bound.psi_dmb", bound.general);
            report.put("bound.psi_dmb_intermediate", bound.intermediate);
        }
        Command::Opt => {
            let net = network.as_ref().expect("network built");
            let b: u64 = cfg.get_or("b", net.k() as u64)?;
            check_multiple(b, net.k())?;
            let schedule = build_schedule(cfg, problem, b)?;
            let tree = &net.tree;
            variants.push(Variant {
                label: "opt".into(),
                run: Box::new(move |rng| {
                    let out = run_dmb_opt(rule, &schedule, problem, m, tree, b, rng, false)?;
                    let objective = match problem.expected_loss(&out.average) {
                        Some(f) => f?,
                        None => mc_objective(problem, &out.average, &rng.substream(1))?,
                    };
                    Ok(TrialOutcome {
                        checkpoints: vec![Checkpoint {
                            t: out.samples_consumed,
                            avg_loss: objective,
                            regret: None,
                        }],
                        avg_loss: objective,
                        regret: None,
                        gap: optimality_gap(problem, &out.average).ok(),
                    })
                }),
            });
            params.b = b as f64;
            report.put("bound.gap", analysis::gap_bound(&params));
        }
        Command::SweepBatch => {
            let net = network.as_ref().expect("network built");
            let mu = net.mu(cfg)?;
            report.put("net.mu", mu);
            let list = cfg
                .get_list::<u64>("b_list")?
                .unwrap_or_else(|| (0..=10).map(|e| 1u64 << e).collect());
            for b in list {
                variants.push(dmb_variant(format!("b={b}"), rule, problem, &net.tree, cfg, m, b, mu)?);
            }
        }
        Command::SweepLatency => {
            let net = network.as_ref().expect("network built");
            let b: u64 = cfg.get_or("b", net.k() as u64)?;
            let list = cfg.get_list::<u64>("mu_list")?.unwrap_or_else(|| vec![0, 40, 400, 4000]);
            for mu in list {
                variants.push(dmb_variant(format!("mu={mu}"), rule, problem, &net.tree, cfg, m, b, mu)?);
            }
        }
        Command::Bounds | Command::Speedup | Command::BatchSize | Command::Replay => unreachable!("not a simulation"),
    }
    run_variants(cfg, &variants, report)
}

/// Monte Carlo estimate of `F(w)` on a dedicated substream.
fn mc_objective(problem: &Problem, w: &Vector, rng: &Rng) -> dmb_core::Result<f64> {
    let mut stream = problem.stream(rng.clone());
    let mut total = dmb_core::vector::CompensatedSum::new();
    for _ in 0..OBJECTIVE_SAMPLES {
        total.add(problem.loss_value(w, &stream.next_input()?)?);
    }
    Ok(total.total() / OBJECTIVE_SAMPLES as f64)
}

fn bounds(cfg: &Config, report: &mut Report) -> CliResult<()> {
    let p = BoundParams {
        sigma2: cfg.get_or("sigma2", 1.0)?,
        m: cfg.get_or("m", 10_000u64)? as f64,
        d: cfg.get_or("D", 1.0)?,
        l: cfg.get_or("L", 1.0)?,
        f0: cfg.get("F0")?,
        b: cfg.get_or("b", 1u64)? as f64,
        mu: cfg.get_or("net.mu", 0u64)? as f64,
        k: cfg.get_or("net.k", 1u64)? as f64,
        delta: cfg.get_or("delta", 0.0)?,
        rho: cfg.get_or("rho", 1.0 / 3.0)?,
        theta: cfg.get_or("theta", 1.0)?,
    };
    p.validate()?;
    let mb = analysis::psi_minibatch(&p);
    let dmb = analysis::psi_dmb(&p);
    let lines = [
        ("psi_serial", analysis::psi_serial(&p)),
        ("psi_minibatch", mb.closed),
        ("psi_minibatch_general", mb.general),
        ("psi_dmb", dmb.general),
        ("psi_dmb_intermediate", dmb.intermediate),
        ("psi_dmb_split", dmb.split),
        ("psi_dmb_cube_root", analysis::psi_dmb_cube_root(&p)),
        ("psi_nocomm", analysis::psi_nocomm(&p)),
        ("gap_bound", analysis::gap_bound(&p)),
        ("accelerated_gap_bound", analysis::accelerated_gap_bound(&p)),
        ("speedup_samples", analysis::speedup_samples(p.k, p.delta, p.b)),
    ];
    for (name, value) in lines {
        report.stdout.push(format!("{name} = {value}"));
        report.put(format!("bound.{name}"), value);
    }
    Ok(())
}

fn speedup(cfg: &Config, report: &mut Report) -> CliResult<()> {
    let net = Network::from_config(cfg)?;
    let k = net.k() as f64;
    let delta = match cfg.get("delta")? {
        Some(d) => d,
        None => compute_mu(&net.tree, net.topology.latency, net.topology.rate)?.raw / k,
    };
    let p = BoundParams {
        sigma2: cfg.get_or("sigma2", 1.0)?,
        d: cfg.get_or("D", 1.0)?,
        l: cfg.get_or("L", 1.0)?,
        k,
        delta,
        rho: cfg.get_or("rho", 1.0 / 3.0)?,
        theta: cfg.get_or("theta", 1.0)?,
        ..BoundParams::default()
    };
    p.validate()?;
    let eps = cfg
        .get_list::<f64>("eps_list")?
        .unwrap_or_else(|| (1..=10).map(|e| 10f64.powi(-e)).collect());
    report.stdout.push(format!("k = {k}, delta = {delta}, rho = {}, theta = {}", p.rho, p.theta));
    report.stdout.push("eps,m_srl,m_dmb,b,S,S_over_k".into());
    for e in eps {
        let srl = analysis::m_srl(e, &p)?;
        let dmb = analysis::m_dmb(e, &p)?;
        let b = analysis::growing_batch(dmb, &p);
        let s = analysis::speedup_eps(e, &p)?;
        report.stdout.push(format!("{e},{srl},{dmb},{b},{s},{}", s / k));
        report.put(format!("speedup.{e}"), s);
    }
    Ok(())
}

fn batch_size(cfg: &Config, report: &mut Report) -> CliResult<()> {
    let m: u64 = horizon(cfg)?;
    let rho = cfg.get_or("rho", 1.0 / 3.0)?;
    match cfg.get_str("batch_mode", "fixed") {
        "fixed" => {
            let k = cfg.get::<u64>("net.k")?;
            let b = analysis::select_batch_size(m, rho, k)?;
            report.stdout.push(format!("b = {b}"));
            let pow2 = b.next_power_of_two();
            let lower = pow2 / 2;
            let nearest = if lower > 0 && b - lower < pow2 - b { lower } else { pow2 };
            report.stdout.push(format!("nearest_power_of_two = {nearest}"));
            if nearest != b {
                report
                    .stdout
                    .push(format!("note: round(m^rho) gives {b}; a power-of-two batch would be {nearest}"));
            }
            report.put("b", b);
        }
        "doubling" => {
            report.stdout.push("epoch,start,len,b".into());
            for e in analysis::doubling_plan(m, rho)? {
                report.stdout.push(format!("{},{},{},{}", e.epoch, e.start, e.len, e.b));
            }
        }
        other => return Err(CliError::Config(format!("unknown batch_mode {other:?}"))),
    }
    Ok(())
}
