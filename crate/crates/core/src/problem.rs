//! Stochastic problems: a loss family, an i.i.d. input source, and the
//! constants (`L`, `σ²`, `D`) the step-size schedules and bounds need.

use std::f64::consts::LN_2;
use std::sync::Arc;

use crate::error::{check_dim, Error, Result};
use crate::loss::Loss;
use crate::rng::Rng;
use crate::vector::{Vector, VectorAccumulator};

/// Where inputs `z` come from.
#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    /// `z ~ Normal(mean, sd² I)`.
    Gaussian { mean: Vector, sd: f64 },
    /// Sparse binary features `x` with exactly `sparsity` ones, label
    /// `y ∈ {±1}` drawn from `sigmoid(⟨truth, x⟩)` and flipped with
    /// probability `label_noise`; the input is `z = y·x`.
    SparseLogistic {
        truth: Vector,
        sparsity: usize,
        label_noise: f64,
    },
    /// `z ≡ value` (zero variance).
    Constant(Vector),
    /// A finite recorded sequence; running past its end is an error.
    Replay(Arc<Vec<Vector>>),
}

impl Source {
    fn draw(&self, rng: &mut Rng, position: u64) -> Result<Vector> {
        match self {
            Source::Gaussian { mean, sd } => Ok(mean.iter().map(|m| m + sd * rng.normal()).collect()),
            Source::SparseLogistic {
                truth,
                sparsity,
                label_noise,
            } => {
                let n = truth.dim();
                let active = rng.distinct_indices(n, *sparsity);
                let margin: f64 = active.iter().map(|&i| truth[i]).sum();
                let p = 1.0 / (1.0 + (-margin).exp());
                let mut label = if rng.bernoulli(p) { 1.0 } else { -1.0 };
                if rng.bernoulli(*label_noise) {
                    label = -label;
                }
                let mut z = Vector::zeros(n);
                for i in active {
                    z[i] = label;
                }
                Ok(z)
            }
            Source::Constant(z) => Ok(z.clone()),
            Source::Replay(inputs) => inputs
                .get(position as usize)
                .cloned()
                .ok_or_else(|| Error::Run(format!("replay source exhausted after {} inputs", inputs.len()))),
        }
    }
}

/// A stochastic problem `min_w F(w) = E_z f(w, z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub loss: Loss,
    pub dim: usize,
    /// Smoothness constant `L` of `f(·, z)`.
    pub smoothness: f64,
    /// Upper bound `σ²` on the gradient variance.
    pub grad_variance: f64,
    /// Scale `D` used by the schedules and bounds.
    pub diameter: f64,
    /// Known minimizer `w*` of `F`, the regret comparator.
    pub minimizer: Option<Vector>,
    pub source: Source,
}

impl Problem {
    /// Quadratic loss with `z ~ Normal(w*, σ_z² I)`: `L = 1`, `σ² = nσ_z²`,
    /// `F(w) = ½‖w − w*‖² + ½nσ_z²`, and `D = ‖w*‖/√2` (1 when `w* = 0`).
    pub fn quadratic(w_star: Vector, sigma_z: f64) -> Result<Self> {
        if !(sigma_z >= 0.0) || !sigma_z.is_finite() {
            return Err(Error::Input(format!("sigma_z must be >= 0, got {sigma_z}")));
        }
        if !w_star.is_finite() || w_star.dim() == 0 {
            return Err(Error::Input("w* must be a finite non-empty vector".into()));
        }
        let n = w_star.dim();
        let diameter = default_diameter(&w_star);
        Ok(Problem {
            loss: Loss::Quadratic,
            dim: n,
            smoothness: 1.0,
            grad_variance: n as f64 * sigma_z * sigma_z,
            diameter,
            minimizer: Some(w_star.clone()),
            source: Source::Gaussian {
                mean: w_star,
                sd: sigma_z,
            },
        })
    }

    /// Deterministic source `z ≡ value`. For the quadratic loss the
    /// minimizer is `value` itself.
    pub fn constant(loss: Loss, value: Vector) -> Result<Self> {
        if !value.is_finite() || value.dim() == 0 {
            return Err(Error::Input("constant input must be a finite non-empty vector".into()));
        }
        let (smoothness, minimizer, diameter) = match loss {
            Loss::Quadratic => (1.0, Some(value.clone()), default_diameter(&value)),
            Loss::Logistic => (value.norm_sq() / (4.0 * LN_2), None, 1.0),
        };
        Ok(Problem {
            loss,
            dim: value.dim(),
            smoothness,
            grad_variance: 0.0,
            diameter,
            minimizer,
            source: Source::Constant(value),
        })
    }

    /// A finite, recorded input sequence.
    pub fn replay(loss: Loss, inputs: Vec<Vector>, minimizer: Option<Vector>) -> Result<Self> {
        let dim = inputs
            .first()
            .map(Vector::dim)
            .ok_or_else(|| Error::Input("replay source needs at least one input".into()))?;
        for z in &inputs {
            check_dim(dim, z.dim())?;
        }
        if let Some(w) = &minimizer {
            check_dim(dim, w.dim())?;
        }
        let smoothness = match loss {
            Loss::Quadratic => 1.0,
            Loss::Logistic => inputs.iter().map(Vector::norm_sq).fold(0.0, f64::max) / (4.0 * LN_2),
        };
        Ok(Problem {
            loss,
            dim,
            smoothness,
            grad_variance: 0.0,
            diameter: minimizer.as_ref().map_or(1.0, default_diameter),
            minimizer,
            source: Source::Replay(Arc::new(inputs)),
        })
    }

    pub fn with_diameter(mut self, diameter: f64) -> Result<Self> {
        if !(diameter > 0.0) || !diameter.is_finite() {
            return Err(Error::Input(format!("D must be positive, got {diameter}")));
        }
        self.diameter = diameter;
        Ok(self)
    }

    pub fn with_smoothness(mut self, smoothness: f64) -> Result<Self> {
        if !(smoothness >= 0.0) || !smoothness.is_finite() {
            return Err(Error::Input(format!("L must be >= 0, got {smoothness}")));
        }
        self.smoothness = smoothness;
        Ok(self)
    }

    pub fn with_grad_variance(mut self, grad_variance: f64) -> Result<Self> {
        if !(grad_variance >= 0.0) || !grad_variance.is_finite() {
            return Err(Error::Input(format!("sigma^2 must be >= 0, got {grad_variance}")));
        }
        self.grad_variance = grad_variance;
        Ok(self)
    }

    pub fn sigma(&self) -> f64 {
        self.grad_variance.sqrt()
    }

    /// An input stream drawing from this problem's source with `rng`.
    pub fn stream(&self, rng: Rng) -> InputStream<'_> {
        InputStream {
            source: &self.source,
            rng,
            position: 0,
        }
    }

    pub fn loss_value(&self, w: &Vector, z: &Vector) -> Result<f64> {
        self.loss.value(w, z)
    }

    pub fn loss_gradient(&self, w: &Vector, z: &Vector) -> Result<Vector> {
        self.loss.gradient(w, z)
    }

    /// Closed-form `F(w)`, when the source admits one.
    pub fn expected_loss(&self, w: &Vector) -> Option<Result<f64>> {
        match (&self.loss, &self.source) {
            (Loss::Quadratic, Source::Gaussian { mean, sd }) => Some(
                w.dist_sq(mean)
                    .map(|d| 0.5 * d + 0.5 * self.dim as f64 * sd * sd),
            ),
            (loss, Source::Constant(z)) => Some(loss.value(w, z)),
            _ => None,
        }
    }

    /// Closed-form `∇F(w)`, when the source admits one.
    pub fn expected_gradient(&self, w: &Vector) -> Option<Result<Vector>> {
        match (&self.loss, &self.source) {
            (Loss::Quadratic, Source::Gaussian { mean, .. }) => Some(w.sub(mean)),
            (loss, Source::Constant(z)) => Some(loss.gradient(w, z)),
            _ => None,
        }
    }

    /// Empirical `E‖∇f̄(w, z̄) − ∇F(w)‖²` over `samples` mini-batches of size
    /// `batch`. Uses the closed-form `∇F` when available and the pooled mean
    /// of the batch gradients (with the unbiased `samples − 1` divisor)
    /// otherwise.
    pub fn empirical_grad_variance(
        &self,
        w: &Vector,
        batch: usize,
        samples: usize,
        rng: Rng,
    ) -> Result<f64> {
        check_dim(self.dim, w.dim())?;
        if batch == 0 || samples < 2 {
            return Err(Error::Input("need batch >= 1 and samples >= 2".into()));
        }
        let mut stream = self.stream(rng);
        let mut batch_means = Vec::with_capacity(samples);
        for _ in 0..samples {
            let mut acc = VectorAccumulator::new(self.dim);
            for _ in 0..batch {
                let z = stream.next_input()?;
                acc.add(&self.loss_gradient(w, &z)?)?;
            }
            batch_means.push(acc.total().scaled(1.0 / batch as f64));
        }
        let (center, divisor) = match self.expected_gradient(w) {
            Some(g) => (g?, samples as f64),
            None => (Vector::mean_of(&batch_means)?, (samples - 1) as f64),
        };
        let total: crate::vector::CompensatedSum = batch_means
            .iter()
            .map(|g| g.dist_sq(&center).expect("dimensions checked"))
            .collect();
        Ok(total.total() / divisor)
    }
}

fn default_diameter(w_star: &Vector) -> f64 {
    let d = w_star.norm() / std::f64::consts::SQRT_2;
    if d > 0.0 {
        d
    } else {
        1.0
    }
}

/// Sequential reader over a problem's source.
#[derive(Debug, Clone)]
pub struct InputStream<'a> {
    source: &'a Source,
    rng: Rng,
    position: u64,
}

impl InputStream<'_> {
    pub fn next_input(&mut self) -> Result<Vector> {
        let z = self.source.draw(&mut self.rng, self.position)?;
        self.position += 1;
        Ok(z)
    }

    /// Inputs consumed so far.
    pub fn position(&self) -> u64 {
        self.position
    }
}

/// Number of samples behind the logistic variance estimate.
const VARIANCE_SAMPLES: usize = 20_000;

/// Synthetic sparse binary-classification stream over `n` features.
///
/// Ground-truth weights are nonzero with probability
/// `ground_truth_density`, each drawn from `Normal(0, 2²)`. The recorded
/// `L = max‖z‖²/(4 ln 2) = sparsity/(4 ln 2)`, and `σ²` is twice the largest
/// empirical gradient variance measured at `w = 0` and at the ground truth.
pub fn logistic_stream(
    rng: &Rng,
    n: usize,
    sparsity: usize,
    ground_truth_density: f64,
    label_noise: f64,
) -> Result<Problem> {
    if n == 0 || sparsity == 0 || sparsity > n {
        return Err(Error::Input(format!(
            "need 0 < sparsity <= n, got sparsity={sparsity}, n={n}"
        )));
    }
    if !(0.0..=1.0).contains(&ground_truth_density) {
        return Err(Error::Input(format!(
            "ground truth density must lie in [0, 1], got {ground_truth_density}"
        )));
    }
    if !(0.0..=0.5).contains(&label_noise) {
        return Err(Error::Input(format!(
            "label noise must lie in [0, 0.5], got {label_noise}"
        )));
    }
    let mut truth_rng = rng.substream(0x7275_7468);
    let truth: Vector = (0..n)
        .map(|_| {
            if truth_rng.bernoulli(ground_truth_density) {
                2.0 * truth_rng.normal()
            } else {
                0.0
            }
        })
        .collect();
    let mut problem = Problem {
        loss: Loss::Logistic,
        dim: n,
        smoothness: sparsity as f64 / (4.0 * LN_2),
        grad_variance: 0.0,
        diameter: default_diameter(&truth),
        minimizer: None,
        source: Source::SparseLogistic {
            truth: truth.clone(),
            sparsity,
            label_noise,
        },
    };
    let at_zero = problem.empirical_grad_variance(
        &Vector::zeros(n),
        1,
        VARIANCE_SAMPLES,
        rng.substream(0x7661_7230),
    )?;
    let at_truth =
        problem.empirical_grad_variance(&truth, 1, VARIANCE_SAMPLES, rng.substream(0x7661_7231))?;
    problem.grad_variance = 2.0 * at_zero.max(at_truth);
    Ok(problem)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_records_constants() {
        let p = Problem::quadratic(Vector::new(vec![1.0, 1.0, 0.0, 0.0]), 0.5).unwrap();
        assert_eq!(p.smoothness, 1.0);
        assert_eq!(p.grad_variance, 1.0);
        assert!((p.diameter - 1.0).abs() < 1e-15);
        assert!(Problem::quadratic(Vector::zeros(2), -0.1).is_err());
    }

    #[test]
    fn quadratic_minimizer_is_stationary() {
        let w_star = Vector::new(vec![0.3, -1.2, 2.0]);
        let p = Problem::quadratic(w_star.clone(), 0.7).unwrap();
        let h = 1e-5;
        for i in 0..3 {
            let mut plus = w_star.clone();
            let mut minus = w_star.clone();
            plus[i] += h;
            minus[i] -= h;
            let fd = (p.expected_loss(&plus).unwrap().unwrap()
                - p.expected_loss(&minus).unwrap().unwrap())
                / (2.0 * h);
            assert!(fd.abs() < 1e-8);
        }
    }

    #[test]
    fn quadratic_gradient_variance_is_n_sigma_sq() {
        let p = Problem::quadratic(Vector::new(vec![0.5, -0.5, 1.0, 2.0]), 0.5).unwrap();
        let w = Vector::new(vec![3.0, 0.0, -1.0, 0.25]);
        let v = p.empirical_grad_variance(&w, 1, 100_000, Rng::new(77)).unwrap();
        assert!((v - 1.0).abs() < 0.05, "variance {v}");
    }

    #[test]
    fn constant_source_has_zero_variance() {
        let p = Problem::constant(Loss::Quadratic, Vector::new(vec![1.0, 2.0])).unwrap();
        let v = p
            .empirical_grad_variance(&Vector::zeros(2), 4, 100, Rng::new(1))
            .unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn replay_exhaustion_is_a_run_error() {
        let p = Problem::replay(Loss::Quadratic, vec![Vector::zeros(1); 2], None).unwrap();
        let mut s = p.stream(Rng::new(0));
        s.next_input().unwrap();
        s.next_input().unwrap();
        assert!(matches!(s.next_input(), Err(Error::Run(_))));
    }

    #[test]
    fn logistic_stream_smoothness_and_norms() {
        let p = logistic_stream(&Rng::new(5), 100, 5, 0.2, 0.0).unwrap();
        assert!((p.smoothness - 5.0 / (4.0 * LN_2)).abs() < 1e-15);
        assert!(p.grad_variance > 0.0);
        let mut s = p.stream(Rng::new(6));
        for _ in 0..1000 {
            assert_eq!(s.next_input().unwrap().norm_sq(), 5.0);
        }
    }

    #[test]
    fn logistic_stream_is_deterministic() {
        let a = logistic_stream(&Rng::new(8), 30, 3, 0.5, 0.1).unwrap();
        let b = logistic_stream(&Rng::new(8), 30, 3, 0.5, 0.1).unwrap();
        assert_eq!(a, b);
        let mut sa = a.stream(Rng::with_stream(8, 1));
        let mut sb = b.stream(Rng::with_stream(8, 1));
        for _ in 0..100 {
            assert_eq!(sa.next_input().unwrap(), sb.next_input().unwrap());
        }
    }

    #[test]
    fn zero_truth_gives_fair_labels() {
        let p = logistic_stream(&Rng::new(9), 10, 10, 0.0, 0.0).unwrap();
        let mut s = p.stream(Rng::new(10));
        let positives = (0..20_000)
            .filter(|_| s.next_input().unwrap()[0] > 0.0)
            .count() as f64;
        assert!((positives / 20_000.0 - 0.5).abs() < 0.015);
    }

    #[test]
    fn logistic_stream_rejects_bad_parameters() {
        let r = Rng::new(0);
        assert!(logistic_stream(&r, 10, 0, 0.5, 0.0).is_err());
        assert!(logistic_stream(&r, 10, 11, 0.5, 0.0).is_err());
        assert!(logistic_stream(&r, 10, 2, 1.5, 0.0).is_err());
        assert!(logistic_stream(&r, 10, 2, 0.5, 0.7).is_err());
    }
}
