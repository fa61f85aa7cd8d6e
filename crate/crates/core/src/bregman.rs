//! Strongly convex generators `h` and the Bregman divergences they induce.

use crate::error::{check_dim, Error, Result};
use crate::feasible::{project, FeasibleSet};
use crate::vector::Vector;

/// A 1-strongly convex generator with `min h = h(0) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub enum BregmanGenerator {
    /// `h(w) = ½‖w‖²`.
    Euclidean,
    /// `h(w) = ½ Σ aᵢ wᵢ²` with every `aᵢ ≥ 1`.
    Diagonal { weights: Vector },
}

impl BregmanGenerator {
    pub fn diagonal(weights: Vector) -> Result<Self> {
        if weights.iter().all(|a| a.is_finite() && *a >= 1.0) {
            Ok(BregmanGenerator::Diagonal { weights })
        } else {
            Err(Error::Input(
                "diagonal generator weights must be >= 1 for 1-strong convexity".into(),
            ))
        }
    }

    /// `argmin h`, the initial predictor `w₁`.
    pub fn minimizer(&self, dim: usize) -> Vector {
        Vector::zeros(dim)
    }

    fn weight(&self, i: usize) -> f64 {
        match self {
            BregmanGenerator::Euclidean => 1.0,
            BregmanGenerator::Diagonal { weights } => weights[i],
        }
    }

    fn check(&self, w: &Vector) -> Result<()> {
        match self {
            BregmanGenerator::Euclidean => Ok(()),
            BregmanGenerator::Diagonal { weights } => check_dim(weights.dim(), w.dim()),
        }
    }

    pub fn value(&self, w: &Vector) -> Result<f64> {
        self.check(w)?;
        Ok(0.5
            * w.iter()
                .enumerate()
                .map(|(i, x)| self.weight(i) * x * x)
                .sum::<f64>())
    }

    pub fn gradient(&self, w: &Vector) -> Result<Vector> {
        self.check(w)?;
        Ok(w.iter()
            .enumerate()
            .map(|(i, x)| self.weight(i) * x)
            .collect())
    }

    /// `d(u, v) = h(u) − h(v) − ⟨∇h(v), u − v⟩`.
    pub fn divergence(&self, u: &Vector, v: &Vector) -> Result<f64> {
        check_dim(u.dim(), v.dim())?;
        self.check(u)?;
        Ok(0.5
            * u.iter()
                .zip(v.iter())
                .enumerate()
                .map(|(i, (a, b))| self.weight(i) * (a - b) * (a - b))
                .sum::<f64>())
    }

    /// `argmin_{w ∈ set} ⟨g, w⟩ + scale · d(w, center)`.
    pub fn mirror_step(
        &self,
        g: &Vector,
        scale: f64,
        center: &Vector,
        set: &FeasibleSet,
    ) -> Result<Vector> {
        check_dim(center.dim(), g.dim())?;
        self.check(center)?;
        if !(scale > 0.0) {
            return Err(Error::Schedule(format!(
                "mirror step scale must be positive, got {scale}"
            )));
        }
        let free: Vector = (0..g.dim())
            .map(|i| center[i] - g[i] / (scale * self.weight(i)))
            .collect();
        match (self, set) {
            (BregmanGenerator::Euclidean, _) | (_, FeasibleSet::Unconstrained) => project(set, &free),
            (BregmanGenerator::Diagonal { .. }, FeasibleSet::Box { .. }) => project(set, &free),
            (BregmanGenerator::Diagonal { .. }, FeasibleSet::Ball { radius }) => {
                Ok(self.weighted_ball_step(g, scale, center, *radius, free))
            }
        }
    }

    /// Solves the ball-constrained diagonal case through its Lagrange
    /// multiplier: `wᵢ(λ) = (s aᵢ cᵢ − gᵢ)/(s aᵢ + λ)`, with `‖w(λ)‖` decreasing.
    fn weighted_ball_step(
        &self,
        g: &Vector,
        scale: f64,
        center: &Vector,
        radius: f64,
        free: Vector,
    ) -> Vector {
        if free.norm() <= radius {
            return free;
        }
        let numer: Vector = (0..g.dim())
            .map(|i| scale * self.weight(i) * center[i] - g[i])
            .collect();
        let at = |lambda: f64| -> Vector {
            (0..g.dim())
                .map(|i| numer[i] / (scale * self.weight(i) + lambda))
                .collect()
        };
        let (mut lo, mut hi) = (0.0, numer.norm() / radius);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if at(mid).norm() > radius {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mut w = at(hi);
        let norm = w.norm();
        if norm > radius {
            w.scale_mut(radius / norm);
        }
        w
    }
}

/// The divergence `d_h(u, v)`.
pub fn bregman(generator: &BregmanGenerator, u: &Vector, v: &Vector) -> Result<f64> {
    generator.divergence(u, v)
}
