//! Step-parameter schedules `α_j = L + β_j`.

use crate::error::{Error, Result};

/// A schedule of the update parameter `α_j`, stored as the smoothness part
/// `L` plus the growth part `β_j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Schedule {
    /// `α_j = L + γ√j`.
    Sqrt { smoothness: f64, gamma: f64 },
    /// `α_j = L + β`.
    Constant { smoothness: f64, beta: f64 },
}

fn check_nonneg(name: &str, x: f64) -> Result<()> {
    if x.is_finite() && x >= 0.0 {
        Ok(())
    } else {
        Err(Error::Schedule(format!("{name} must be finite and >= 0, got {x}")))
    }
}

impl Schedule {
    pub fn sqrt(smoothness: f64, gamma: f64) -> Result<Self> {
        check_nonneg("L", smoothness)?;
        check_nonneg("gamma", gamma)?;
        if smoothness + gamma <= 0.0 {
            return Err(Error::Schedule("L + gamma must be positive".into()));
        }
        Ok(Schedule::Sqrt { smoothness, gamma })
    }

    /// `α_j = L + (σ/(√b·D))√j`: the variance-tuned choice for averaged
    /// gradients over batches of size `batch` (`batch = 1` for serial runs).
    pub fn variance_tuned(smoothness: f64, sigma: f64, diameter: f64, batch: u64) -> Result<Self> {
        check_nonneg("sigma", sigma)?;
        if !(diameter > 0.0) {
            return Err(Error::Schedule(format!("D must be positive, got {diameter}")));
        }
        if batch == 0 {
            return Err(Error::Schedule("batch size must be >= 1".into()));
        }
        Self::sqrt(smoothness, sigma / ((batch as f64).sqrt() * diameter))
    }

    /// `α_j = L + (γ₀/√b)√j`, a hand-picked constant divided by `√b`.
    pub fn batch_scaled(smoothness: f64, gamma0: f64, batch: u64) -> Result<Self> {
        if batch == 0 {
            return Err(Error::Schedule("batch size must be >= 1".into()));
        }
        Self::sqrt(smoothness, gamma0 / (batch as f64).sqrt())
    }

    pub fn constant(smoothness: f64, beta: f64) -> Result<Self> {
        check_nonneg("L", smoothness)?;
        check_nonneg("beta", beta)?;
        if smoothness + beta <= 0.0 {
            return Err(Error::Schedule("L + beta must be positive".into()));
        }
        Ok(Schedule::Constant { smoothness, beta })
    }

    /// Constant mirror-descent parameter for a known horizon:
    /// `β = σ√m / √(2 h(w*))`.
    pub fn constant_for_horizon(smoothness: f64, sigma: f64, h_star: f64, horizon: u64) -> Result<Self> {
        if !(h_star > 0.0) {
            return Err(Error::Schedule(format!("h(w*) must be positive, got {h_star}")));
        }
        check_nonneg("sigma", sigma)?;
        Self::constant(smoothness, sigma * (horizon as f64).sqrt() / (2.0 * h_star).sqrt())
    }

    pub fn smoothness(&self) -> f64 {
        match *self {
            Schedule::Sqrt { smoothness, .. } | Schedule::Constant { smoothness, .. } => smoothness,
        }
    }

    /// `β_j = α_j − L`.
    pub fn beta(&self, j: u64) -> f64 {
        match *self {
            Schedule::Sqrt { gamma, .. } => gamma * (j as f64).sqrt(),
            Schedule::Constant { beta, .. } => beta,
        }
    }

    /// `α_j` for update index `j ≥ 1`.
    pub fn alpha(&self, j: u64) -> f64 {
        self.smoothness() + self.beta(j)
    }
}

/// `α_j` of `schedule`.
pub fn schedule_alpha(schedule: &Schedule, j: u64) -> f64 {
    schedule.alpha(j)
}
