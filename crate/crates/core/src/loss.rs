//! Loss families `f(w, z)` and their gradients in `w`.

use std::f64::consts::LN_2;

use crate::error::{check_dim, Result};
use crate::vector::Vector;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Loss {
    /// `log₂(1 + exp(−⟨w, z⟩))`.
    Logistic,
    /// `½‖w − z‖²`.
    Quadratic,
}

impl Loss {
    pub fn value(&self, w: &Vector, z: &Vector) -> Result<f64> {
        match self {
            Loss::Logistic => logistic_loss(w, z),
            Loss::Quadratic => quadratic_loss(w, z),
        }
    }

    pub fn gradient(&self, w: &Vector, z: &Vector) -> Result<Vector> {
        match self {
            Loss::Logistic => logistic_grad(w, z),
            Loss::Quadratic => quadratic_grad(w, z),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Loss::Logistic => "logistic",
            Loss::Quadratic => "quadratic",
        }
    }
}

/// `ln(1 + exp(−u))` without overflow.
fn softplus_neg(u: f64) -> f64 {
    (-u).max(0.0) + (-u.abs()).exp().ln_1p()
}

/// `1 / (1 + exp(u))` without overflow.
fn logistic_weight(u: f64) -> f64 {
    if u >= 0.0 {
        let e = (-u).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + u.exp())
    }
}

pub fn logistic_loss(w: &Vector, z: &Vector) -> Result<f64> {
    let u = w.dot(z)?;
    Ok(softplus_neg(u) / LN_2)
}

pub fn logistic_grad(w: &Vector, z: &Vector) -> Result<Vector> {
    let u = w.dot(z)?;
    Ok(z.scaled(-logistic_weight(u) / LN_2))
}

pub fn quadratic_loss(w: &Vector, z: &Vector) -> Result<f64> {
    Ok(0.5 * w.dist_sq(z)?)
}

pub fn quadratic_grad(w: &Vector, z: &Vector) -> Result<Vector> {
    check_dim(w.dim(), z.dim())?;
    w.sub(z)
}
