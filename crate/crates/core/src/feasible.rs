//! Closed convex feasible sets and Euclidean projection onto them.

use crate::error::{check_dim, Error, Result};
use crate::vector::Vector;

/// The set `W` predictors are confined to.
#[derive(Debug, Clone, PartialEq)]
pub enum FeasibleSet {
    Unconstrained,
    /// `{w : ‖w‖ ≤ radius}`.
    Ball { radius: f64 },
    /// `{w : lower ≤ w ≤ upper}` coordinatewise.
    Box { lower: Vector, upper: Vector },
}

impl FeasibleSet {
    pub fn ball(radius: f64) -> Result<Self> {
        let set = FeasibleSet::Ball { radius };
        set.validate()?;
        Ok(set)
    }

    pub fn boxed(lower: Vector, upper: Vector) -> Result<Self> {
        let set = FeasibleSet::Box { lower, upper };
        set.validate()?;
        Ok(set)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            FeasibleSet::Unconstrained => Ok(()),
            FeasibleSet::Ball { radius } => {
                if radius.is_finite() && *radius > 0.0 {
                    Ok(())
                } else {
                    Err(Error::Input(format!("ball radius must be positive, got {radius}")))
                }
            }
            FeasibleSet::Box { lower, upper } => {
                check_dim(lower.dim(), upper.dim())?;
                if lower.iter().zip(upper.iter()).all(|(l, u)| l <= u) {
                    Ok(())
                } else {
                    Err(Error::Input("box requires lower <= upper coordinatewise".into()))
                }
            }
        }
    }

    /// Whether `v` lies in the set, allowing `tol` slack.
    pub fn contains(&self, v: &Vector, tol: f64) -> bool {
        match self {
            FeasibleSet::Unconstrained => true,
            FeasibleSet::Ball { radius } => v.norm() <= radius + tol,
            FeasibleSet::Box { lower, upper } => v
                .iter()
                .zip(lower.iter().zip(upper.iter()))
                .all(|(x, (l, u))| *x >= l - tol && *x <= u + tol),
        }
    }

    /// Maximum `‖u − v‖²/2` over the set, when bounded.
    pub fn half_diameter_sq(&self) -> Option<f64> {
        match self {
            FeasibleSet::Unconstrained => None,
            FeasibleSet::Ball { radius } => Some(2.0 * radius * radius),
            FeasibleSet::Box { lower, upper } => Some(
                lower
                    .iter()
                    .zip(upper.iter())
                    .map(|(l, u)| (u - l) * (u - l))
                    .sum::<f64>()
                    / 2.0,
            ),
        }
    }
}

/// Euclidean projection `argmin_{w ∈ set} ‖w − v‖`.
pub fn project(set: &FeasibleSet, v: &Vector) -> Result<Vector> {
    let mut out = v.clone();
    project_in_place(set, &mut out)?;
    Ok(out)
}

pub fn project_in_place(set: &FeasibleSet, v: &mut Vector) -> Result<()> {
    match set {
        FeasibleSet::Unconstrained => {}
        FeasibleSet::Ball { radius } => {
            let norm = v.norm();
            if norm > *radius {
                v.scale_mut(radius / norm);
            }
        }
        FeasibleSet::Box { lower, upper } => {
            check_dim(lower.dim(), v.dim())?;
            for (x, (l, u)) in v
                .as_mut_slice()
                .iter_mut()
                .zip(lower.iter().zip(upper.iter()))
            {
                *x = x.clamp(*l, *u);
            }
        }
    }
    Ok(())
}
