//! Numeric minimizers used as oracles for the closed-form update rules.
//!
//! Separable objectives are minimized coordinatewise by bisection on a
//! monotone (sub)derivative; ball constraints use projected gradient
//! iterations with a short step run to a fixed point.

#![allow(dead_code)]

/// Root of a non-decreasing (sub)derivative `d` on `[lo, hi]`, clamped to
/// the endpoints when the derivative does not change sign.
pub fn bisect_derivative(d: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    if d(lo) >= 0.0 {
        return lo;
    }
    if d(hi) <= 0.0 {
        return hi;
    }
    let (mut a, mut b) = (lo, hi);
    for _ in 0..400 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if d(mid) > 0.0 {
            b = mid;
        } else {
            a = mid;
        }
    }
    0.5 * (a + b)
}

fn radial(w: &mut [f64], radius: f64) {
    let n = w.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > radius {
        w.iter_mut().for_each(|x| *x *= radius / n);
    }
}

/// `argmin_{‖w‖ ≤ radius} ⟨g, w⟩ + (α/2) Σ cᵢ (wᵢ − vᵢ)²` by projected gradient.
pub fn weighted_quadratic_on_ball(g: &[f64], alpha: f64, weights: &[f64], center: &[f64], radius: f64) -> Vec<f64> {
    let c_max = weights.iter().cloned().fold(0.0, f64::max);
    let step = 0.5 / (alpha * c_max);
    let mut w = vec![0.0; g.len()];
    for _ in 0..20_000 {
        let mut next: Vec<f64> = (0..g.len())
            .map(|i| w[i] - step * (g[i] + alpha * weights[i] * (w[i] - center[i])))
            .collect();
        radial(&mut next, radius);
        let moved = next.iter().zip(&w).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        w = next;
        if moved == 0.0 {
            break;
        }
    }
    w
}

/// Coordinatewise `argmin_{lo ≤ w ≤ hi} ⟨g, w⟩ + (α/2) Σ cᵢ (wᵢ − vᵢ)²`.
pub fn weighted_quadratic_on_box(g: &[f64], alpha: f64, weights: &[f64], center: &[f64], lower: &[f64], upper: &[f64]) -> Vec<f64> {
    (0..g.len())
        .map(|i| bisect_derivative(|x| g[i] + alpha * weights[i] * (x - center[i]), lower[i], upper[i]))
        .collect()
}

/// Unconstrained coordinatewise minimizer of the same objective.
pub fn weighted_quadratic_free(g: &[f64], alpha: f64, weights: &[f64], center: &[f64]) -> Vec<f64> {
    (0..g.len())
        .map(|i| {
            let r = center[i].abs() + g[i].abs() / (alpha * weights[i]) + 1.0;
            bisect_derivative(|x| g[i] + alpha * weights[i] * (x - center[i]), -r, r)
        })
        .collect()
}

/// Coordinatewise `argmin ⟨s, w⟩ + τ‖w‖₁ + (α/2)‖w‖²`, bisecting on the
/// subdifferential `sᵢ + αx + τ·sign(x)` (the interval `[sᵢ − τ, sᵢ + τ]` at 0).
pub fn l1_quadratic(s: &[f64], tau: f64, alpha: f64) -> Vec<f64> {
    s.iter()
        .map(|&si| {
            let r = (si.abs() + tau) / alpha + 1.0;
            let d = |x: f64| {
                if x > 0.0 {
                    si + alpha * x + tau
                } else if x < 0.0 {
                    si + alpha * x - tau
                } else if si + tau < 0.0 {
                    si + tau
                } else if si - tau > 0.0 {
                    si - tau
                } else {
                    0.0
                }
            };
            let x = bisect_derivative(d, -r, r);
            if d(0.0) == 0.0 && x.abs() < 1e-12 {
                0.0
            } else {
                x
            }
        })
        .collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
