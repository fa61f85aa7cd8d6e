//! Closed-form regret, optimality-gap and speed-up bounds, and batch-size
//! selection.

use crate::error::{Error, Result};

/// Parameters shared by the bound calculators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundParams {
    pub sigma2: f64,
    pub m: f64,
    pub d: f64,
    pub l: f64,
    /// `F(w₁) − F(w*)`; the simplified bounds use `D²L` in its place.
    pub f0: Option<f64>,
    pub b: f64,
    pub mu: f64,
    pub k: f64,
    /// Vector-sum latency in time units.
    pub delta: f64,
    pub rho: f64,
    pub theta: f64,
}

impl Default for BoundParams {
    fn default() -> Self {
        BoundParams {
            sigma2: 1.0,
            m: 1.0,
            d: 1.0,
            l: 1.0,
            f0: None,
            b: 1.0,
            mu: 0.0,
            k: 1.0,
            delta: 0.0,
            rho: 1.0 / 3.0,
            theta: 1.0,
        }
    }
}

impl BoundParams {
    pub fn sigma(&self) -> f64 {
        self.sigma2.sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("sigma2", self.sigma2),
            ("m", self.m),
            ("D", self.d),
            ("L", self.l),
            ("b", self.b),
            ("mu", self.mu),
            ("k", self.k),
            ("delta", self.delta),
            ("theta", self.theta),
        ];
        for (name, x) in fields {
            if !(x.is_finite() && x >= 0.0) {
                return Err(Error::Input(format!("{name} must be finite and >= 0, got {x}")));
            }
        }
        if let Some(f0) = self.f0 {
            if !(f0.is_finite() && f0 >= 0.0) {
                return Err(Error::Input(format!("F0 must be finite and >= 0, got {f0}")));
            }
        }
        Ok(())
    }

    fn check_rho(&self) -> Result<()> {
        if self.rho > 0.0 && self.rho < 0.5 {
            Ok(())
        } else {
            Err(Error::Input(format!("rho must lie in (0, 1/2), got {}", self.rho)))
        }
    }
}

/// Serial regret bound `ψ(σ², m) = F₀ + D²L + 2Dσ√m`, with `F₀ = D²L`
/// when absent.
pub fn psi(sigma2: f64, m: f64, d: f64, l: f64, f0: Option<f64>) -> f64 {
    f0.unwrap_or(d * d * l) + d * d * l + 2.0 * d * sigma2.sqrt() * m.sqrt()
}

pub fn psi_serial(p: &BoundParams) -> f64 {
    psi(p.sigma2, p.m, p.d, p.l, p.f0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinibatchBound {
    /// `b · ψ(σ²/b, ⌈m/b⌉)`.
    pub general: f64,
    /// `2bD²L + 2Dσ√(m + b)`.
    pub closed: f64,
}

pub fn psi_minibatch(p: &BoundParams) -> MinibatchBound {
    let (b, d, l) = (p.b, p.d, p.l);
    MinibatchBound {
        general: b * psi(p.sigma2 / b, (p.m / b).ceil(), d, l, None),
        closed: 2.0 * b * d * d * l + 2.0 * d * p.sigma() * (p.m + b).sqrt(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DmbBound {
    /// `(b+μ) · ψ(σ²/b, ⌈m/(b+μ)⌉)`.
    pub general: f64,
    /// `2(b+μ)D²L + 2Dσ√(m + μm/b + (b+μ)²/b)`.
    pub intermediate: f64,
    /// `2(b+μ)D²L + 2Dσ(√m + √(μm/b) + (b+μ)/√b)`.
    pub split: f64,
}

pub fn psi_dmb(p: &BoundParams) -> DmbBound {
    let (b, mu, d, l, m) = (p.b, p.mu, p.d, p.l, p.m);
    let s = p.sigma();
    let c = b + mu;
    DmbBound {
        general: c * psi(p.sigma2 / b, (m / c).ceil(), d, l, None),
        intermediate: 2.0 * c * d * d * l + 2.0 * d * s * (m + mu * m / b + c * c / b).sqrt(),
        split: 2.0 * c * d * d * l + 2.0 * d * s * (m.sqrt() + (mu * m / b).sqrt() + c / b.sqrt()),
    }
}

/// The five-term DMB bound for `b = m^{1/3}`:
/// `2Dσ√m + 2Dm^{1/3}(LD + σ√μ) + 2Dσm^{1/6} + 2Dσμm^{−1/6} + 2μD²L`.
pub fn psi_dmb_cube_root(p: &BoundParams) -> f64 {
    let (m, mu, d, l) = (p.m, p.mu, p.d, p.l);
    let s = p.sigma();
    2.0 * d * s * m.sqrt()
        + 2.0 * d * m.cbrt() * (l * d + s * mu.sqrt())
        + 2.0 * d * s * m.powf(1.0 / 6.0)
        + 2.0 * d * s * mu * m.powf(-1.0 / 6.0)
        + 2.0 * mu * d * d * l
}

/// No-communication bound `2kD²L + 2Dσk√⌈m/k⌉`.
pub fn psi_nocomm(p: &BoundParams) -> f64 {
    let (k, d, l) = (p.k, p.d, p.l);
    2.0 * k * d * d * l + 2.0 * d * p.sigma() * k * (p.m / k).ceil().sqrt()
}

/// Optimality-gap bound `2bD²L/m + 2Dσ/√m`.
pub fn gap_bound(p: &BoundParams) -> f64 {
    2.0 * p.b * p.d * p.d * p.l / p.m + 2.0 * p.d * p.sigma() / p.m.sqrt()
}

/// Accelerated-rate gap bound `4b²D²L/m² + 4Dσ/√m`.
pub fn accelerated_gap_bound(p: &BoundParams) -> f64 {
    4.0 * p.b * p.b * p.d * p.d * p.l / (p.m * p.m) + 4.0 * p.d * p.sigma() / p.m.sqrt()
}

/// Sample speed-up `S = k / (1 + δk/b)`.
pub fn speedup_samples(k: f64, delta: f64, b: f64) -> f64 {
    k / (1.0 + delta * k / b)
}

/// Samples for the serial method to reach gap `ε`:
/// `(D²σ²/ε²)(1 + √(1 + 2Lε/σ²))²`, or `2D²L/ε` when `σ = 0`.
pub fn m_srl(eps: f64, p: &BoundParams) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::Input(format!("epsilon must be > 0, got {eps}")));
    }
    let (d, l, s2) = (p.d, p.l, p.sigma2);
    if s2 == 0.0 {
        return Ok(2.0 * d * d * l / eps);
    }
    let inner = 1.0 + (1.0 + 2.0 * l * eps / s2).sqrt();
    Ok(d * d * s2 / (eps * eps) * inner * inner)
}

/// Batch size `b(m) = (θσ/(DL)) m^ρ` used by the DMB speed-up analysis.
pub fn growing_batch(m: f64, p: &BoundParams) -> f64 {
    p.theta * p.sigma() / (p.d * p.l) * m.powf(p.rho)
}

const BRACKET: (f64, f64) = (1.0, 1e18);
const REL_TOL: f64 = 1e-9;

/// Root of `(2Dσ/√m)(1 + θ m^{ρ−½}) = ε`, by bisection on `log m`.
pub fn m_dmb(eps: f64, p: &BoundParams) -> Result<f64> {
    p.check_rho()?;
    if !(eps > 0.0) {
        return Err(Error::Input(format!("epsilon must be > 0, got {eps}")));
    }
    if !(p.theta > 0.0) {
        return Err(Error::Input("theta must be > 0".into()));
    }
    let scale = 2.0 * p.d * p.sigma();
    if !(scale > 0.0) {
        return Err(Error::Solver("no root: the left side vanishes when D·σ = 0".into()));
    }
    let lhs = |m: f64| scale / m.sqrt() * (1.0 + p.theta * m.powf(p.rho - 0.5));
    let (mut lo, mut hi) = BRACKET;
    while lhs(lo) < eps {
        lo /= 1e3;
        if lo < 1e-300 {
            return Err(Error::Solver(format!("could not bracket the root for epsilon {eps}")));
        }
    }
    while lhs(hi) > eps {
        hi *= 1e3;
        if !hi.is_finite() || hi > 1e300 {
            return Err(Error::Solver(format!("could not bracket the root for epsilon {eps}")));
        }
    }
    let (mut a, mut b) = (lo.ln(), hi.ln());
    while (b - a).exp_m1() > REL_TOL {
        let mid = 0.5 * (a + b);
        if lhs(mid.exp()) > eps {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok((0.5 * (a + b)).exp())
}

/// Gap speed-up `S(ε) = m_srl / ((m_DMB/b)(b/k + δ))` with `b = b(m_DMB)`.
pub fn speedup_eps(eps: f64, p: &BoundParams) -> Result<f64> {
    if !(p.l > 0.0) || !(p.d > 0.0) {
        return Err(Error::Input("the growing batch size needs D > 0 and L > 0".into()));
    }
    if !(p.k >= 1.0) {
        return Err(Error::Input("k must be >= 1".into()));
    }
    let srl = m_srl(eps, p)?;
    let dmb = m_dmb(eps, p)?;
    let b = growing_batch(dmb, p);
    Ok(srl / ((dmb / b) * (b / p.k + p.delta)))
}

/// `S(ε)` on each of `eps`.
pub fn speedup_sweep(eps: &[f64], p: &BoundParams) -> Result<Vec<(f64, f64)>> {
    eps.iter().map(|&e| Ok((e, speedup_eps(e, p)?))).collect()
}

fn round_half_up(x: f64) -> u64 {
    (x + 0.5).floor() as u64
}

/// `round(m^ρ)` (half up, at least 1); with `k`, moved to the nearest
/// positive multiple of `k`.
pub fn select_batch_size(m: u64, rho: f64, k: Option<u64>) -> Result<u64> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::Input(format!("rho must lie in (0, 1), got {rho}")));
    }
    if m == 0 {
        return Err(Error::Input("m must be >= 1".into()));
    }
    let b = round_half_up((m as f64).powf(rho)).max(1);
    match k {
        None => Ok(b),
        Some(0) => Err(Error::Input("k must be >= 1".into())),
        Some(k) => Ok((round_half_up(b as f64 / k as f64)).max(1) * k),
    }
}

/// One epoch of the doubling scheme: inputs `[start, start + len)` with
/// batch size `b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DoublingEpoch {
    pub epoch: u32,
    pub start: u64,
    pub len: u64,
    pub b: u64,
}

/// Epochs of lengths `2^0, 2^1, …` covering `m` inputs, epoch `e` using
/// `b_e = round((2^e)^ρ)`.
pub fn doubling_plan(m: u64, rho: f64) -> Result<Vec<DoublingEpoch>> {
    let mut plan = Vec::new();
    let mut start = 0u64;
    let mut epoch = 0u32;
    while start < m {
        let len = 1u64 << epoch;
        plan.push(DoublingEpoch {
            epoch,
            start,
            len: len.min(m - start),
            b: select_batch_size(len, rho, None)?,
        });
        start += len;
        epoch += 1;
    }
    Ok(plan)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(m: f64) -> BoundParams {
        BoundParams {
            m,
            ..Default::default()
        }
    }

    #[test]
    fn serial_examples() {
        assert_eq!(psi_serial(&BoundParams { sigma2: 0.0, m: 12345.0, ..Default::default() }), 2.0);
        assert_eq!(psi_serial(&unit(1e4)), 202.0);
        let with_f0 = BoundParams { f0: Some(0.5), ..unit(1e4) };
        assert_eq!(psi_serial(&with_f0), 201.5);
    }

    #[test]
    fn minibatch_examples() {
        let p = BoundParams { b: 16.0, ..unit(1e4) };
        let expected = 32.0 + 2.0 * 10016f64.sqrt();
        assert!((psi_minibatch(&p).closed - expected).abs() < 1e-12);
        assert!((expected - 232.16).abs() < 5e-3);
        let one = psi_minibatch(&unit(1e4));
        assert!((one.closed - (2.0 + 2.0 * 10001f64.sqrt())).abs() < 1e-12);
        assert!(psi_minibatch(&p).general <= psi_minibatch(&p).closed);
        let full = psi_minibatch(&BoundParams { b: 1e4, ..unit(1e4) });
        assert!(full.closed >= 2e4);
    }

    #[test]
    fn dmb_reduces_to_minibatch() {
        let p = BoundParams { b: 16.0, ..unit(1e4) };
        assert_eq!(psi_dmb(&p).general, psi_minibatch(&p).general);
        let q = BoundParams { b: 100.0, mu: 40.0, ..unit(1e6) };
        let bound = psi_dmb(&q);
        let oracle = 280.0 + 2.0 * (1e6f64 + 0.4e6 + 196.0).sqrt();
        assert!((bound.intermediate - oracle).abs() < 1e-9);
        assert!(bound.general <= bound.intermediate && bound.intermediate <= bound.split);
    }

    #[test]
    fn cube_root_expansion_dominates_and_leads_with_two_d_sigma() {
        let mut ratios = Vec::new();
        for m in [1e6, 1e9, 1e12] {
            let p = BoundParams { b: f64::cbrt(m), mu: 40.0, ..unit(m) };
            let r = psi_dmb(&p).general / m.sqrt();
            assert!(r > 2.0);
            let r_exp = psi_dmb_cube_root(&p) / m.sqrt();
            assert!(r_exp >= r);
            ratios.push(r);
        }
        assert!(ratios.windows(2).all(|w| w[1] < w[0]));
        // The leading correction decays like m^{-1/6}: a factor 10^{-1/2}
        // per step of 10^3 in m.
        let q = 10f64.powf(-0.5);
        let limit = (ratios[2] - q * ratios[1]) / (1.0 - q);
        assert!((limit - 2.0).abs() < 0.02, "{limit}");
    }

    #[test]
    fn nocomm_examples() {
        let p = BoundParams { k: 16.0, ..unit(1600.0) };
        assert_eq!(psi_nocomm(&p), 352.0);
        assert_eq!(psi_nocomm(&unit(1e4)), psi_serial(&unit(1e4)));
        let big = BoundParams { k: 16.0, ..unit(1e10) };
        assert!((psi_nocomm(&big) / psi_serial(&big) - 4.0).abs() < 1e-3);
    }

    #[test]
    fn gap_examples() {
        let g = gap_bound(&unit(1e4));
        assert!((g - 0.0202).abs() < 1e-15);
        let det = BoundParams { sigma2: 0.0, b: 50.0, ..unit(50.0) };
        assert_eq!(gap_bound(&det), 2.0);
        let mut prev = 0.0;
        for b in [1.0, 2.0, 8.0, 64.0] {
            let g = gap_bound(&BoundParams { b, ..unit(1e4) });
            assert!(g > prev);
            prev = g;
        }
        assert!((accelerated_gap_bound(&unit(1e4)) - (4e-8 + 0.04)).abs() < 1e-15);
    }

    #[test]
    fn sample_speedup() {
        assert_eq!(speedup_samples(32.0, 0.0, 10.0), 32.0);
        assert_eq!(speedup_samples(32.0, 10.0, 320.0), 16.0);
        assert!((speedup_samples(32.0, 10.0, 1e9) / 32.0 - 1.0).abs() < 1e-6);
    }

    #[test]
    fn srl_examples() {
        let p = BoundParams::default();
        let v = m_srl(0.1, &p).unwrap();
        assert!((v - 100.0 * (1.0 + 1.2f64.sqrt()).powi(2)).abs() < 1e-9);
        let flat = BoundParams { l: 0.0, ..Default::default() };
        assert_eq!(m_srl(0.01, &flat).unwrap(), 4.0 / 1e-4);
        let asym = m_srl(1e-6, &p).unwrap() / (4.0 / 1e-12);
        assert!((asym - 1.0).abs() < 1e-3);
        let det = BoundParams { sigma2: 0.0, ..Default::default() };
        assert_eq!(m_srl(0.5, &det).unwrap(), 4.0);
    }

    #[test]
    fn dmb_root_has_small_residual() {
        let p = BoundParams::default();
        let m = m_dmb(0.01, &p).unwrap();
        let lhs = 2.0 / m.sqrt() * (1.0 + m.powf(1.0 / 3.0 - 0.5));
        assert!(((lhs - 0.01) / 0.01).abs() < 1e-9);
    }

    #[test]
    fn dmb_needs_at_least_serial_samples() {
        for eps in [1e-1, 1e-2, 1e-3, 1e-4, 1e-6] {
            for theta in [0.5, 1.0, 4.0] {
                let p = BoundParams { theta, ..Default::default() };
                let dmb = m_dmb(eps, &p).unwrap();
                if growing_batch(dmb, &p) > 1.0 {
                    assert!(dmb >= m_srl(eps, &p).unwrap());
                }
            }
        }
    }

    #[test]
    fn small_theta_recovers_serial() {
        let p = BoundParams { theta: 1e-12, ..Default::default() };
        let m = m_dmb(1e-3, &p).unwrap();
        assert!((m / 4e6 - 1.0).abs() < 1e-6);
    }

    #[test]
    fn solver_errors() {
        let p = BoundParams { sigma2: 0.0, ..Default::default() };
        assert!(matches!(m_dmb(0.1, &p), Err(Error::Solver(_))));
        let bad_rho = BoundParams { rho: 0.5, ..Default::default() };
        assert!(m_dmb(0.1, &bad_rho).is_err());
        assert!(m_dmb(1e-10, &BoundParams::default()).unwrap() > 1e18);
        assert!(m_dmb(1e3, &BoundParams::default()).unwrap() < 1.0);
    }

    #[test]
    fn gap_speedup_approaches_k() {
        for k in [2.0, 8.0, 32.0, 1024.0] {
            let p = BoundParams { k, delta: 4.0 * k.log2() / k, ..Default::default() };
            let eps: Vec<f64> = (1..=10).map(|e| 10f64.powi(-e)).collect();
            let sweep = speedup_sweep(&eps, &p).unwrap();
            assert!(sweep.windows(2).all(|w| w[1].1 >= w[0].1));
            assert!(sweep.last().unwrap().1 >= 0.99 * k);
        }
        let no_latency = BoundParams { k: 16.0, theta: 1e-9, ..Default::default() };
        assert!((speedup_eps(1e-4, &no_latency).unwrap() - 16.0).abs() < 1e-2);
    }

    #[test]
    fn batch_selection() {
        assert_eq!(select_batch_size(15000, 1.0 / 3.0, None).unwrap(), 25);
        assert_eq!(select_batch_size(1_000_000_000, 1.0 / 3.0, None).unwrap(), 1000);
        assert_eq!(select_batch_size(1, 1.0 / 3.0, None).unwrap(), 1);
        assert_eq!(select_batch_size(15000, 1.0 / 3.0, Some(16)).unwrap(), 32);
        assert_eq!(select_batch_size(15000, 1.0 / 3.0, Some(64)).unwrap(), 64);
        assert!(select_batch_size(10, 0.0, None).is_err());
    }

    #[test]
    fn doubling_epochs() {
        let plan = doubling_plan(100, 1.0 / 3.0).unwrap();
        assert_eq!(plan.len(), 7);
        assert_eq!(plan.iter().map(|e| e.len).sum::<u64>(), 100);
        assert_eq!(plan[6], DoublingEpoch { epoch: 6, start: 63, len: 37, b: 4 });
        assert!(plan.windows(2).all(|w| w[1].b >= w[0].b));
    }
}
