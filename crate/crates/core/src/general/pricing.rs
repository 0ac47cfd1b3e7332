use super::{GeneralMarket, QuadratureCfg};
use crate::deriv::{central_d1, central_d1_with, central_d2, step_d1, SmoothFn};
use crate::error::{Error, Result};
use crate::ou::TimeChange;
use crate::quadrature::gaussian_expectation;
use crate::roots::solve_increasing;

const MAX_NODES: usize = 1024;
/// Absolute scale below which agreement is judged in absolute terms.
const TINY_SCALE: f64 = 1e-4;
const INV_X_TOL: f64 = 1e-13;
const INV_NEWTON_STEPS: usize = 3;

/// Mean and variance of the Gaussian smoothing the payoff at `(t, y)`.
#[inline]
fn smoothing(market: &GeneralMarket, t: f64, y: f64) -> (f64, f64) {
    let r = market.r();
    (y * market.stretch(t), (-2.0 * r * t).exp())
}

/// `E[φ(Z)]` with node doubling from `cfg.n_nodes`; returns the value and the
/// node count at which it settled.
fn doubled<F: Fn(f64) -> f64>(phi: F, mean: f64, var: f64, cfg: &QuadratureCfg) -> (f64, usize) {
    let mut n = cfg.n_nodes.max(16);
    let mut prev = gaussian_expectation(&phi, mean, var, n);
    while n < MAX_NODES {
        n *= 2;
        let cur = gaussian_expectation(&phi, mean, var, n);
        if (cur - prev).abs() <= cfg.rel_tol * cur.abs().max(TINY_SCALE) {
            return (cur, n);
        }
        prev = cur;
    }
    (prev, n)
}

/// Price `h*(t, y) = E f(Z)`, `Z ~ N(y g(t), e^{-2rt})`, by Gauss–Hermite
/// quadrature with node doubling.
pub fn pricing_h(t: f64, y: f64, market: &GeneralMarket, cfg: &QuadratureCfg) -> f64 {
    let (mean, var) = smoothing(market, t, y);
    if var < cfg.variance_floor {
        return market.payoff.f(mean);
    }
    doubled(|z| market.payoff.f(z), mean, var, cfg).0
}

/// Price with a fixed node count; smooth in `(t, y)`, which finite differences need.
pub fn pricing_h_fixed(
    t: f64,
    y: f64,
    market: &GeneralMarket,
    n: usize,
    variance_floor: f64,
) -> f64 {
    let (mean, var) = smoothing(market, t, y);
    if var < variance_floor {
        return market.payoff.f(mean);
    }
    gaussian_expectation(|z| market.payoff.f(z), mean, var, n)
}

/// Node count the doubling rule settles on at `(t, y)`, doubled once more as a margin.
fn settled_nodes(t: f64, y: f64, market: &GeneralMarket, cfg: &QuadratureCfg) -> usize {
    let (mean, var) = smoothing(market, t, y);
    if var < cfg.variance_floor {
        return cfg.n_nodes;
    }
    let (_, n) = doubled(|z| market.payoff.f(z), mean, var, cfg);
    (2 * n).min(MAX_NODES)
}

/// Price impact `h*_y(t, y)`: `g(t) E f'(Z)` when `f'` is known, otherwise a
/// central difference of the price.
pub fn pricing_h_deriv(t: f64, y: f64, market: &GeneralMarket, cfg: &QuadratureCfg) -> f64 {
    if !market.payoff.has_derivative() {
        return pricing_h_deriv_fd(t, y, market, cfg);
    }
    let (mean, var) = smoothing(market, t, y);
    let fp = |z: f64| market.payoff.f_prime(z).unwrap_or(f64::NAN);
    let g = market.stretch(t);
    if var < cfg.variance_floor {
        return g * fp(mean);
    }
    g * doubled(fp, mean, var, cfg).0
}

/// Central-difference price impact with a fixed quadrature rule.
pub fn pricing_h_deriv_fd(t: f64, y: f64, market: &GeneralMarket, cfg: &QuadratureCfg) -> f64 {
    let n = settled_nodes(t, y, market, cfg);
    central_d1(|u| pricing_h_fixed(t, u, market, n, cfg.variance_floor), y)
}

/// `h*⁻¹(t, v)`: the signal level priced at `v`.
pub fn pricing_h_inv(t: f64, v: f64, market: &GeneralMarket, cfg: &QuadratureCfg) -> Result<f64> {
    let (lo, hi) = market.payoff.range();
    if !(v > lo && v < hi) {
        return Err(Error::Domain {
            what: "pricing inverse (price outside the range of the payoff)",
            value: v,
        });
    }
    let g = market.stretch(t);
    let guess = market.payoff.f_inv(v)? / g;
    let n = settled_nodes(t, guess, market, cfg);
    let price = |y: f64| pricing_h_fixed(t, y, market, n, cfg.variance_floor);
    let slope = |y: f64| central_d1(|u| pricing_h_fixed(t, u, market, n, cfg.variance_floor), y);
    solve_increasing(
        price,
        Some(slope),
        v,
        guess,
        0.5,
        INV_X_TOL,
        INV_NEWTON_STEPS,
    )
}

/// `lim E λ*_t = ∫ f'(z) φ(z) dz`, with a finite-difference `f'` when none is known.
pub fn lambda_limit(market: &GeneralMarket, cfg: &QuadratureCfg) -> f64 {
    let payoff = &market.payoff;
    if payoff.has_derivative() {
        doubled(|z| payoff.f_prime(z).unwrap_or(f64::NAN), 0.0, 1.0, cfg).0
    } else {
        doubled(|z| central_d1(|u| payoff.f(u), z), 0.0, 1.0, cfg).0
    }
}

/// A volatility profile `σ(t)` with its derivative.
pub trait SigmaProfile {
    fn sigma(&self, t: f64) -> f64;
    fn sigma_deriv(&self, t: f64) -> f64;
}

impl SigmaProfile for TimeChange {
    fn sigma(&self, t: f64) -> f64 {
        TimeChange::sigma(self, t)
    }
    fn sigma_deriv(&self, t: f64) -> f64 {
        self.sigma_sq_deriv(t) / (2.0 * TimeChange::sigma(self, t))
    }
}

/// `σ ≡ 1`: the time-homogeneous case.
#[derive(Debug, Clone, Copy, Default)]
pub struct UnitSigma;

impl SigmaProfile for UnitSigma {
    fn sigma(&self, _t: f64) -> f64 {
        1.0
    }
    fn sigma_deriv(&self, _t: f64) -> f64 {
        0.0
    }
}

/// `h_t + ½ a² σ² h_yy + σ² φ h_y` at each `(t, y)`, derivatives by central differences.
pub fn ghrule_residual<H, S, A, P>(
    h: H,
    sigma: &S,
    a: &A,
    phi: &P,
    points: &[(f64, f64)],
) -> Vec<f64>
where
    H: Fn(f64, f64) -> f64,
    S: SigmaProfile,
    A: SmoothFn,
    P: SmoothFn,
{
    points
        .iter()
        .map(|&(t, y)| {
            let h_t = central_d1_with(|s| h(s, y), t, step_d1(t));
            let h_y = central_d1(|u| h(t, u), y);
            let h_yy = central_d2(|u| h(t, u), y);
            let s2 = sigma.sigma(t).powi(2);
            let av = a.value(y);
            h_t + 0.5 * av * av * s2 * h_yy + s2 * phi.value(y) * h_y
        })
        .collect()
}

/// `½ a σ² a'' + φ σ² a'/a - σ² φ' + σ'/σ + r` at each `(t, y)`.
pub fn gphia_residual<S, A, P>(a: &A, phi: &P, sigma: &S, r: f64, points: &[(f64, f64)]) -> Vec<f64>
where
    S: SigmaProfile,
    A: SmoothFn,
    P: SmoothFn,
{
    points
        .iter()
        .map(|&(t, y)| {
            let s = sigma.sigma(t);
            let s2 = s * s;
            let av = a.value(y);
            0.5 * av * s2 * a.d2(y) + phi.value(y) * s2 * a.d1(y) / av - s2 * phi.d1(y)
                + sigma.sigma_deriv(t) / s
                + r
        })
        .collect()
}

/// The pricing-rule PDE residual for the market's `h*` with `a ≡ 1`, `φ(y) = r y`.
pub fn pde_residual_h(
    points: &[(f64, f64)],
    market: &GeneralMarket,
    cfg: &QuadratureCfg,
) -> Vec<f64> {
    points
        .iter()
        .map(|&(t, y)| {
            let n = settled_nodes(t, y, market, cfg);
            ghrule_residual(
                |s, u| pricing_h_fixed(s, u, market, n, cfg.variance_floor),
                market.time_change(),
                &crate::deriv::Affine::constant(1.0),
                &crate::deriv::Affine::new(market.r(), 0.0),
                &[(t, y)],
            )[0]
        })
        .collect()
}
