use serde::{Deserialize, Serialize};

use super::pricing::{pricing_h, pricing_h_deriv};
use super::{hyperbolic, sigma_of, GeneralMarket, QuadratureCfg};
use crate::bernoulli::ProfitEstimate;
use crate::error::{invalid, Error, Result};
use crate::ou::ou_variance;
use crate::sde::{run_paths, Lane, NoiseStream, SimConfig, TimeGrid};

/// Drift of the signal pinned at `η`: `r σ²(t) (η - y cosh a(t)) / sinh a(t)`,
/// evaluated as `2r (η g - y (1 + q)) / g²` with `q = r e^{-2rt}`, `g² = 1 + 2q`.
pub fn bridge_drift_pinned(t: f64, y: f64, eta: f64, r: f64) -> f64 {
    let q = r * (-2.0 * r * t).exp();
    let g2 = 1.0 + 2.0 * q;
    2.0 * r * (eta * g2.sqrt() - y * (1.0 + q)) / g2
}

/// [`bridge_drift_pinned`] at the level `f⁻¹(v)` of the payoff value `v`.
pub fn bridge_drift(t: f64, y: f64, v: f64, market: &GeneralMarket) -> Result<f64> {
    Ok(bridge_drift_pinned(
        t,
        y,
        market.payoff.f_inv(v)?,
        market.r(),
    ))
}

/// Insider's trading rate `r σ(t) ((η - y cosh a)/sinh a - y)` given the pinned level `η`.
pub fn insider_rate_pinned(t: f64, y: f64, eta: f64, r: f64) -> f64 {
    let (c, s) = hyperbolic(r, t);
    let sigma = sigma_of(r, t);
    r * sigma * ((eta - y * c) / s - y)
}

/// [`insider_rate_pinned`] for payoff value `v`.
pub fn insider_rate_general(t: f64, y: f64, v: f64, market: &GeneralMarket) -> Result<f64> {
    Ok(insider_rate_pinned(
        t,
        y,
        market.payoff.f_inv(v)?,
        market.r(),
    ))
}

/// How the payoff of each path is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BridgeDraw {
    /// Every path has payoff value `v`.
    Fixed(f64),
    /// Each path draws `η ~ N(0, 1)` and gets payoff `f(η)`.
    Mixed,
}

/// State of one path at a recorded grid time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BridgeState {
    pub y: f64,
    pub x: f64,
    /// `h*(t, Y)`.
    pub price: f64,
    /// `h*_y(t, Y)`.
    pub lambda: f64,
    /// `|h*(t, Y) - Γ|`.
    pub gap: f64,
    pub qv_x: f64,
}

/// One simulated bridge path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BridgePath {
    pub stream_id: u64,
    /// Pinned level `f⁻¹(Γ)`.
    pub eta: f64,
    pub gamma: f64,
    pub tau: f64,
    /// Discounted profit; only tracked for affine payoffs, where the price is closed form.
    pub profit_discounted: Option<f64>,
    /// Profit stopped at `τ`; same availability as `profit_discounted`.
    pub profit_stopped: Option<f64>,
    pub at: Vec<BridgeState>,
}

/// A simulated bundle of general-payoff equilibrium paths.
#[derive(Debug, Clone)]
pub struct BridgeRun {
    pub market: GeneralMarket,
    pub draw: BridgeDraw,
    pub strategy_scale: f64,
    pub grid: TimeGrid,
    pub seed: u64,
    pub record: Vec<usize>,
    pub paths: Vec<BridgePath>,
    pub diverged: Vec<(u64, usize)>,
}

impl BridgeRun {
    pub fn times(&self) -> Vec<f64> {
        self.record.iter().map(|&k| self.grid.time(k)).collect()
    }

    pub fn column<F: Fn(&BridgeState) -> f64>(&self, j: usize, field: F) -> Vec<f64> {
        self.paths.iter().map(|p| field(&p.at[j])).collect()
    }

    pub fn columns<F: Fn(&BridgeState) -> f64 + Copy>(&self, field: F) -> Vec<Vec<f64>> {
        (0..self.record.len())
            .map(|j| self.column(j, field))
            .collect()
    }

    pub fn column_at<F: Fn(&BridgeState) -> f64>(&self, t: f64, field: F) -> Option<Vec<f64>> {
        let k = self.grid.index_of(t)?;
        let j = self.record.iter().position(|&i| i == k)?;
        Some(self.column(j, field))
    }

    pub fn gammas(&self) -> Vec<f64> {
        self.paths.iter().map(|p| p.gamma).collect()
    }

    pub fn n_paths(&self) -> usize {
        self.paths.len()
    }

    /// Profit estimates, when the payoff is affine.
    pub fn profit(&self) -> Option<ProfitEstimate> {
        let d: Option<Vec<f64>> = self.paths.iter().map(|p| p.profit_discounted).collect();
        let s: Option<Vec<f64>> = self.paths.iter().map(|p| p.profit_stopped).collect();
        Some(ProfitEstimate::from_samples(&d?, &s?))
    }
}

/// Per-step coefficients of the kernel.
struct StepCoeffs {
    /// Coefficient of `η` in the bridge drift.
    pin: f64,
    /// Coefficient of `-y` in the bridge drift.
    pull: f64,
    /// Market makers' drift coefficient `r σ²`.
    mm: f64,
    sigma: f64,
    stretch: f64,
    discount: f64,
}

fn coefficient_table(r: f64, grid: &TimeGrid) -> Vec<StepCoeffs> {
    (0..=grid.n_steps)
        .map(|k| {
            let t = grid.time(k);
            let q = r * (-2.0 * r * t).exp();
            let g2 = 1.0 + 2.0 * q;
            let g = g2.sqrt();
            StepCoeffs {
                pin: 2.0 * r * g / g2,
                pull: 2.0 * r * (1.0 + q) / g2,
                mm: 2.0 * r * q / g2,
                sigma: (2.0 * q / g2).sqrt(),
                stretch: g,
                discount: (-r * t).exp(),
            }
        })
        .collect()
}

fn pinned_level(
    market: &GeneralMarket,
    draw: BridgeDraw,
    stream: &NoiseStream,
    fixed: Option<f64>,
) -> (f64, f64) {
    match (draw, fixed) {
        (BridgeDraw::Fixed(v), Some(eta)) => (eta, v),
        _ => {
            let eta = stream.normal(Lane::Payoff, 0);
            (eta, market.payoff.f(eta))
        }
    }
}

/// Equilibrium paths of the general-payoff market, started at `Y₀ = 0`.
pub fn simulate_bridge(
    market: &GeneralMarket,
    draw: BridgeDraw,
    cfg: &SimConfig,
    qcfg: &QuadratureCfg,
) -> Result<BridgeRun> {
    simulate_bridge_with_strategy(market, draw, cfg, qcfg, 1.0)
}

/// As [`simulate_bridge`] with the insider trading `scale` times the equilibrium
/// rate against the equilibrium pricing rule.
pub fn simulate_bridge_with_strategy(
    market: &GeneralMarket,
    draw: BridgeDraw,
    cfg: &SimConfig,
    qcfg: &QuadratureCfg,
    scale: f64,
) -> Result<BridgeRun> {
    if !scale.is_finite() {
        return Err(invalid("scale", "must be finite"));
    }
    qcfg.validate()?;
    let (grid, record) = cfg.layout()?;
    let fixed = match draw {
        BridgeDraw::Fixed(v) => Some(market.payoff.f_inv(v)?),
        BridgeDraw::Mixed => None,
    };
    let coeffs = coefficient_table(market.r(), &grid);
    let ctx = Kernel {
        market,
        qcfg,
        scale,
        grid: &grid,
        record: &record,
        coeffs: &coeffs,
    };
    let surv = run_paths(cfg.n_paths, |i| {
        let stream = NoiseStream::new(cfg.seed, i);
        let (eta, gamma) = pinned_level(market, draw, &stream, fixed);
        ctx.path(stream, eta, gamma)
    })?;
    Ok(BridgeRun {
        market: market.clone(),
        draw,
        strategy_scale: scale,
        grid,
        seed: cfg.seed,
        record,
        paths: surv.items,
        diverged: surv.diverged,
    })
}

struct Kernel<'a> {
    market: &'a GeneralMarket,
    qcfg: &'a QuadratureCfg,
    scale: f64,
    grid: &'a TimeGrid,
    record: &'a [usize],
    coeffs: &'a [StepCoeffs],
}

impl Kernel<'_> {
    fn path(&self, stream: NoiseStream, eta: f64, gamma: f64) -> Result<BridgePath> {
        let r = self.market.r();
        let dt = self.grid.dt;
        let affine = self.market.payoff.affine_parts();
        let tau = stream.exponential(Lane::Horizon, 0, r);
        let mut at = Vec::with_capacity(self.record.len());
        let mut next = 0;
        let (mut y, mut x, mut qv) = (0.0, 0.0, 0.0);
        let (mut profit_d, mut profit_s) = (0.0, 0.0);
        let mut incs = stream.increments(dt);

        for (k, c) in self.coeffs.iter().enumerate() {
            let t = self.grid.time(k);
            while next < self.record.len() && self.record[next] == k {
                let (price, lambda) = match affine {
                    Some((b, a)) => (a + b * c.stretch * y, b * c.stretch),
                    None => (
                        pricing_h(t, y, self.market, self.qcfg),
                        pricing_h_deriv(t, y, self.market, self.qcfg),
                    ),
                };
                at.push(BridgeState {
                    y,
                    x,
                    price,
                    lambda,
                    gap: (price - gamma).abs(),
                    qv_x: qv,
                });
                next += 1;
            }
            if k == self.grid.n_steps {
                break;
            }
            let mm = c.mm * y;
            let insider = self.scale * (c.pin * eta - c.pull * y - mm);
            let alpha = if c.sigma > 0.0 {
                insider / c.sigma
            } else {
                0.0
            };
            if let Some((b, a)) = affine {
                let gain = (gamma - (a + b * c.stretch * y)) * alpha;
                profit_d += c.discount * gain * dt;
                profit_s += gain * (tau - t).clamp(0.0, dt);
            }
            let db = incs.next().unwrap_or(0.0);
            let y_next = y + (mm + insider) * dt + c.sigma * db;
            if !y_next.is_finite() {
                return Err(Error::Divergence { step: k + 1 });
            }
            let dx = db + alpha * dt;
            x += dx;
            qv += dx * dx;
            y = y_next;
        }
        Ok(BridgePath {
            stream_id: stream.path_index,
            eta,
            gamma,
            tau,
            profit_discounted: affine.map(|_| profit_d),
            profit_stopped: affine.map(|_| profit_s),
            at,
        })
    }
}

/// Exact draw of the signal pinned at `η` at the non-decreasing `times`: the
/// OU bridge in the clock `u = V(t)`, sampled sequentially from its Gaussian
/// transition law. Uses [`Lane::Exact`].
pub fn sample_exact_bridge(
    market: &GeneralMarket,
    eta: f64,
    times: &[f64],
    stream: &NoiseStream,
) -> Result<Vec<f64>> {
    let r = market.r();
    let tc = market.time_change();
    let mut out = Vec::with_capacity(times.len());
    let (mut y, mut prev_t, mut prev_rem) = (0.0, 0.0, tc.remaining(0.0));
    for (j, &t) in times.iter().enumerate() {
        if !(t >= prev_t) || !t.is_finite() {
            return Err(invalid(
                "times",
                format!("must be finite and non-decreasing from 0, got {t}"),
            ));
        }
        let rem = tc.remaining(t);
        let step = prev_rem - rem;
        if step > 0.0 {
            if rem > 0.0 {
                let var_step = ou_variance(step, r);
                let var_rem = ou_variance(rem, r);
                let (grow_step, grow_rem) = ((r * step).exp(), (r * rem).exp());
                let precision = 1.0 / var_step + grow_rem * grow_rem / var_rem;
                let mean = (y * grow_step / var_step + eta * grow_rem / var_rem) / precision;
                y = mean + stream.normal(Lane::Exact, j as u64) / precision.sqrt();
            } else {
                y = eta;
            }
        }
        out.push(y);
        prev_t = t;
        prev_rem = rem;
    }
    Ok(out)
}

/// [`sample_exact_bridge`] over `n_paths` streams of `seed`; one column per time.
/// Mixed draws take `η` from [`Lane::Payoff`] as the Euler kernel does.
pub fn exact_bridge_columns(
    market: &GeneralMarket,
    draw: BridgeDraw,
    times: &[f64],
    n_paths: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    let fixed = match draw {
        BridgeDraw::Fixed(v) => Some(market.payoff.f_inv(v)?),
        BridgeDraw::Mixed => None,
    };
    let rows = run_paths(n_paths, |i| {
        let stream = NoiseStream::new(seed, i);
        let (eta, _) = pinned_level(market, draw, &stream, fixed);
        sample_exact_bridge(market, eta, times, &stream)
    })?;
    Ok((0..times.len())
        .map(|j| rows.items.iter().map(|row| row[j]).collect())
        .collect())
}

/// Euler path of the pinned signal driven by an explicit insider rate and the
/// market makers' drift, for pathwise comparison with the kernel.
pub fn reconstruct_signal(
    market: &GeneralMarket,
    eta: f64,
    grid: &TimeGrid,
    stream: &NoiseStream,
) -> Vec<f64> {
    let r = market.r();
    let mut y = 0.0;
    let mut out = Vec::with_capacity(grid.n_points());
    out.push(y);
    for (k, db) in stream.increments(grid.dt).take(grid.n_steps).enumerate() {
        let t = grid.time(k);
        let sigma = market.sigma(t);
        let alpha = insider_rate_pinned(t, y, eta, r);
        y += sigma * (db + alpha * grid.dt) + r * sigma * sigma * y * grid.dt;
        out.push(y);
    }
    out
}
