use serde::{Deserialize, Serialize};

use super::{initial_y, signal_state, BernoulliMarket, Outcome};
use crate::error::{Error, Result};
use crate::sde::{run_paths, Lane, Moments, NoiseStream, SimConfig, TimeGrid};

/// How the payoff of each path is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PayoffDraw {
    /// Every path has the same outcome.
    Fixed(Outcome),
    /// Each path flips its own coin with the market's prior `p`.
    Mixed,
}

/// State of one path at a recorded grid time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CheckpointState {
    /// Market makers' signal.
    pub y: f64,
    /// Total order flow.
    pub x: f64,
    /// Pre-announcement price `s(Y)`.
    pub price: f64,
    /// Kyle's lambda `s'(Y)`.
    pub lambda: f64,
    /// Observed price: `price` before the announcement, the payoff after.
    pub s: f64,
    /// `Γ 1[t ≥ τ] - r ∫ 1[u < τ] P_u du`.
    pub n: f64,
    /// `1[t ≥ τ] - r ∫ 1[u < τ] du`.
    pub m: f64,
    /// `P_t 1[t < τ] + r ∫ 1[u < τ] P_u du`.
    pub u: f64,
    /// Realized quadratic variation of `X` so far.
    pub qv_x: f64,
}

/// One simulated path: payoff, announcement time, profits and recorded states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathRecord {
    pub stream_id: u64,
    pub gamma: f64,
    pub tau: f64,
    /// `|Γ - P|` at the last grid time before `τ`, when `τ` falls inside the horizon.
    pub jump: Option<f64>,
    /// `Σ e^{-r t_k} (Γ - P_k) α_k dt`.
    pub profit_discounted: f64,
    /// `Σ (Γ - P_k) α_k |[t_k, t_{k+1}) ∩ [0, τ)|`.
    pub profit_stopped: f64,
    pub at: Vec<CheckpointState>,
}

/// A simulated bundle of equilibrium paths.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EquilibriumRun {
    pub market: BernoulliMarket,
    pub draw: PayoffDraw,
    /// Multiplier applied to the equilibrium trading rate (1 for the equilibrium).
    pub strategy_scale: f64,
    pub grid: TimeGrid,
    pub seed: u64,
    pub y0: f64,
    /// Grid indices of the recorded states; always starts with 0.
    pub record: Vec<usize>,
    pub paths: Vec<PathRecord>,
    pub diverged: Vec<(u64, usize)>,
}

impl EquilibriumRun {
    pub fn times(&self) -> Vec<f64> {
        self.record.iter().map(|&k| self.grid.time(k)).collect()
    }

    /// Column `j` of the recorded states through `field`.
    pub fn column<F: Fn(&CheckpointState) -> f64>(&self, j: usize, field: F) -> Vec<f64> {
        self.paths.iter().map(|p| field(&p.at[j])).collect()
    }

    /// All recorded columns through `field`, one vector per recorded time.
    pub fn columns<F: Fn(&CheckpointState) -> f64 + Copy>(&self, field: F) -> Vec<Vec<f64>> {
        (0..self.record.len())
            .map(|j| self.column(j, field))
            .collect()
    }

    /// Column of the state at time `t`, if recorded.
    pub fn column_at<F: Fn(&CheckpointState) -> f64>(&self, t: f64, field: F) -> Option<Vec<f64>> {
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
}

/// Monte Carlo estimates of the insider's expected profit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfitEstimate {
    pub discounted: f64,
    pub discounted_se: f64,
    pub stopped: f64,
    pub stopped_se: f64,
    pub n_paths: usize,
}

impl ProfitEstimate {
    pub fn from_run(run: &EquilibriumRun) -> Self {
        let d: Vec<f64> = run.paths.iter().map(|p| p.profit_discounted).collect();
        let s: Vec<f64> = run.paths.iter().map(|p| p.profit_stopped).collect();
        Self::from_samples(&d, &s)
    }

    /// Per-path discounted and stopped profits.
    pub fn from_samples(discounted: &[f64], stopped: &[f64]) -> Self {
        let d = Moments::from_slice(discounted);
        let s = Moments::from_slice(stopped);
        Self {
            discounted: d.mean,
            discounted_se: d.std_error(),
            stopped: s.mean,
            stopped_se: s.std_error(),
            n_paths: discounted.len(),
        }
    }
}

/// Equilibrium paths: Euler on the signal with unit diffusion, price `s(Y)`.
pub fn simulate_equilibrium(
    market: &BernoulliMarket,
    draw: PayoffDraw,
    cfg: &SimConfig,
) -> Result<EquilibriumRun> {
    simulate_with_strategy(market, draw, cfg, 1.0)
}

/// As [`simulate_equilibrium`] with the insider trading `scale` times the
/// equilibrium rate while market makers keep the equilibrium pricing rule.
pub fn simulate_with_strategy(
    market: &BernoulliMarket,
    draw: PayoffDraw,
    cfg: &SimConfig,
    scale: f64,
) -> Result<EquilibriumRun> {
    if !scale.is_finite() {
        return Err(crate::error::invalid("scale", "must be finite"));
    }
    let (grid, record) = cfg.layout()?;
    let y0 = initial_y(market)?;
    let r = market.params().r();
    let discount: Vec<f64> = (0..grid.n_steps)
        .map(|k| (-r * grid.time(k)).exp())
        .collect();
    let surv = run_paths(cfg.n_paths, |i| {
        simulate_path(
            market,
            draw,
            scale,
            &grid,
            &record,
            &discount,
            y0,
            NoiseStream::new(cfg.seed, i),
        )
    })?;
    Ok(EquilibriumRun {
        market: *market,
        draw,
        strategy_scale: scale,
        grid,
        seed: cfg.seed,
        y0,
        record,
        paths: surv.items,
        diverged: surv.diverged,
    })
}

#[allow(clippy::too_many_arguments, clippy::needless_range_loop)]
fn simulate_path(
    market: &BernoulliMarket,
    draw: PayoffDraw,
    scale: f64,
    grid: &TimeGrid,
    record: &[usize],
    discount: &[f64],
    y0: f64,
    stream: NoiseStream,
) -> Result<PathRecord> {
    let params = market.params();
    let (r, d, dt) = (params.r(), params.d(), grid.dt);
    let outcome = match draw {
        PayoffDraw::Fixed(o) => o,
        PayoffDraw::Mixed => {
            if stream.uniform(Lane::Payoff, 0) <= market.p() {
                Outcome::One
            } else {
                Outcome::Zero
            }
        }
    };
    let gamma = outcome.value();
    let tau = stream.exponential(Lane::Horizon, 0, r);

    let mut at = Vec::with_capacity(record.len());
    let mut next = 0;
    let (mut y, mut x, mut qv) = (y0, 0.0, 0.0);
    let (mut int_p, mut int_1) = (0.0, 0.0);
    let (mut profit_d, mut profit_s) = (0.0, 0.0);
    let mut jump = None;
    let mut incs = stream.increments(dt);

    for k in 0..=grid.n_steps {
        let t = grid.time(k);
        let st = signal_state(outcome, y, params);
        while next < record.len() && record[next] == k {
            let announced = t >= tau;
            at.push(CheckpointState {
                y,
                x,
                price: st.price,
                lambda: st.lambda,
                s: if announced { gamma } else { st.price },
                n: if announced { gamma } else { 0.0 } - int_p,
                m: if announced { 1.0 } else { 0.0 } - int_1,
                u: if announced { 0.0 } else { st.price } + int_p,
                qv_x: qv,
            });
            next += 1;
        }
        if k == grid.n_steps {
            break;
        }
        let alpha = scale * st.rate;
        let alive = (tau - t).clamp(0.0, dt);
        if tau >= t && tau < t + dt {
            jump = Some((gamma - st.price).abs());
        }
        int_p += r * st.price * alive;
        int_1 += r * alive;
        let gain = (gamma - st.price) * alpha;
        profit_d += discount[k] * gain * dt;
        profit_s += gain * alive;

        let db = incs.next().unwrap_or(0.0);
        let base = r * y + d;
        let y_next = y + (base + alpha) * dt + db;
        if !y_next.is_finite() {
            return Err(Error::Divergence { step: k + 1 });
        }
        let dx = (y_next - y) - base * dt;
        x += dx;
        qv += dx * dx;
        y = y_next;
    }
    Ok(PathRecord {
        stream_id: stream.path_index,
        gamma,
        tau,
        jump,
        profit_discounted: profit_d,
        profit_stopped: profit_s,
        at,
    })
}

/// Profit estimates for the insider trading `scale` times the equilibrium rate
/// given outcome `v`.
pub fn expected_profit_mc(
    market: &BernoulliMarket,
    v: Outcome,
    cfg: &SimConfig,
    scale: f64,
) -> Result<ProfitEstimate> {
    let run = simulate_with_strategy(market, PayoffDraw::Fixed(v), cfg, scale)?;
    Ok(ProfitEstimate::from_run(&run))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ou::{scale_s, OUParams};

    fn small(n: usize, seed: u64) -> SimConfig {
        SimConfig::new(1e-2, 2.0, n, seed, vec![1.0, 2.0])
    }

    fn market(p: f64) -> BernoulliMarket {
        BernoulliMarket::new(p, OUParams::new(1.0, 0.0).unwrap()).unwrap()
    }

    #[test]
    fn records_are_consistent() {
        let run = simulate_equilibrium(&market(0.4), PayoffDraw::Mixed, &small(50, 1)).unwrap();
        assert_eq!(run.record, vec![0, 100, 200]);
        for p in &run.paths {
            assert_eq!(p.at.len(), 3);
            assert_eq!(p.at[0].y, run.y0);
            assert_eq!(p.at[0].x, 0.0);
            for st in &p.at {
                assert_eq!(st.price, scale_s(st.y, run.market.params()));
                assert!((st.s - st.price).abs() < 1e-300 || st.s == p.gamma);
                assert!((st.n + st.u - st.s).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_strategy_earns_nothing() {
        let est = expected_profit_mc(&market(0.5), Outcome::One, &small(20, 2), 0.0).unwrap();
        assert_eq!(est.discounted, 0.0);
        assert_eq!(est.stopped, 0.0);
    }

    #[test]
    fn bit_reproducible() {
        let a = simulate_equilibrium(&market(0.5), PayoffDraw::Mixed, &small(30, 7)).unwrap();
        let b = simulate_equilibrium(&market(0.5), PayoffDraw::Mixed, &small(30, 7)).unwrap();
        assert_eq!(a.paths, b.paths);
        let c = simulate_equilibrium(&market(0.5), PayoffDraw::Mixed, &small(30, 8)).unwrap();
        assert_ne!(a.paths, c.paths);
    }

    #[test]
    fn order_flow_reconstruction() {
        // With zero trading the order flow is the noise itself and Y is plain OU.
        let run = simulate_with_strategy(
            &market(0.5),
            PayoffDraw::Fixed(Outcome::One),
            &small(5, 3),
            0.0,
        )
        .unwrap();
        for p in &run.paths {
            let stream = NoiseStream::new(3, p.stream_id);
            let b: f64 = stream.increments(1e-2).take(200).sum();
            assert!((p.at[2].x - b).abs() < 1e-10);
        }
    }

    #[test]
    fn off_grid_checkpoint_rejected() {
        let cfg = SimConfig::new(1e-2, 2.0, 5, 1, vec![0.005]);
        assert!(simulate_equilibrium(&market(0.5), PayoffDraw::Mixed, &cfg).is_err());
    }
}
