use super::StatReport;
use crate::bernoulli::{initial_y, signal_state, BernoulliMarket, Outcome};
use crate::error::{invalid, Error, Result};
use crate::sde::{run_paths, Lane, NoiseStream, SimConfig};

/// Pathwise independence of prices from the drift constant `d`.
///
/// Every `d` is simulated in lockstep on the same noise; the statistic is the
/// larger of the worst price gap to the first `d` and the worst deviation of
/// the signal from the shift `Y^d = Y^{d₀} - (d - d₀)/r`, over all grid times
/// and paths. The threshold is `5 dt`.
pub fn d_invariance_test(
    market: &BernoulliMarket,
    d_values: &[f64],
    cfg: &SimConfig,
) -> Result<StatReport> {
    if d_values.is_empty() {
        return Err(invalid("d_values", "need at least one value"));
    }
    let grid = cfg.grid()?;
    let r = market.params().r();
    let markets = d_values
        .iter()
        .map(|&d| market.with_d(d))
        .collect::<Result<Vec<_>>>()?;
    let starts = markets.iter().map(initial_y).collect::<Result<Vec<_>>>()?;
    let surv = run_paths(cfg.n_paths, |i| {
        let stream = NoiseStream::new(cfg.seed, i);
        let outcome = if stream.uniform(Lane::Payoff, 0) <= market.p() {
            Outcome::One
        } else {
            Outcome::Zero
        };
        let mut ys = starts.clone();
        let (mut gap_p, mut gap_y) = (0.0f64, 0.0f64);
        let mut incs = stream.increments(grid.dt);
        for k in 0..=grid.n_steps {
            let states: Vec<_> = ys
                .iter()
                .zip(&markets)
                .map(|(&y, m)| signal_state(outcome, y, m.params()))
                .collect();
            for (j, st) in states.iter().enumerate().skip(1) {
                gap_p = gap_p.max((st.price - states[0].price).abs());
                let shift = (d_values[j] - d_values[0]) / r;
                gap_y = gap_y.max((ys[j] - (ys[0] - shift)).abs());
            }
            if k == grid.n_steps {
                break;
            }
            let db = incs.next().unwrap_or(0.0);
            for ((y, st), m) in ys.iter_mut().zip(&states).zip(&markets) {
                *y += (r * *y + m.params().d() + st.rate) * grid.dt + db;
                if !y.is_finite() {
                    return Err(Error::Divergence { step: k + 1 });
                }
            }
        }
        Ok((gap_p, gap_y))
    })?;
    let (gap_p, gap_y) = surv
        .items
        .iter()
        .fold((0.0f64, 0.0f64), |(a, b), &(p, y)| (a.max(p), b.max(y)));
    Ok(
        StatReport::bounded("d_invariance", gap_p, 0.0, gap_p.max(gap_y), 5.0 * grid.dt)
            .with_paths(surv.items.len())
            .with_checkpoints(&[grid.t_end()])
            .with_flags(vec![
                format!("max_price_gap={gap_p:.3e}"),
                format!("max_signal_shift_gap={gap_y:.3e}"),
            ]),
    )
}
