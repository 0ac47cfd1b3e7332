use super::StatReport;
use crate::bernoulli::{expected_profit_mc, BernoulliMarket, Outcome, ProfitEstimate};
use crate::error::{invalid, Result};
use crate::general::{simulate_bridge_with_strategy, BridgeDraw, GeneralMarket, QuadratureCfg};
use crate::sde::SimConfig;

const BAND: f64 = 3.0;

fn combined_se(a: &ProfitEstimate, b: &ProfitEstimate) -> f64 {
    (a.discounted_se.powi(2) + b.discounted_se.powi(2)).sqrt()
}

/// Whether `candidate` beats `other` by more than three combined standard errors.
pub fn strictly_dominates(candidate: &ProfitEstimate, other: &ProfitEstimate) -> bool {
    candidate.discounted - other.discounted > BAND * combined_se(candidate, other)
}

/// Optimality of the equilibrium strategy among scaled deviations.
///
/// `estimates` pairs each scaling factor with its profit estimate and must
/// contain factor 1. The candidate must match `value` within three standard
/// errors. A deviation passes when it is either significantly below the
/// candidate or not significantly above the value function; deviations that
/// cannot be separated from the candidate are flagged.
pub fn profit_optimality_test(
    value: f64,
    estimates: &[(f64, ProfitEstimate)],
) -> Result<StatReport> {
    let cand = estimates
        .iter()
        .find(|(c, _)| *c == 1.0)
        .map(|(_, e)| *e)
        .ok_or_else(|| invalid("factors", "must include the equilibrium factor 1"))?;
    let cand_se = cand.discounted_se.max(f64::MIN_POSITIVE);
    let mut statistic = (cand.discounted - value).abs() / cand_se;
    let mut flags = Vec::new();
    for (c, e) in estimates.iter().filter(|(c, _)| *c != 1.0) {
        let lower = strictly_dominates(&cand, e);
        let above = if e.discounted_se > 0.0 {
            (e.discounted - value) / e.discounted_se
        } else if e.discounted <= value {
            0.0
        } else {
            f64::INFINITY
        };
        if !lower {
            statistic = statistic.max(above);
            flags.push(format!(
                "factor {c}: {:.6} not separated from candidate {:.6} (combined SE {:.2e})",
                e.discounted,
                cand.discounted,
                combined_se(&cand, e)
            ));
        }
    }
    Ok(StatReport::bounded(
        "profit_optimality",
        cand.discounted,
        cand.discounted_se,
        statistic,
        BAND,
    )
    .with_paths(cand.n_paths)
    .with_flags(flags))
}

/// Simulated profits of the Bernoulli insider at each factor, tested against `value`.
pub fn bernoulli_profit_optimality(
    market: &BernoulliMarket,
    v: Outcome,
    factors: &[f64],
    value: f64,
    cfg: &SimConfig,
) -> Result<(StatReport, Vec<(f64, ProfitEstimate)>)> {
    let est = factors
        .iter()
        .map(|&c| Ok((c, expected_profit_mc(market, v, cfg, c)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok((profit_optimality_test(value, &est)?, est))
}

/// As [`bernoulli_profit_optimality`] for an affine general payoff with value `v`.
pub fn general_profit_optimality(
    market: &GeneralMarket,
    v: f64,
    factors: &[f64],
    value: f64,
    cfg: &SimConfig,
    qcfg: &QuadratureCfg,
) -> Result<(StatReport, Vec<(f64, ProfitEstimate)>)> {
    let est = factors
        .iter()
        .map(|&c| {
            let run = simulate_bridge_with_strategy(market, BridgeDraw::Fixed(v), cfg, qcfg, c)?;
            let p = run
                .profit()
                .ok_or_else(|| invalid("payoff", "profit is tracked for affine payoffs only"))?;
            Ok((c, p))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((profit_optimality_test(value, &est)?, est))
}
