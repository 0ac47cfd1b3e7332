use super::config::ExperimentConfig;
use super::output::{CheckpointRow, SeriesRow, SuiteEntry};
use crate::bernoulli::{
    expected_profit_mc, initial_y, kyle_lambda, lambda_mean_closed_form, simulate_equilibrium,
    value_j, Outcome, PayoffDraw, ProfitEstimate,
};
use crate::error::Result;
use crate::general::{
    exact_bridge_columns, lambda_limit, pricing_h, simulate_bridge, simulate_bridge_with_strategy,
    value_j_general, BridgeDraw, QuadratureCfg,
};
use crate::sde::{Moments, SimConfig};
use crate::special::norm_cdf;
use crate::verify::{
    announcement_sim, calibration_test, d_invariance_test, ks_test, ks_two_sample_test,
    martingale_test, mean_profile_test, normality_test, profit_optimality_test,
    supermartingale_test, variance_test, StatReport,
};

/// Convergence threshold for `E|P_T - Γ|` and `E|Y_T - f⁻¹(v)|`.
const CONVERGENCE_TOL: f64 = 0.05;
/// Relative tolerance on the realized quadratic variation of the order flow.
const QV_TOL: f64 = 0.05;
/// Terminal impact must fall below this share of the impact at the prior.
const POTENTIAL_SHARE: f64 = 0.1;
const PROFIT_BAND: f64 = 3.0;
const DEVIATIONS: [f64; 3] = [0.0, 0.5, 2.0];
/// Paths used by the lockstep drift-invariance check.
const INVARIANCE_PATHS: usize = 200;
/// Latest time at which Euler and exact bridge marginals are compared; later
/// the bridge has collapsed onto its pin.
const EXACT_COMPARE_MAX_T: f64 = 4.0;
/// Horizon from which the terminal signal is compared with a standard normal.
const TERMINAL_NORMAL_T: f64 = 8.0;
/// Payoff level at which the general profit and bridge checks are run.
const PIN_LEVEL: f64 = 0.5;

/// What a suite produced.
#[derive(Debug, Clone, Default)]
pub struct SuiteOutput {
    pub series: Vec<SeriesRow>,
    pub checkpoints: Vec<CheckpointRow>,
    pub entries: Vec<SuiteEntry>,
}

impl SuiteOutput {
    fn push(&mut self, mandatory: bool, report: StatReport) {
        self.entries.push(SuiteEntry { mandatory, report });
    }

    fn summarize(&mut self, times: &[f64], quantity: &'static str, cols: &[Vec<f64>]) {
        for (&t, col) in times.iter().zip(cols) {
            let m = Moments::from_slice(col);
            self.checkpoints.push(CheckpointRow {
                t,
                quantity,
                mean: m.mean,
                se: m.std_error(),
            });
        }
    }
}

/// One row per configured checkpoint; the initial state is listed only when
/// `0` is itself a checkpoint.
fn series(
    cfg: &ExperimentConfig,
    times: &[f64],
    price: &[Vec<f64>],
    lambda: &[Vec<f64>],
    gap: &[Vec<f64>],
    qv: &[Vec<f64>],
) -> Vec<SeriesRow> {
    let with_origin = cfg.checkpoints.contains(&0.0);
    (0..times.len())
        .filter(|&j| times[j] > 0.0 || with_origin)
        .map(|j| {
            let p = Moments::from_slice(&price[j]);
            let l = Moments::from_slice(&lambda[j]);
            SeriesRow {
                t: times[j],
                mean_p: p.mean,
                se_p: p.std_error(),
                mean_lambda: l.mean,
                se_lambda: l.std_error(),
                mean_abs_gap: Moments::from_slice(&gap[j]).mean,
                qv_x_mean: Moments::from_slice(&qv[j]).mean,
            }
        })
        .collect()
}

fn mean_bound(name: &str, col: &[f64], bound: f64, t: f64) -> StatReport {
    let m = Moments::from_slice(col);
    StatReport::bounded(name, m.mean, m.std_error(), m.mean, bound)
        .with_paths(col.len())
        .with_checkpoints(&[t])
}

fn order_flow_reports(out: &mut SuiteOutput, x_t: &[f64], qv_t: &[f64], t_end: f64) -> Result<()> {
    let scaled: Vec<f64> = x_t.iter().map(|x| x / t_end.sqrt()).collect();
    if scaled.len() >= 1000 {
        out.push(
            true,
            normality_test(&scaled, 1.0)?
                .renamed("order_flow_normality")
                .with_checkpoints(&[t_end]),
        );
    }
    let qv = Moments::from_slice(qv_t);
    let rel = (qv.mean - t_end).abs() / t_end;
    out.push(
        true,
        StatReport::bounded(
            "order_flow_quadratic_variation",
            qv.mean,
            qv.std_error(),
            rel,
            QV_TOL,
        )
        .with_paths(qv_t.len())
        .with_checkpoints(&[t_end]),
    );
    Ok(())
}

/// Checkpoint used for calibration: the positive recorded time closest to 2.
fn calibration_index(times: &[f64]) -> Option<usize> {
    (1..times.len()).min_by(|&a, &b| (times[a] - 2.0).abs().total_cmp(&(times[b] - 2.0).abs()))
}

fn profit_reports(
    out: &mut SuiteOutput,
    value: f64,
    eq: ProfitEstimate,
    deviations: Vec<(f64, ProfitEstimate)>,
) -> Result<()> {
    let z = (eq.discounted - value).abs() / eq.discounted_se.max(f64::MIN_POSITIVE);
    out.push(
        true,
        StatReport::bounded(
            "profit_matches_value",
            eq.discounted,
            eq.discounted_se,
            z,
            PROFIT_BAND,
        )
        .with_paths(eq.n_paths)
        .with_flags(vec![format!("value={value:.9}")]),
    );
    let gap = eq.discounted - eq.stopped;
    let se = (eq.discounted_se.powi(2) + eq.stopped_se.powi(2)).sqrt();
    out.push(
        true,
        StatReport::bounded(
            "profit_estimators_agree",
            gap,
            se,
            gap.abs() / se.max(f64::MIN_POSITIVE),
            PROFIT_BAND,
        )
        .with_paths(eq.n_paths),
    );
    let mut all = vec![(1.0, eq)];
    all.extend(deviations);
    out.push(false, profit_optimality_test(value, &all)?);
    Ok(())
}

pub fn bernoulli_suite(cfg: &ExperimentConfig, verify: bool) -> Result<SuiteOutput> {
    let market = cfg.bernoulli_market()?;
    let sim = cfg.sim_config();
    let run = simulate_equilibrium(&market, PayoffDraw::Mixed, &sim)?;
    let times = run.times();
    let gammas = run.gammas();
    let price = run.columns(|c| c.price);
    let lambda = run.columns(|c| c.lambda);
    let qv = run.columns(|c| c.qv_x);
    let gap: Vec<Vec<f64>> = price
        .iter()
        .map(|col| {
            col.iter()
                .zip(&gammas)
                .map(|(p, g)| (p - g).abs())
                .collect()
        })
        .collect();
    let mut out = SuiteOutput {
        series: series(cfg, &times, &price, &lambda, &gap, &qv),
        ..Default::default()
    };
    out.summarize(&times, "Y", &run.columns(|c| c.y));
    out.summarize(&times, "X", &run.columns(|c| c.x));
    out.summarize(&times, "S", &run.columns(|c| c.s));
    out.summarize(&times, "N", &run.columns(|c| c.n));
    out.summarize(&times, "M", &run.columns(|c| c.m));
    out.summarize(&times, "U", &run.columns(|c| c.u));
    if !verify {
        return Ok(out);
    }
    let last = times.len() - 1;
    let t_end = times[last];
    let r = market.params().r();

    out.push(
        true,
        martingale_test(&price, &times, Some(market.p()))?.renamed("price_martingale"),
    );
    out.push(
        true,
        mean_bound(
            "price_converges_to_payoff",
            &gap[last],
            CONVERGENCE_TOL,
            t_end,
        ),
    );
    out.push(
        true,
        supermartingale_test(&lambda, &times)?.renamed("lambda_supermartingale"),
    );
    let canonical = market.with_d(0.0)?;
    let expected = times
        .iter()
        .map(|&t| lambda_mean_closed_form(t, &canonical))
        .collect::<Result<Vec<_>>>()?;
    out.push(
        true,
        mean_profile_test(&lambda, &times, &expected, &vec![0.0; times.len()])?
            .renamed("lambda_closed_form"),
    );
    out.push(
        true,
        mean_bound(
            "lambda_potential",
            &lambda[last],
            POTENTIAL_SHARE * kyle_lambda(market.p(), r)?,
            t_end,
        ),
    );
    order_flow_reports(&mut out, &run.column(last, |c| c.x), &qv[last], t_end)?;
    if let Some(j) = calibration_index(&times) {
        out.push(
            true,
            calibration_test(&price[j], &gammas)?.with_checkpoints(&[times[j]]),
        );
    }
    let (_, announcement) = announcement_sim(&run)?;
    for rep in announcement {
        let mandatory = rep.name != "announcement_jump_share";
        out.push(mandatory, rep);
    }
    let lockstep = SimConfig::new(
        cfg.dt,
        cfg.t_end,
        cfg.n_paths.min(INVARIANCE_PATHS),
        cfg.seed,
        vec![],
    );
    out.push(
        true,
        d_invariance_test(&market, &[cfg.d, cfg.d + 1.0], &lockstep)?,
    );

    let value = value_j(initial_y(&market)?, Outcome::One, market.params());
    let eq = expected_profit_mc(&market, Outcome::One, &sim, 1.0)?;
    let deviations = DEVIATIONS
        .iter()
        .map(|&c| Ok((c, expected_profit_mc(&market, Outcome::One, &sim, c)?)))
        .collect::<Result<Vec<_>>>()?;
    profit_reports(&mut out, value, eq, deviations)?;
    Ok(out)
}

/// Tolerance for the finite-horizon impact against its limit: the deterministic
/// remainder of the clock decays like `r e^{-2rT}`.
pub fn lambda_limit_tolerance(limit: f64, r: f64, t: f64) -> f64 {
    (1e-9 + r * (-2.0 * r * t).exp()) * limit.abs()
}

pub fn general_suite(cfg: &ExperimentConfig, verify: bool) -> Result<SuiteOutput> {
    let market = cfg.general_market()?;
    let qcfg = QuadratureCfg::default();
    let sim = cfg.sim_config();
    let run = simulate_bridge(&market, BridgeDraw::Mixed, &sim, &qcfg)?;
    let times = run.times();
    let gammas = run.gammas();
    let price = run.columns(|c| c.price);
    let lambda = run.columns(|c| c.lambda);
    let gap = run.columns(|c| c.gap);
    let qv = run.columns(|c| c.qv_x);
    let ys = run.columns(|c| c.y);
    let mut out = SuiteOutput {
        series: series(cfg, &times, &price, &lambda, &gap, &qv),
        ..Default::default()
    };
    out.summarize(&times, "Y", &ys);
    out.summarize(&times, "X", &run.columns(|c| c.x));
    if !verify {
        return Ok(out);
    }
    let last = times.len() - 1;
    let t_end = times[last];
    let r = market.r();

    out.push(
        true,
        martingale_test(&price, &times, Some(pricing_h(0.0, 0.0, &market, &qcfg)))?
            .renamed("price_martingale"),
    );
    out.push(
        true,
        supermartingale_test(&lambda, &times)?.renamed("lambda_supermartingale"),
    );
    let limit = lambda_limit(&market, &qcfg);
    out.push(
        true,
        mean_profile_test(
            &lambda[last..],
            &[t_end],
            &[limit],
            &[lambda_limit_tolerance(limit, r, t_end)],
        )?
        .renamed("lambda_limit"),
    );
    for j in 1..times.len() {
        let sd = market.unconditioned_variance(times[j]).sqrt();
        let rep = ks_test(&format!("own_filtration_law_t{}", times[j]), &ys[j], |x| {
            norm_cdf(x / sd)
        })?;
        out.push(true, rep.with_checkpoints(&[times[j]]));
    }
    out.push(
        t_end >= TERMINAL_NORMAL_T,
        normality_test(&ys[last], 1.0)?
            .renamed("terminal_normality")
            .with_checkpoints(&[t_end]),
    );
    let expected: Vec<f64> = times[1..]
        .iter()
        .map(|&t| market.unconditioned_variance(t))
        .collect();
    out.push(
        true,
        variance_test(&ys[1..], &times[1..], &expected)?.renamed("variance_identity"),
    );
    order_flow_reports(&mut out, &run.column(last, |c| c.x), &qv[last], t_end)?;
    if let Some(j) = calibration_index(&times) {
        out.push(
            true,
            calibration_test(&price[j], &gammas)?.with_checkpoints(&[times[j]]),
        );
    }

    let v = market.payoff.f(PIN_LEVEL);
    let pinned = simulate_bridge(&market, BridgeDraw::Fixed(v), &sim, &qcfg)?;
    let pin_gap: Vec<f64> = pinned
        .column(last, |c| c.y)
        .iter()
        .map(|y| (y - PIN_LEVEL).abs())
        .collect();
    out.push(
        true,
        mean_bound("bridge_reaches_pin", &pin_gap, CONVERGENCE_TOL, t_end),
    );
    let compare: Vec<usize> = (1..times.len())
        .filter(|&j| times[j] <= EXACT_COMPARE_MAX_T)
        .collect();
    if !compare.is_empty() {
        let at: Vec<f64> = compare.iter().map(|&j| times[j]).collect();
        let exact = exact_bridge_columns(
            &market,
            BridgeDraw::Fixed(v),
            &at,
            cfg.n_paths,
            cfg.seed.wrapping_add(1),
        )?;
        for (col, &j) in exact.iter().zip(&compare) {
            let name = format!("bridge_exact_law_t{}", times[j]);
            out.push(
                true,
                ks_two_sample_test(&name, &pinned.column(j, |c| c.y), col)?
                    .with_checkpoints(&[times[j]]),
            );
        }
    }
    if let Some(eq) = pinned.profit() {
        let value = value_j_general(0.0, 0.0, v, &market, &qcfg)?;
        let deviations = DEVIATIONS
            .iter()
            .map(|&c| {
                let dev =
                    simulate_bridge_with_strategy(&market, BridgeDraw::Fixed(v), &sim, &qcfg, c)?;
                Ok((c, dev.profit().unwrap_or(eq)))
            })
            .collect::<Result<Vec<_>>>()?;
        profit_reports(&mut out, value, eq, deviations)?;
    }
    Ok(out)
}
