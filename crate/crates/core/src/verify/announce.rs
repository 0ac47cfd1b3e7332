use serde::{Deserialize, Serialize};

use super::stats::{martingale_test, supermartingale_test};
use super::StatReport;
use crate::bernoulli::EquilibriumRun;
use crate::error::{invalid, Result};

/// Minimum `|Γ - P_{τ-}|` counted as a visible jump at the announcement.
pub const JUMP_THRESHOLD: f64 = 0.01;
/// Required share of announced paths showing a visible jump.
const JUMP_SHARE: f64 = 0.95;

/// The announcement layer of a Bernoulli bundle: announcement times and the
/// observed-price, compensated-payoff, compensated-count and `U` processes at
/// the recorded times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnouncementRun {
    pub times: Vec<f64>,
    pub taus: Vec<f64>,
    /// Observed price `S_t = P_t 1[t < τ] + Γ 1[t ≥ τ]`, one column per time.
    pub s: Vec<Vec<f64>>,
    pub n: Vec<Vec<f64>>,
    pub m: Vec<Vec<f64>>,
    pub u: Vec<Vec<f64>>,
    /// Paths announced within the horizon.
    pub announced: usize,
    /// Of those, paths whose price jumped by more than [`JUMP_THRESHOLD`].
    pub jumped: usize,
}

impl AnnouncementRun {
    pub fn jump_fraction(&self) -> f64 {
        if self.announced == 0 {
            f64::NAN
        } else {
            self.jumped as f64 / self.announced as f64
        }
    }
}

/// Assemble the announcement layer of `run` (announcement times are drawn per
/// path inside the simulation kernel from an independent sub-stream) and test:
/// `S` and `U` for constant means, `N` and `M` for zero means, the share of
/// visible jumps at `τ`, and `|S - Γ|` for a non-increasing mean.
pub fn announcement_sim(run: &EquilibriumRun) -> Result<(AnnouncementRun, Vec<StatReport>)> {
    if run.record.len() < 2 {
        return Err(invalid(
            "checkpoints",
            "announcement tests need at least two recorded times",
        ));
    }
    let times = run.times();
    let t_end = run.grid.t_end();
    let taus: Vec<f64> = run.paths.iter().map(|p| p.tau).collect();
    let s = run.columns(|c| c.s);
    let n = run.columns(|c| c.n);
    let m = run.columns(|c| c.m);
    let u = run.columns(|c| c.u);
    let announced = run.paths.iter().filter(|p| p.tau <= t_end).count();
    let jumped = run
        .paths
        .iter()
        .filter(|p| p.tau <= t_end && p.jump.is_some_and(|j| j > JUMP_THRESHOLD))
        .count();

    let gammas = run.gammas();
    let gap: Vec<Vec<f64>> = s
        .iter()
        .map(|col| {
            col.iter()
                .zip(&gammas)
                .map(|(x, g)| (x - g).abs())
                .collect()
        })
        .collect();

    let ann = AnnouncementRun {
        times: times.clone(),
        taus,
        s,
        n,
        m,
        u,
        announced,
        jumped,
    };
    let frac = ann.jump_fraction();
    let frac_se = (frac * (1.0 - frac) / announced.max(1) as f64).sqrt();
    let reports = vec![
        martingale_test(&ann.s, &times, None)?.renamed("announcement_S_martingale"),
        martingale_test(&ann.u, &times, None)?.renamed("announcement_U_martingale"),
        martingale_test(&ann.n, &times, Some(0.0))?.renamed("announcement_N_zero_mean"),
        martingale_test(&ann.m, &times, Some(0.0))?.renamed("announcement_M_zero_mean"),
        StatReport::bounded(
            "announcement_jump_share",
            frac,
            frac_se,
            1.0 - frac,
            1.0 - JUMP_SHARE,
        )
        .with_paths(announced)
        .with_checkpoints(&[t_end]),
        supermartingale_test(&gap, &times)?.renamed("announcement_abs_S_gap_decreasing"),
    ];
    Ok((ann, reports))
}
