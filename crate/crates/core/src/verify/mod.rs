//! Statistical certification of simulated equilibria.

mod announce;
mod invariance;
mod profit;
mod stats;

pub use announce::{announcement_sim, AnnouncementRun, JUMP_THRESHOLD};
pub use invariance::d_invariance_test;
pub use profit::{
    bernoulli_profit_optimality, general_profit_optimality, profit_optimality_test,
    strictly_dominates,
};
pub use stats::{
    band_z, calibration_test, kolmogorov_sf, ks_statistic, ks_test, ks_two_sample,
    ks_two_sample_test, martingale_test, mean_profile_test, normality_test, supermartingale_test,
    variance_test, KS_CRITICAL_01, KS_LEVEL,
};

use serde::{Deserialize, Serialize};

/// Outcome of one statistical check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatReport {
    pub name: String,
    pub estimate: f64,
    pub std_error: f64,
    pub statistic: f64,
    pub threshold: f64,
    pub passed: bool,
    pub n_paths: usize,
    pub checkpoints: Vec<f64>,
    /// Notes such as degenerate (zero-variance) samples or skipped bins.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

impl StatReport {
    /// A report whose verdict is `statistic <= threshold`.
    pub fn bounded(
        name: impl Into<String>,
        estimate: f64,
        std_error: f64,
        statistic: f64,
        threshold: f64,
    ) -> Self {
        Self {
            name: name.into(),
            estimate,
            std_error,
            statistic,
            threshold,
            passed: statistic <= threshold,
            n_paths: 0,
            checkpoints: Vec::new(),
            flags: Vec::new(),
        }
    }

    pub fn with_paths(mut self, n: usize) -> Self {
        self.n_paths = n;
        self
    }

    pub fn with_checkpoints(mut self, times: &[f64]) -> Self {
        self.checkpoints = times.to_vec();
        self
    }

    pub fn with_flags(mut self, flags: Vec<String>) -> Self {
        self.flags = flags;
        self
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }
}
