use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Relative tolerance used to decide whether a time lies on the grid.
pub const ON_GRID_TOL: f64 = 1e-9;

/// A uniform time grid `t0, t0 + dt, ..., t0 + n_steps * dt`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t0: f64,
    pub dt: f64,
    pub n_steps: usize,
}

/// Grid from 0 with `ceil(t_end / dt)` steps; the last time is `>= t_end`.
pub fn make_grid(t_end: f64, dt: f64) -> Result<TimeGrid> {
    if !(t_end > 0.0) || !t_end.is_finite() {
        return Err(invalid(
            "t_end",
            format!("must be finite and positive, got {t_end}"),
        ));
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(invalid(
            "dt",
            format!("must be finite and positive, got {dt}"),
        ));
    }
    // Absorb representation error so that 8 / 1e-3 gives 8000, not 8001.
    let n_steps = ((t_end / dt) - ON_GRID_TOL).ceil().max(1.0) as usize;
    Ok(TimeGrid {
        t0: 0.0,
        dt,
        n_steps,
    })
}

impl TimeGrid {
    pub fn n_points(&self) -> usize {
        self.n_steps + 1
    }

    #[inline]
    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn t_end(&self) -> f64 {
        self.time(self.n_steps)
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.n_steps).map(|k| self.time(k)).collect()
    }

    /// Index of `t` if it coincides with a grid time.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        if !t.is_finite() {
            return None;
        }
        let k = ((t - self.t0) / self.dt).round();
        if k < 0.0 || k > self.n_steps as f64 {
            return None;
        }
        let k = k as usize;
        ((self.time(k) - t).abs() <= ON_GRID_TOL * t.abs().max(1.0)).then_some(k)
    }

    /// Grid indices of `times`, or the first time that is off the grid.
    pub fn indices_of(&self, times: &[f64]) -> std::result::Result<Vec<usize>, f64> {
        times.iter().map(|&t| self.index_of(t).ok_or(t)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn halves() {
        let g = make_grid(1.0, 0.5).unwrap();
        assert_eq!(g.times(), vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn ceiling_rule() {
        let g = make_grid(1.0, 0.3).unwrap();
        assert_eq!(g.n_steps, 4);
        assert!((g.t_end() - 1.2).abs() < 1e-12);
        assert!(g.t_end() >= 1.0);
    }

    #[test]
    fn fine_grid_count() {
        assert_eq!(make_grid(8.0, 1e-3).unwrap().n_steps, 8000);
        assert_eq!(make_grid(12.0, 1e-3).unwrap().n_steps, 12000);
        assert_eq!(make_grid(1.0, 0.1).unwrap().n_steps, 10);
    }

    #[test]
    fn rejects_non_positive() {
        assert!(make_grid(0.0, 0.1).is_err());
        assert!(make_grid(1.0, 0.0).is_err());
        assert!(make_grid(1.0, -0.1).is_err());
        assert!(make_grid(f64::NAN, 0.1).is_err());
    }

    #[test]
    fn strictly_increasing_times() {
        let g = make_grid(3.0, 0.07).unwrap();
        assert!(g.times().windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn checkpoint_lookup() {
        let g = make_grid(8.0, 1e-3).unwrap();
        assert_eq!(g.index_of(1.0), Some(1000));
        assert_eq!(g.index_of(8.0), Some(8000));
        assert_eq!(g.index_of(0.0), Some(0));
        assert_eq!(g.index_of(0.0005), None);
        assert_eq!(g.index_of(8.001), None);
        assert_eq!(g.indices_of(&[1.0, 2.5, 0.00025]), Err(0.00025));
    }
}
