use serde::{Deserialize, Serialize};

use super::grid::{make_grid, TimeGrid};
use crate::error::{invalid, Result};

/// Discretization and sampling settings shared by the path simulators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub dt: f64,
    pub t_end: f64,
    pub n_paths: usize,
    pub seed: u64,
    /// Times at which per-path state is kept; each must lie on the grid.
    pub checkpoints: Vec<f64>,
}

impl SimConfig {
    pub fn new(dt: f64, t_end: f64, n_paths: usize, seed: u64, checkpoints: Vec<f64>) -> Self {
        Self {
            dt,
            t_end,
            n_paths,
            seed,
            checkpoints,
        }
    }

    pub fn grid(&self) -> Result<TimeGrid> {
        make_grid(self.t_end, self.dt)
    }

    /// Grid and sorted checkpoint indices, with index 0 always first.
    pub fn layout(&self) -> Result<(TimeGrid, Vec<usize>)> {
        if self.n_paths == 0 {
            return Err(invalid("n_paths", "must be at least 1"));
        }
        let grid = self.grid()?;
        let mut idx = grid
            .indices_of(&self.checkpoints)
            .map_err(|t| invalid("checkpoints", format!("checkpoint {t} is not a grid time")))?;
        idx.push(0);
        idx.sort_unstable();
        idx.dedup();
        Ok((grid, idx))
    }
}
