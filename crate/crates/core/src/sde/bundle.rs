use serde::{Deserialize, Serialize};

use super::grid::TimeGrid;
use super::noise::NoiseStream;
use super::par::map_indexed;
use crate::error::{invalid, Error, Result};

/// Largest tolerated share of diverged paths.
pub const DIVERGENCE_BUDGET: f64 = 1e-3;

/// Which grid points a bundle keeps.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Record {
    All,
    Indices(Vec<usize>),
}

impl Record {
    pub fn resolve(&self, grid: &TimeGrid) -> Result<Vec<usize>> {
        match self {
            Record::All => Ok((0..grid.n_points()).collect()),
            Record::Indices(idx) => {
                if let Some(&bad) = idx.iter().find(|&&k| k > grid.n_steps) {
                    return Err(invalid(
                        "record",
                        format!("index {bad} beyond the last grid point {}", grid.n_steps),
                    ));
                }
                Ok(idx.clone())
            }
        }
    }
}

/// Simulated paths on a shared grid, kept at the recorded grid indices.
///
/// Row `i` belongs to the path with stream id `stream_ids[i]`; diverged paths are
/// absent and listed in `diverged` with the step at which they failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathBundle {
    pub grid: TimeGrid,
    pub seed: u64,
    pub record: Vec<usize>,
    pub stream_ids: Vec<u64>,
    pub values: Vec<f64>,
    pub diverged: Vec<(u64, usize)>,
}

impl PathBundle {
    pub fn n_paths(&self) -> usize {
        self.stream_ids.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let w = self.record.len();
        &self.values[i * w..(i + 1) * w]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.record.len().max(1))
    }

    /// Values of every path at recorded column `j`.
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|row| row[j]).collect()
    }

    /// Column of grid index `k`, if recorded.
    pub fn column_at_index(&self, k: usize) -> Option<Vec<f64>> {
        self.record
            .iter()
            .position(|&i| i == k)
            .map(|j| self.column(j))
    }
}

/// Paths that survived a divergence-checked simulation.
#[derive(Debug, Clone)]
pub struct Survivors<T> {
    pub ids: Vec<u64>,
    pub items: Vec<T>,
    pub diverged: Vec<(u64, usize)>,
}

/// Run `simulate` for every path index and apply the divergence policy.
///
/// Paths failing with [`Error::Divergence`] are dropped and counted; any other
/// error aborts. More than [`DIVERGENCE_BUDGET`] of the paths diverging is an
/// error.
pub fn run_paths<T, F>(n_paths: usize, simulate: F) -> Result<Survivors<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    if n_paths == 0 {
        return Err(invalid("n_paths", "must be at least 1"));
    }
    let results = map_indexed(n_paths, |i| simulate(i as u64));
    let mut out = Survivors {
        ids: Vec::with_capacity(n_paths),
        items: Vec::with_capacity(n_paths),
        diverged: Vec::new(),
    };
    for (i, res) in results.into_iter().enumerate() {
        match res {
            Ok(item) => {
                out.ids.push(i as u64);
                out.items.push(item);
            }
            Err(Error::Divergence { step }) => out.diverged.push((i as u64, step)),
            Err(e) => return Err(e),
        }
    }
    if out.diverged.len() as f64 > DIVERGENCE_BUDGET * n_paths as f64 {
        return Err(Error::DivergenceBudget {
            diverged: out.diverged.len(),
            total: n_paths,
        });
    }
    Ok(out)
}

/// Brownian motion `B` started at 0 for `n_paths` independent streams, kept at
/// the recorded grid points.
pub fn brownian_bundle(
    grid: &TimeGrid,
    n_paths: usize,
    seed: u64,
    record: &Record,
) -> Result<PathBundle> {
    let idx = record.resolve(grid)?;
    let last = idx.iter().copied().max().unwrap_or(0);
    let surv = run_paths(n_paths, |i| {
        let stream = NoiseStream::new(seed, i);
        let mut row = Vec::with_capacity(idx.len());
        let mut b = 0.0;
        let mut next = 0;
        let mut incs = stream.increments(grid.dt);
        for k in 0..=last {
            while next < idx.len() && idx[next] == k {
                row.push(b);
                next += 1;
            }
            if k < last {
                b += incs.next().unwrap_or(0.0);
            }
        }
        // Unsorted record indices are filled in a second pass.
        if row.len() != idx.len() {
            row = idx
                .iter()
                .map(|&k| brownian_at(&stream, grid.dt, k))
                .collect();
        }
        Ok(row)
    })?;
    Ok(PathBundle {
        grid: *grid,
        seed,
        record: idx,
        stream_ids: surv.ids,
        values: surv.items.concat(),
        diverged: surv.diverged,
    })
}

fn brownian_at(stream: &NoiseStream, dt: f64, k: usize) -> f64 {
    stream.increments(dt).take(k).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sde::functionals::Moments;
    use crate::sde::grid::make_grid;

    #[test]
    fn terminal_moments() {
        let g = make_grid(1.0, 1e-2).unwrap();
        let b = brownian_bundle(&g, 20_000, 42, &Record::Indices(vec![g.n_steps])).unwrap();
        let m = Moments::from_slice(&b.column(0));
        assert!(m.mean.abs() <= 3.0 * (1.0f64 / 20_000.0).sqrt());
        assert!((m.variance() - 1.0).abs() <= 0.05);
    }

    #[test]
    fn reproducible_and_unsorted_records() {
        let g = make_grid(1.0, 0.1).unwrap();
        let a = brownian_bundle(&g, 5, 9, &Record::All).unwrap();
        let b = brownian_bundle(&g, 5, 9, &Record::All).unwrap();
        assert_eq!(a, b);
        let c = brownian_bundle(&g, 5, 9, &Record::Indices(vec![7, 3])).unwrap();
        for i in 0..5 {
            assert_eq!(c.row(i)[0], a.row(i)[7]);
            assert_eq!(c.row(i)[1], a.row(i)[3]);
        }
        assert_eq!(a.row(0)[0], 0.0);
    }

    #[test]
    fn record_beyond_grid_rejected() {
        let g = make_grid(1.0, 0.1).unwrap();
        assert!(brownian_bundle(&g, 2, 0, &Record::Indices(vec![11])).is_err());
    }

    #[test]
    fn divergence_budget() {
        let ok = run_paths(2000, |i| {
            if i == 5 {
                Err(Error::Divergence { step: 3 })
            } else {
                Ok(i)
            }
        })
        .unwrap();
        assert_eq!(ok.diverged, vec![(5, 3)]);
        assert_eq!(ok.items.len(), 1999);
        let bad = run_paths(100, |i| {
            if i < 2 {
                Err(Error::Divergence { step: 1 })
            } else {
                Ok(i)
            }
        });
        assert!(matches!(
            bad,
            Err(Error::DivergenceBudget {
                diverged: 2,
                total: 100
            })
        ));
    }
}
