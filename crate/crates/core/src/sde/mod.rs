//! Seedable path simulation: grids, counter-based noise, Euler–Maruyama,
//! pathwise functionals and the divergence policy.

mod bundle;
mod config;
mod euler;
mod functionals;
mod grid;
mod noise;
pub mod par;

pub use bundle::{brownian_bundle, run_paths, PathBundle, Record, Survivors, DIVERGENCE_BUDGET};
pub use config::SimConfig;
pub use euler::euler_maruyama;
pub use functionals::{discounted_integral, pathwise_integral_dx, quadratic_variation, Moments};
pub use grid::{make_grid, TimeGrid, ON_GRID_TOL};
pub use noise::{philox4x32, Increments, Lane, NoiseStream};
