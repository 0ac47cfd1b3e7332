use super::grid::TimeGrid;
use super::noise::NoiseStream;
use crate::error::{Error, Result};

/// Euler–Maruyama on `grid`: `x_{k+1} = x_k + drift(t_k, x_k) dt + diffusion(t_k, x_k) ΔB_k`,
/// with `ΔB` from the Brownian lane of `stream`.
///
/// A non-finite state aborts with [`Error::Divergence`] carrying the step index.
pub fn euler_maruyama<D, S>(
    drift: D,
    diffusion: S,
    x0: f64,
    grid: &TimeGrid,
    stream: &NoiseStream,
) -> Result<Vec<f64>>
where
    D: Fn(f64, f64) -> f64,
    S: Fn(f64, f64) -> f64,
{
    let mut path = Vec::with_capacity(grid.n_points());
    path.push(x0);
    let mut x = x0;
    for (k, db) in stream.increments(grid.dt).take(grid.n_steps).enumerate() {
        let t = grid.time(k);
        x += drift(t, x) * grid.dt + diffusion(t, x) * db;
        if !x.is_finite() {
            return Err(Error::Divergence { step: k + 1 });
        }
        path.push(x);
    }
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sde::grid::make_grid;

    #[test]
    fn pure_noise_is_brownian_input() {
        let g = make_grid(1.0, 0.01).unwrap();
        let s = NoiseStream::new(3, 11);
        let path = euler_maruyama(|_, _| 0.0, |_, _| 1.0, 0.0, &g, &s).unwrap();
        let mut b = 0.0;
        for (k, db) in s.increments(g.dt).take(g.n_steps).enumerate() {
            b += db;
            assert_eq!(path[k + 1], b);
        }
    }

    #[test]
    fn deterministic_growth() {
        let r = 0.7;
        for &dt in &[1e-2, 1e-3] {
            let g = make_grid(2.0, dt).unwrap();
            let path =
                euler_maruyama(|_, x| r * x, |_, _| 0.0, 1.0, &g, &NoiseStream::new(0, 0)).unwrap();
            let t = g.t_end();
            let exact = (r * t).exp();
            assert!((path[g.n_steps] - exact).abs() / exact <= 2.0 * r * t * dt);
        }
    }

    #[test]
    fn blow_up_reports_step() {
        let g = make_grid(1.0, 0.1).unwrap();
        let err = euler_maruyama(
            |_, x| x * x * 1e200,
            |_, _| 0.0,
            1.0,
            &g,
            &NoiseStream::new(0, 0),
        );
        assert!(matches!(err, Err(Error::Divergence { step: 2 })), "{err:?}");
    }
}
