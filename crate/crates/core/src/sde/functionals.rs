use super::grid::TimeGrid;
use crate::error::{Error, Result};

/// Sum of squared increments.
pub fn quadratic_variation(path: &[f64]) -> Result<f64> {
    if path.len() < 2 {
        return Err(Error::GridTooShort {
            min: 2,
            got: path.len(),
        });
    }
    Ok(path.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum())
}

/// Left-endpoint Riemann sum `Σ_k e^{-r t_k} integrand_k dt`.
///
/// `integrand` holds either one value per step or one per grid point (the last
/// value is then unused).
pub fn discounted_integral(integrand: &[f64], r: f64, grid: &TimeGrid) -> Result<f64> {
    if integrand.len() != grid.n_steps && integrand.len() != grid.n_points() {
        return Err(Error::LengthMismatch {
            expected: grid.n_steps,
            got: integrand.len(),
        });
    }
    Ok(integrand
        .iter()
        .take(grid.n_steps)
        .enumerate()
        .map(|(k, v)| (-r * grid.time(k)).exp() * v * grid.dt)
        .sum())
}

/// Left-endpoint stochastic integral `Σ_k g_k (x_{k+1} - x_k)`.
///
/// `g` holds one value per increment or one per path point.
pub fn pathwise_integral_dx(g: &[f64], path: &[f64]) -> Result<f64> {
    if path.is_empty() {
        return Err(Error::GridTooShort { min: 1, got: 0 });
    }
    let steps = path.len() - 1;
    if g.len() != steps && g.len() != path.len() {
        return Err(Error::LengthMismatch {
            expected: steps,
            got: g.len(),
        });
    }
    Ok(path
        .windows(2)
        .zip(g)
        .map(|(w, gk)| gk * (w[1] - w[0]))
        .sum())
}

/// Running Welford mean and variance.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub n: usize,
    pub mean: f64,
    m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn from_slice(xs: &[f64]) -> Self {
        let mut m = Self::default();
        xs.iter().for_each(|&x| m.push(x));
        m
    }

    /// Unbiased sample variance; 0 for fewer than two samples.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    /// Standard error of the mean.
    pub fn std_error(&self) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        (self.variance() / self.n as f64).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sde::grid::make_grid;

    #[test]
    fn linear_path_qv_is_exact() {
        let (m, t, dt) = (1.7, 2.0, 0.01);
        let path: Vec<f64> = (0..=200).map(|k| m * k as f64 * dt).collect();
        let qv = quadratic_variation(&path).unwrap();
        assert!((qv - m * m * t * dt).abs() < 1e-12);
    }

    #[test]
    fn smooth_path_qv_vanishes() {
        let qv = |n: usize| {
            let p: Vec<f64> = (0..=n).map(|k| (k as f64 / n as f64 * 3.0).sin()).collect();
            quadratic_variation(&p).unwrap()
        };
        let (a, b) = (qv(100), qv(200));
        assert!(b <= 0.5 * a * 1.0001);
    }

    #[test]
    fn qv_needs_two_points() {
        assert!(quadratic_variation(&[1.0]).is_err());
    }

    #[test]
    fn discounted_constants() {
        let r = 1.3;
        let g = make_grid(4.0, 1e-3).unwrap();
        let ones = vec![1.0; g.n_steps];
        let v = discounted_integral(&ones, r, &g).unwrap();
        let exact = (1.0 - (-r * 4.0f64).exp()) / r;
        assert!((v - exact).abs() <= r * g.dt);
        assert_eq!(
            discounted_integral(&vec![0.0; g.n_steps], r, &g).unwrap(),
            0.0
        );
        let grow: Vec<f64> = (0..g.n_points()).map(|k| (r * g.time(k)).exp()).collect();
        let v = discounted_integral(&grow, r, &g).unwrap();
        assert!((v - 4.0).abs() <= r * 4.0 * g.dt);
        assert!(discounted_integral(&ones[..10], r, &g).is_err());
    }

    #[test]
    fn telescoping_and_zero() {
        let path = [0.3, -1.0, 2.0, 2.5];
        assert!((pathwise_integral_dx(&[1.0; 3], &path).unwrap() - 2.2).abs() < 1e-15);
        assert_eq!(pathwise_integral_dx(&[0.0; 4], &path).unwrap(), 0.0);
        assert!(pathwise_integral_dx(&[1.0; 2], &path).is_err());
    }

    #[test]
    fn welford() {
        let m = Moments::from_slice(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m.mean, 2.5);
        assert!((m.variance() - 5.0 / 3.0).abs() < 1e-15);
    }
}
