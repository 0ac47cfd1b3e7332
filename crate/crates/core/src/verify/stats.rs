use super::StatReport;
use crate::error::{invalid, Error, Result};
use crate::sde::Moments;
use crate::special::{norm_cdf, norm_quantile};

/// Family-wise false-failure budget of one multi-checkpoint test.
const FAMILY_LEVEL: f64 = 0.05;
/// Minimum half-width of a moment band, in standard errors.
const MIN_BAND: f64 = 3.0;
/// Significance level of the distributional tests.
pub const KS_LEVEL: f64 = 0.01;
/// Asymptotic Kolmogorov critical value at level 0.01.
pub const KS_CRITICAL_01: f64 = 1.627_62;
const MIN_NORMALITY_SAMPLES: usize = 1000;
const CALIBRATION_BINS: usize = 10;
/// Relative tolerance when comparing zero-variance samples.
const DEGENERATE_TOL: f64 = 1e-9;

/// Band half-width for `m` simultaneous two-sided z-tests: the Bonferroni
/// quantile, never below 3.
pub fn band_z(m: usize) -> f64 {
    let m = m.max(1) as f64;
    norm_quantile(1.0 - FAMILY_LEVEL / (2.0 * m)).max(MIN_BAND)
}

fn degenerate_close(a: f64, b: f64) -> bool {
    (a - b).abs() <= DEGENERATE_TOL * a.abs().max(b.abs()).max(1.0)
}

/// z-score of `m.mean` against `target`; zero-variance samples give 0 when they
/// match and infinity otherwise.
fn zscore(m: &Moments, target: f64, degenerate: &mut bool) -> f64 {
    let se = m.std_error();
    if se > 0.0 {
        (m.mean - target) / se
    } else {
        *degenerate = true;
        if degenerate_close(m.mean, target) {
            0.0
        } else {
            (m.mean - target).signum() * f64::INFINITY
        }
    }
}

fn check_columns(samples: &[Vec<f64>], checkpoints: &[f64]) -> Result<usize> {
    if samples.len() < 2 {
        return Err(Error::GridTooShort {
            min: 2,
            got: samples.len(),
        });
    }
    if checkpoints.len() != samples.len() {
        return Err(Error::LengthMismatch {
            expected: samples.len(),
            got: checkpoints.len(),
        });
    }
    let n = samples[0].len();
    if n < 2 {
        return Err(invalid("samples", "need at least two paths"));
    }
    if let Some(bad) = samples.iter().find(|c| c.len() != n) {
        return Err(Error::LengthMismatch {
            expected: n,
            got: bad.len(),
        });
    }
    Ok(n)
}

fn paired(a: &[f64], b: &[f64]) -> Moments {
    let mut m = Moments::default();
    a.iter().zip(b).for_each(|(x, y)| m.push(y - x));
    m
}

/// Slope of `y` on `x` with its heteroskedasticity-robust (HC0) standard
/// error; `None` when `x` has no spread.
fn robust_slope(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    let n = x.len() as f64;
    let xbar = x.iter().sum::<f64>() / n;
    let ybar = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - xbar).powi(2)).sum();
    if !(sxx > 0.0) || sxx <= 1e-24 * n * xbar.abs().max(1.0).powi(2) {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - xbar) * (b - ybar)).sum();
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let meat: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| ((a - xbar) * (b - intercept - slope * a)).powi(2))
        .sum();
    Some((slope, meat.sqrt() / sxx))
}

/// Martingale check on per-checkpoint columns (one value per path, paths
/// aligned across columns).
///
/// Mean constancy: each later checkpoint against the first by paired
/// differences, or every checkpoint against `expected_mean` when given.
/// Orthogonality: the slope of each increment on the current level.
/// All z-scores share one Bonferroni band.
pub fn martingale_test(
    samples: &[Vec<f64>],
    checkpoints: &[f64],
    expected_mean: Option<f64>,
) -> Result<StatReport> {
    let n = check_columns(samples, checkpoints)?;
    let mut flags = Vec::new();
    let mut degenerate = false;
    let mut scores = Vec::new();
    match expected_mean {
        Some(mu) => {
            for col in samples {
                scores.push(zscore(&Moments::from_slice(col), mu, &mut degenerate));
            }
        }
        None => {
            for col in &samples[1..] {
                scores.push(zscore(&paired(&samples[0], col), 0.0, &mut degenerate));
            }
        }
    }
    let mut skipped = 0;
    for w in samples.windows(2) {
        let inc: Vec<f64> = w[0].iter().zip(&w[1]).map(|(a, b)| b - a).collect();
        match robust_slope(&w[0], &inc) {
            Some((slope, se)) if se > 0.0 => scores.push(slope / se),
            Some((slope, _)) => {
                degenerate = true;
                scores.push(if slope.abs() <= DEGENERATE_TOL {
                    0.0
                } else {
                    f64::INFINITY
                });
            }
            None => skipped += 1,
        }
    }
    if degenerate {
        flags.push("degenerate: zero-variance sample compared with tolerance".into());
    }
    if skipped > 0 {
        flags.push(format!("regression skipped at {skipped} constant level(s)"));
    }
    let statistic = scores.iter().fold(0.0f64, |m, z| m.max(z.abs()));
    let last = Moments::from_slice(samples.last().map(Vec::as_slice).unwrap_or(&[]));
    Ok(StatReport::bounded(
        "martingale",
        last.mean,
        last.std_error(),
        statistic,
        band_z(scores.len()),
    )
    .with_paths(n)
    .with_checkpoints(checkpoints)
    .with_flags(flags))
}

/// Supermartingale check: each consecutive paired increment must not have a
/// significantly positive mean (one-sided Bonferroni band).
pub fn supermartingale_test(samples: &[Vec<f64>], checkpoints: &[f64]) -> Result<StatReport> {
    let n = check_columns(samples, checkpoints)?;
    let mut degenerate = false;
    let scores: Vec<f64> = samples
        .windows(2)
        .map(|w| zscore(&paired(&w[0], &w[1]), 0.0, &mut degenerate))
        // a strictly decreasing zero-variance step is no evidence against the claim
        .map(|z| if z == f64::NEG_INFINITY { 0.0 } else { z })
        .collect();
    let statistic = scores.iter().fold(f64::NEG_INFINITY, |m, &z| m.max(z));
    let threshold = norm_quantile(1.0 - FAMILY_LEVEL / scores.len() as f64).max(MIN_BAND);
    let last = Moments::from_slice(samples.last().map(Vec::as_slice).unwrap_or(&[]));
    let flags = if degenerate {
        vec!["degenerate: zero-variance increment compared with tolerance".to_string()]
    } else {
        Vec::new()
    };
    Ok(StatReport::bounded(
        "supermartingale",
        last.mean,
        last.std_error(),
        statistic,
        threshold,
    )
    .with_paths(n)
    .with_checkpoints(checkpoints)
    .with_flags(flags))
}

/// Mean of each column against an expected profile: column `j` passes when
/// `|mean_j - expected_j| <= z SE_j + abs_tol_j`, with `z` the Bonferroni band.
/// `abs_tol` covers deterministic approximation error (quadrature, finite horizon).
pub fn mean_profile_test(
    samples: &[Vec<f64>],
    checkpoints: &[f64],
    expected: &[f64],
    abs_tol: &[f64],
) -> Result<StatReport> {
    if samples.is_empty() || samples.len() != checkpoints.len() {
        return Err(Error::LengthMismatch {
            expected: samples.len(),
            got: checkpoints.len(),
        });
    }
    if expected.len() != samples.len() || abs_tol.len() != samples.len() {
        return Err(Error::LengthMismatch {
            expected: samples.len(),
            got: expected.len().min(abs_tol.len()),
        });
    }
    let mut degenerate = false;
    let mut worst = (0.0f64, 0.0, 0.0);
    for ((col, &mu), &tol) in samples.iter().zip(expected).zip(abs_tol) {
        let m = Moments::from_slice(col);
        let excess = ((m.mean - mu).abs() - tol).max(0.0);
        let se = m.std_error();
        let z = if excess == 0.0 {
            0.0
        } else if se > 0.0 {
            excess / se
        } else {
            degenerate = true;
            f64::INFINITY
        };
        if z >= worst.0 {
            worst = (z, m.mean - mu, se);
        }
    }
    let flags = if degenerate {
        vec!["degenerate: zero-variance sample outside tolerance".to_string()]
    } else {
        Vec::new()
    };
    Ok(StatReport::bounded(
        "mean_profile",
        worst.1,
        worst.2,
        worst.0,
        band_z(samples.len()),
    )
    .with_paths(samples[0].len())
    .with_checkpoints(checkpoints)
    .with_flags(flags))
}

/// Sample variance of each column against `expected`, with the standard error
/// `√((m₄ - s⁴)/n)` of the variance estimate.
pub fn variance_test(
    samples: &[Vec<f64>],
    checkpoints: &[f64],
    expected: &[f64],
) -> Result<StatReport> {
    if samples.is_empty() || samples.len() != checkpoints.len() || expected.len() != samples.len() {
        return Err(Error::LengthMismatch {
            expected: samples.len(),
            got: checkpoints.len().min(expected.len()),
        });
    }
    let mut worst = (0.0f64, 0.0, 0.0);
    for (col, &v) in samples.iter().zip(expected) {
        let n = col.len() as f64;
        if n < 2.0 {
            return Err(invalid("samples", "need at least two paths"));
        }
        let m = Moments::from_slice(col);
        let s2 = m.variance();
        let m4 = col.iter().map(|x| (x - m.mean).powi(4)).sum::<f64>() / n;
        let se = ((m4 - s2 * s2).max(0.0) / n).sqrt();
        let z = if se > 0.0 {
            (s2 - v).abs() / se
        } else if degenerate_close(s2, v) {
            0.0
        } else {
            f64::INFINITY
        };
        if z >= worst.0 {
            worst = (z, s2 - v, se);
        }
    }
    Ok(
        StatReport::bounded("variance", worst.1, worst.2, worst.0, band_z(samples.len()))
            .with_paths(samples[0].len())
            .with_checkpoints(checkpoints),
    )
}

/// `P(K > λ)` for the Kolmogorov distribution.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

fn sorted(xs: &[f64]) -> Result<Vec<f64>> {
    if xs.iter().any(|x| x.is_nan()) {
        return Err(invalid("samples", "contain NaN"));
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// One-sample Kolmogorov–Smirnov distance `sup |F_n - F|`.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<f64> {
    if samples.is_empty() {
        return Err(invalid("samples", "empty"));
    }
    let v = sorted(samples)?;
    let n = v.len() as f64;
    Ok(v.iter().enumerate().fold(0.0f64, |d, (i, &x)| {
        let f = cdf(x);
        d.max(f - i as f64 / n).max((i + 1) as f64 / n - f)
    }))
}

/// Two-sample Kolmogorov–Smirnov distance.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(invalid("samples", "empty"));
    }
    let (a, b) = (sorted(a)?, sorted(b)?);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// Scale factor turning a KS distance into the asymptotic Kolmogorov statistic.
fn ks_scale(n_eff: f64) -> f64 {
    let s = n_eff.sqrt();
    s + 0.12 + 0.11 / s
}

/// One-sample KS test at level 0.01; `statistic` and `threshold` are distances.
pub fn ks_test<F: Fn(f64) -> f64>(name: &str, samples: &[f64], cdf: F) -> Result<StatReport> {
    let d = ks_statistic(samples, cdf)?;
    let n = samples.len();
    let scale = ks_scale(n as f64);
    let m = Moments::from_slice(samples);
    Ok(
        StatReport::bounded(name, m.mean, m.std_error(), d, KS_CRITICAL_01 / scale)
            .with_paths(n)
            .with_flags(vec![format!("p_value={:.4}", kolmogorov_sf(scale * d))]),
    )
}

/// Two-sample KS test at level 0.01.
pub fn ks_two_sample_test(name: &str, a: &[f64], b: &[f64]) -> Result<StatReport> {
    let d = ks_two_sample(a, b)?;
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let scale = ks_scale(na * nb / (na + nb));
    let ma = Moments::from_slice(a);
    let mb = Moments::from_slice(b);
    Ok(StatReport::bounded(
        name,
        ma.mean - mb.mean,
        (ma.std_error().powi(2) + mb.std_error().powi(2)).sqrt(),
        d,
        KS_CRITICAL_01 / scale,
    )
    .with_paths(a.len().min(b.len()))
    .with_flags(vec![format!("p_value={:.4}", kolmogorov_sf(scale * d))]))
}

/// KS test of `samples` against `N(0, scale²)`.
pub fn normality_test(samples: &[f64], scale: f64) -> Result<StatReport> {
    if samples.len() < MIN_NORMALITY_SAMPLES {
        return Err(invalid(
            "samples",
            format!(
                "normality test needs at least {MIN_NORMALITY_SAMPLES}, got {}",
                samples.len()
            ),
        ));
    }
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(invalid(
            "scale",
            format!("must be finite and positive, got {scale}"),
        ));
    }
    ks_test("normality", samples, |x| norm_cdf(x / scale))
}

/// Calibration of prices against realized payoffs: paths are split into ten
/// equal-count bins by price rank and each bin's mean `Γ - P` is tested against
/// zero. For binary payoffs the standard error is floored by the binomial
/// value `√(Σ P(1-P))/n` implied by the prices themselves.
pub fn calibration_test(prices: &[f64], payoffs: &[f64]) -> Result<StatReport> {
    if prices.len() != payoffs.len() {
        return Err(Error::LengthMismatch {
            expected: prices.len(),
            got: payoffs.len(),
        });
    }
    if prices.iter().chain(payoffs).any(|x| !x.is_finite()) {
        return Err(invalid("prices", "prices and payoffs must be finite"));
    }
    let n = prices.len();
    let binary = payoffs.iter().all(|&g| g == 0.0 || g == 1.0)
        && prices.iter().all(|&p| (0.0..=1.0).contains(&p));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| prices[a].total_cmp(&prices[b]).then(a.cmp(&b)));
    let mut flags = Vec::new();
    let mut scores = Vec::new();
    let mut degenerate = false;
    for b in 0..CALIBRATION_BINS {
        let idx = &order[b * n / CALIBRATION_BINS..(b + 1) * n / CALIBRATION_BINS];
        if idx.len() < 2 {
            flags.push(format!("bin {b} skipped: {} path(s)", idx.len()));
            continue;
        }
        let m = Moments::from_slice(
            &idx.iter()
                .map(|&i| payoffs[i] - prices[i])
                .collect::<Vec<_>>(),
        );
        let mut se = m.std_error();
        if binary {
            let var: f64 = idx.iter().map(|&i| prices[i] * (1.0 - prices[i])).sum();
            se = se.max(var.sqrt() / idx.len() as f64);
        }
        let z = if se > 0.0 {
            m.mean / se
        } else {
            degenerate = true;
            if m.mean.abs() <= DEGENERATE_TOL {
                0.0
            } else {
                f64::INFINITY
            }
        };
        scores.push(z);
    }
    if scores.is_empty() {
        return Err(invalid("prices", "too few paths for calibration bins"));
    }
    if degenerate {
        flags.push("degenerate: zero-variance bin compared with tolerance".into());
    }
    let overall = Moments::from_slice(
        &prices
            .iter()
            .zip(payoffs)
            .map(|(p, g)| g - p)
            .collect::<Vec<_>>(),
    );
    let statistic = scores.iter().fold(0.0f64, |m, z| m.max(z.abs()));
    Ok(StatReport::bounded(
        "calibration",
        overall.mean,
        overall.std_error(),
        statistic,
        band_z(scores.len()),
    )
    .with_paths(n)
    .with_flags(flags))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sde::{brownian_bundle, make_grid, Lane, NoiseStream, Record};

    fn normals(n: usize, seed: u64) -> Vec<f64> {
        (0..n as u64)
            .map(|i| NoiseStream::new(seed, i).normal(Lane::Payoff, 0))
            .collect()
    }

    fn uniforms(n: usize, seed: u64) -> Vec<f64> {
        (0..n as u64)
            .map(|i| NoiseStream::new(seed, i).uniform(Lane::Payoff, 0))
            .collect()
    }

    fn brownian(times: &[f64], n: usize, seed: u64) -> Vec<Vec<f64>> {
        let grid = make_grid(4.0, 1e-2).unwrap();
        let idx = grid.indices_of(times).unwrap();
        let b = brownian_bundle(&grid, n, seed, &Record::Indices(idx)).unwrap();
        (0..times.len()).map(|j| b.column(j)).collect()
    }

    #[test]
    fn band_is_at_least_three() {
        assert_eq!(band_z(1), 3.0);
        assert_eq!(band_z(4), 3.0);
        assert!(band_z(1000) > 3.0);
    }

    #[test]
    fn brownian_is_martingale() {
        let t = [1.0, 2.0, 4.0];
        let cols = brownian(&t, 5000, 1);
        let rep = martingale_test(&cols, &t, None).unwrap();
        assert!(rep.passed, "{rep:?}");
        assert!(martingale_test(&cols, &t, Some(0.0)).unwrap().passed);
    }

    #[test]
    fn drift_fails_martingale() {
        let t = [1.0, 2.0, 4.0];
        let det: Vec<Vec<f64>> = t.iter().map(|&s| vec![s; 100]).collect();
        let rep = martingale_test(&det, &t, None).unwrap();
        assert!(!rep.passed);
        assert!(rep.flags.iter().any(|f| f.contains("degenerate")));
        let noisy: Vec<Vec<f64>> = brownian(&t, 5000, 2)
            .into_iter()
            .zip(t)
            .map(|(c, s)| c.into_iter().map(|b| b + 0.2 * s).collect())
            .collect();
        assert!(!martingale_test(&noisy, &t, None).unwrap().passed);
    }

    #[test]
    fn conditional_drift_caught_by_regression() {
        // Mean-reverting increments: mean constant, increments anti-correlated with level.
        let x0 = normals(5000, 3);
        let noise = normals(5000, 4);
        let x1: Vec<f64> = x0
            .iter()
            .zip(&noise)
            .map(|(a, e)| 0.5 * a + 0.866 * e)
            .collect();
        let rep = martingale_test(&[x0, x1], &[0.0, 1.0], None).unwrap();
        assert!(!rep.passed);
    }

    #[test]
    fn supermartingale_controls() {
        let t = [1.0, 2.0, 4.0];
        let cols = brownian(&t, 5000, 5);
        let abs: Vec<Vec<f64>> = cols
            .iter()
            .map(|c| c.iter().map(|x| x.abs()).collect())
            .collect();
        assert!(!supermartingale_test(&abs, &t).unwrap().passed);
        let neg: Vec<Vec<f64>> = abs.iter().map(|c| c.iter().map(|x| -x).collect()).collect();
        assert!(supermartingale_test(&neg, &t).unwrap().passed);
        let det: Vec<Vec<f64>> = t.iter().map(|&s| vec![1.0 / s; 10]).collect();
        assert!(supermartingale_test(&det, &t).unwrap().passed);
        assert!(supermartingale_test(&cols, &t).unwrap().passed);
    }

    #[test]
    fn normality_controls() {
        assert!(normality_test(&normals(20_000, 6), 1.0).unwrap().passed);
        let scaled: Vec<f64> = normals(5000, 7).iter().map(|z| 2.0 * z).collect();
        assert!(normality_test(&scaled, 2.0).unwrap().passed);
        assert!(!normality_test(&scaled, 1.0).unwrap().passed);
        let u: Vec<f64> = uniforms(5000, 8).iter().map(|u| 2.0 * u - 1.0).collect();
        assert!(!normality_test(&u, 1.0).unwrap().passed);
        assert!(normality_test(&normals(999, 1), 1.0).is_err());
    }

    #[test]
    fn mean_profile_controls() {
        let t = [1.0, 2.0];
        let cols = brownian(&t, 4000, 13);
        assert!(
            mean_profile_test(&cols, &t, &[0.0, 0.0], &[0.0, 0.0])
                .unwrap()
                .passed
        );
        assert!(
            !mean_profile_test(&cols, &t, &[0.0, 0.5], &[0.0, 0.0])
                .unwrap()
                .passed
        );
        let det = vec![vec![1.0 + 1e-7; 10]];
        assert!(
            !mean_profile_test(&det, &[8.0], &[1.0], &[1e-9])
                .unwrap()
                .passed
        );
        assert!(
            mean_profile_test(&det, &[8.0], &[1.0], &[1e-6])
                .unwrap()
                .passed
        );
    }

    #[test]
    fn variance_controls() {
        let t = [1.0, 4.0];
        let cols = brownian(&t, 5000, 14);
        assert!(variance_test(&cols, &t, &[1.0, 4.0]).unwrap().passed);
        assert!(!variance_test(&cols, &t, &[1.0, 3.0]).unwrap().passed);
    }

    #[test]
    fn kolmogorov_tail() {
        assert!((kolmogorov_sf(KS_CRITICAL_01) - 0.01).abs() < 1e-4);
        assert!((kolmogorov_sf(1.358) - 0.05).abs() < 1e-3);
        assert_eq!(kolmogorov_sf(0.0), 1.0);
    }

    #[test]
    fn two_sample_controls() {
        let a = normals(5000, 9);
        let b = normals(5000, 10);
        assert!(ks_two_sample_test("same", &a, &b).unwrap().passed);
        let shifted: Vec<f64> = b.iter().map(|x| x + 0.2).collect();
        assert!(!ks_two_sample_test("shifted", &a, &shifted).unwrap().passed);
        assert_eq!(ks_two_sample(&a, &a).unwrap(), 0.0);
        assert_eq!(ks_two_sample(&[0.0, 1.0], &[2.0, 3.0]).unwrap(), 1.0);
    }

    #[test]
    fn ks_distance_known_value() {
        // Single sample at the median of U(0,1): D = 1/2.
        assert!((ks_statistic(&[0.5], |x| x).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn calibration_controls() {
        let u = uniforms(20_000, 11);
        let draws = uniforms(20_000, 12);
        let gamma: Vec<f64> = u
            .iter()
            .zip(&draws)
            .map(|(p, d)| if d < p { 1.0 } else { 0.0 })
            .collect();
        assert!(calibration_test(&u, &gamma).unwrap().passed);
        let flat = vec![0.5; 20_000];
        let biased: Vec<f64> = draws
            .iter()
            .map(|d| if *d < 0.7 { 1.0 } else { 0.0 })
            .collect();
        assert!(!calibration_test(&flat, &biased).unwrap().passed);
        let p: Vec<f64> = (1..=15).map(|i| i as f64 / 16.0).collect();
        let g: Vec<f64> = (0..15).map(|i| (i % 2) as f64).collect();
        let few = calibration_test(&p, &g).unwrap();
        assert!(few.flags.iter().any(|f| f.contains("skipped")));
    }
}
