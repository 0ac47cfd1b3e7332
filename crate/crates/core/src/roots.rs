//! Bracketed root finding for strictly increasing maps.

use crate::error::{Error, Result};

const MAX_EXPANSIONS: usize = 200;
const MAX_BISECTIONS: usize = 400;

/// Find `x` with `f(x) = target` for a strictly increasing `f`.
///
/// The bracket grows geometrically from `guess` with initial half-width `step`,
/// is shrunk by bisection until its width is below `x_tol`, and is then polished
/// with at most `newton_steps` Newton iterations when a derivative is supplied
/// (a Newton step leaving the final bracket is discarded).
pub fn solve_increasing<F, D>(
    f: F,
    df: Option<D>,
    target: f64,
    guess: f64,
    step: f64,
    x_tol: f64,
    newton_steps: usize,
) -> Result<f64>
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    if !target.is_finite() || !guess.is_finite() {
        return Err(Error::Root(format!(
            "non-finite input (target {target}, guess {guess})"
        )));
    }
    let g = |x: f64| f(x) - target;
    let mut step = step.abs().max(f64::EPSILON);
    let (mut lo, mut hi) = (guess - step, guess + step);
    let (mut glo, mut ghi) = (g(lo), g(hi));
    let mut expansions = 0;
    while glo > 0.0 || ghi < 0.0 {
        if expansions == MAX_EXPANSIONS || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Root(format!(
                "could not bracket target {target} (reached [{lo}, {hi}])"
            )));
        }
        step *= 2.0;
        if glo > 0.0 {
            hi = lo;
            ghi = glo;
            lo -= step;
            glo = g(lo);
        } else {
            lo = hi;
            glo = ghi;
            hi += step;
            ghi = g(hi);
        }
        expansions += 1;
    }
    if glo == 0.0 {
        return Ok(lo);
    }
    if ghi == 0.0 {
        return Ok(hi);
    }
    for _ in 0..MAX_BISECTIONS {
        if hi - lo <= x_tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let gm = g(mid);
        if gm == 0.0 {
            return Ok(mid);
        }
        if gm < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut x = 0.5 * (lo + hi);
    if let Some(df) = df {
        let (blo, bhi) = (lo - x_tol, hi + x_tol);
        for _ in 0..newton_steps {
            let d = df(x);
            if !(d > 0.0) {
                break;
            }
            let next = x - g(x) / d;
            if !(next >= blo && next <= bhi) {
                break;
            }
            x = next;
        }
    }
    Ok(x)
}

/// Like [`solve_increasing`] without a derivative.
pub fn solve_increasing_plain<F: Fn(f64) -> f64>(
    f: F,
    target: f64,
    guess: f64,
    step: f64,
    x_tol: f64,
) -> Result<f64> {
    solve_increasing(f, None::<fn(f64) -> f64>, target, guess, step, x_tol, 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_cube_root_far_from_guess() {
        let x = solve_increasing(
            |x| x * x * x,
            Some(|x: f64| 3.0 * x * x),
            1000.0,
            0.0,
            0.1,
            1e-12,
            3,
        )
        .unwrap();
        assert!((x - 10.0).abs() < 1e-11);
    }

    #[test]
    fn unreachable_target_is_an_error() {
        let err = solve_increasing_plain(|x: f64| x.atan(), 2.0, 0.0, 1.0, 1e-12);
        assert!(matches!(err, Err(Error::Root(_))));
    }
}
