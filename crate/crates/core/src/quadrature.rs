//! Gauss–Legendre and Gauss–Hermite rules with a process-wide node cache.
//!
//! Node tables are computed once per order by Newton iteration on the
//! three-term recurrences and shared immutably afterwards.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

const NEWTON_EPS: f64 = 1e-15;
const NEWTON_MAX_IT: usize = 100;

/// Nodes and weights of an `n`-point rule.
#[derive(Debug, Clone)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

type Cache = RwLock<HashMap<usize, Arc<Rule>>>;

fn cached(cache: &'static OnceLock<Cache>, n: usize, build: fn(usize) -> Rule) -> Arc<Rule> {
    let cache = cache.get_or_init(|| RwLock::new(HashMap::new()));
    if let Some(rule) = cache.read().expect("quadrature cache poisoned").get(&n) {
        return Arc::clone(rule);
    }
    let rule = Arc::new(build(n));
    cache
        .write()
        .expect("quadrature cache poisoned")
        .entry(n)
        .or_insert(rule)
        .clone()
}

static LEGENDRE: OnceLock<Cache> = OnceLock::new();
static HERMITE: OnceLock<Cache> = OnceLock::new();

/// `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> Arc<Rule> {
    assert!(n >= 1, "Gauss-Legendre needs at least one node");
    cached(&LEGENDRE, n, build_legendre)
}

/// `n`-point Gauss–Hermite rule for the weight `exp(-x^2)` (physicists' convention).
pub fn gauss_hermite(n: usize) -> Arc<Rule> {
    assert!(n >= 1, "Gauss-Hermite needs at least one node");
    cached(&HERMITE, n, build_hermite)
}

fn build_legendre(n: usize) -> Rule {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    let nf = n as f64;
    for i in 1..=m {
        let mut z = (std::f64::consts::PI * (i as f64 - 0.25) / (nf + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..NEWTON_MAX_IT {
            let (mut p1, mut p2) = (1.0, 0.0);
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = ((2.0 * jf - 1.0) * z * p2 - (jf - 1.0) * p3) / jf;
            }
            pp = nf * (z * p1 - p2) / (z * z - 1.0);
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= NEWTON_EPS {
                break;
            }
        }
        nodes[i - 1] = -z;
        nodes[n - i] = z;
        let w = 2.0 / ((1.0 - z * z) * pp * pp);
        weights[i - 1] = w;
        weights[n - i] = w;
    }
    Rule { nodes, weights }
}

/// Orthonormal Hermite function recurrence: returns `(ψ_n(z), ψ_{n-1}(z))`.
fn hermite_pair(n: usize, z: f64) -> (f64, f64) {
    const PIM4: f64 = 0.751_125_544_464_942_5; // pi^(-1/4)
    let (mut p1, mut p2) = (PIM4, 0.0);
    for j in 0..n {
        let p3 = p2;
        p2 = p1;
        let jf = j as f64;
        p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
    }
    (p1, p2)
}

fn build_hermite(n: usize) -> Rule {
    let nf = n as f64;
    // Zeros are separated by at least about π / sqrt(2n + 1); scan well below that.
    let edge = (2.0 * nf + 1.0).sqrt();
    let step = std::f64::consts::PI / edge / 16.0;
    let mut positive = Vec::with_capacity(n / 2 + 1);
    let mut lo = if n % 2 == 1 { 0.5 * step } else { 0.0 };
    let mut f_lo = hermite_pair(n, lo).0;
    while positive.len() < n / 2 && lo < edge + 1.0 {
        let hi = lo + step;
        let f_hi = hermite_pair(n, hi).0;
        if f_lo.signum() != f_hi.signum() {
            positive.push(refine_hermite_root(n, lo, hi, f_lo));
        }
        lo = hi;
        f_lo = f_hi;
    }
    assert_eq!(
        positive.len(),
        n / 2,
        "Gauss-Hermite root scan failed for n = {n}"
    );

    let weight = |z: f64| {
        let pp = (2.0 * nf).sqrt() * hermite_pair(n, z).1;
        2.0 / (pp * pp)
    };
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for &z in positive.iter().rev() {
        nodes.push(-z);
        weights.push(weight(z));
    }
    if n % 2 == 1 {
        nodes.push(0.0);
        weights.push(weight(0.0));
    }
    for &z in &positive {
        nodes.push(z);
        weights.push(weight(z));
    }
    Rule { nodes, weights }
}

/// Newton on `ψ_n` kept inside a sign-change bracket.
fn refine_hermite_root(n: usize, mut lo: f64, mut hi: f64, f_lo: f64) -> f64 {
    let nf = n as f64;
    let lo_sign = f_lo.signum();
    let mut z = 0.5 * (lo + hi);
    for _ in 0..NEWTON_MAX_IT {
        let (p1, p2) = hermite_pair(n, z);
        if p1 == 0.0 {
            return z;
        }
        if p1.signum() == lo_sign {
            lo = z;
        } else {
            hi = z;
        }
        let pp = (2.0 * nf).sqrt() * p2;
        let mut next = z - p1 / pp;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - z).abs() <= NEWTON_EPS * z.abs().max(1.0) {
            return next;
        }
        z = next;
    }
    z
}

/// Integrate `f` over `[a, b]` with one `n`-point Gauss–Legendre panel.
pub fn legendre<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, n: usize) -> f64 {
    let rule = gauss_legendre(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (b + a);
    rule.nodes
        .iter()
        .zip(&rule.weights)
        .map(|(&x, &w)| w * f(mid + half * x))
        .sum::<f64>()
        * half
}

/// Composite Gauss–Legendre over `panels` equal sub-intervals of `[a, b]`.
pub fn composite_legendre<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    panels: usize,
    n: usize,
) -> f64 {
    let width = (b - a) / panels as f64;
    let mut total = 0.0;
    for k in 0..panels {
        let lo = a + k as f64 * width;
        total += legendre(&mut f, lo, lo + width, n);
    }
    total
}

/// Integrate over the whole real line through `x = center + scale * u / (1 - u^2)`.
pub fn real_line<F: FnMut(f64) -> f64>(mut f: F, center: f64, scale: f64, n: usize) -> f64 {
    let rule = gauss_legendre(n);
    rule.nodes
        .iter()
        .zip(&rule.weights)
        .map(|(&u, &w)| {
            let d = 1.0 - u * u;
            let x = center + scale * u / d;
            let jac = scale * (1.0 + u * u) / (d * d);
            w * f(x) * jac
        })
        .sum()
}

/// `E[f(Z)]` for `Z ~ N(mean, var)` with an `n`-point Gauss–Hermite rule.
pub fn gaussian_expectation<F: FnMut(f64) -> f64>(mut f: F, mean: f64, var: f64, n: usize) -> f64 {
    let rule = gauss_hermite(n);
    let s = (2.0 * var).sqrt();
    rule.nodes
        .iter()
        .zip(&rule.weights)
        .map(|(&x, &w)| w * f(mean + s * x))
        .sum::<f64>()
        / crate::special::SQRT_PI
}
