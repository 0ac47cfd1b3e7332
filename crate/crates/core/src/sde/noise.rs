//! Counter-based Gaussian noise.
//!
//! Every draw is a pure function of `(seed, path, lane, index)` through the
//! Philox4x32-10 block cipher, so a path is reproduced bit-for-bit no matter
//! which thread simulates it or in what order.

const PHILOX_M0: u32 = 0xD251_1F53;
const PHILOX_M1: u32 = 0xCD9E_8D57;
const PHILOX_W0: u32 = 0x9E37_79B9;
const PHILOX_W1: u32 = 0xBB67_AE85;
const PHILOX_ROUNDS: usize = 10;

const TWO_NEG_53: f64 = 1.0 / 9_007_199_254_740_992.0;

#[inline(always)]
fn mulhilo(a: u32, b: u32) -> (u32, u32) {
    let p = a as u64 * b as u64;
    ((p >> 32) as u32, p as u32)
}

/// Philox4x32 with 10 rounds.
#[inline]
pub fn philox4x32(counter: [u32; 4], key: [u32; 2]) -> [u32; 4] {
    let mut c = counter;
    let mut k = key;
    for round in 0..PHILOX_ROUNDS {
        if round > 0 {
            k[0] = k[0].wrapping_add(PHILOX_W0);
            k[1] = k[1].wrapping_add(PHILOX_W1);
        }
        let (hi0, lo0) = mulhilo(PHILOX_M0, c[0]);
        let (hi1, lo1) = mulhilo(PHILOX_M1, c[2]);
        c = [hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0];
    }
    c
}

/// Independent sub-streams of one path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u32)]
pub enum Lane {
    /// Noise-trader Brownian increments.
    Brownian = 0,
    /// Draw of the payoff (Bernoulli coin or the Gaussian `η`).
    Payoff = 1,
    /// Exponential announcement time.
    Horizon = 2,
    /// Exact bridge sampler.
    Exact = 3,
}

/// The noise source of one path: master seed plus path index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NoiseStream {
    pub seed: u64,
    pub path_index: u64,
    /// Negates every Gaussian draw (antithetic partner).
    pub antithetic: bool,
}

impl NoiseStream {
    pub fn new(seed: u64, path_index: u64) -> Self {
        Self {
            seed,
            path_index,
            antithetic: false,
        }
    }

    pub fn antithetic(self) -> Self {
        Self {
            antithetic: !self.antithetic,
            ..self
        }
    }

    #[inline]
    fn block(&self, lane: Lane, index: u32) -> [u32; 4] {
        philox4x32(
            [
                index,
                lane as u32,
                self.path_index as u32,
                (self.path_index >> 32) as u32,
            ],
            [self.seed as u32, (self.seed >> 32) as u32],
        )
    }

    /// Two uniforms from one block: the first in `(0, 1]`, the second in `[0, 1)`.
    #[inline]
    pub fn uniform_pair(&self, lane: Lane, index: u32) -> (f64, f64) {
        let b = self.block(lane, index);
        let a = ((b[0] as u64) << 32 | b[1] as u64) >> 11;
        let c = ((b[2] as u64) << 32 | b[3] as u64) >> 11;
        ((a + 1) as f64 * TWO_NEG_53, c as f64 * TWO_NEG_53)
    }

    /// A uniform in `(0, 1]`.
    pub fn uniform(&self, lane: Lane, index: u32) -> f64 {
        self.uniform_pair(lane, index).0
    }

    /// Two independent standard normals (Box–Muller) from one block.
    #[inline]
    pub fn normal_pair(&self, lane: Lane, index: u32) -> (f64, f64) {
        let (u1, u2) = self.uniform_pair(lane, index);
        let rad = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
        let sign = if self.antithetic { -1.0 } else { 1.0 };
        (sign * rad * c, sign * rad * s)
    }

    /// The `k`-th standard normal of a lane.
    pub fn normal(&self, lane: Lane, k: u64) -> f64 {
        let (a, b) = self.normal_pair(lane, (k >> 1) as u32);
        if k & 1 == 0 {
            a
        } else {
            b
        }
    }

    /// Exponential variate with the given rate.
    pub fn exponential(&self, lane: Lane, index: u32, rate: f64) -> f64 {
        -self.uniform(lane, index).ln() / rate
    }

    /// Iterator over Brownian increments with step `dt`; the `k`-th item equals
    /// `sqrt(dt) * self.normal(Lane::Brownian, k)`.
    pub fn increments(&self, dt: f64) -> Increments {
        Increments {
            stream: *self,
            scale: dt.sqrt(),
            next: 0,
            spare: 0.0,
        }
    }
}

/// Sequential Brownian increments of one stream. Caches the second normal of
/// each Box–Muller pair.
#[derive(Debug, Clone)]
pub struct Increments {
    stream: NoiseStream,
    scale: f64,
    next: u64,
    spare: f64,
}

impl Iterator for Increments {
    type Item = f64;

    #[inline]
    fn next(&mut self) -> Option<f64> {
        let k = self.next;
        self.next += 1;
        let z = if k & 1 == 0 {
            let (a, b) = self.stream.normal_pair(Lane::Brownian, (k >> 1) as u32);
            self.spare = b;
            a
        } else {
            self.spare
        };
        Some(self.scale * z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn philox_known_answers() {
        assert_eq!(
            philox4x32([0, 0, 0, 0], [0, 0]),
            [0x6627_e8d5, 0xe169_c58d, 0xbc57_ac4c, 0x9b00_dbd8]
        );
        assert_eq!(
            philox4x32([u32::MAX; 4], [u32::MAX; 2]),
            [0x408f_276d, 0x41c8_3b0e, 0xa20b_c7c6, 0x6d54_51fd]
        );
        assert_eq!(
            philox4x32(
                [0x243f_6a88, 0x85a3_08d3, 0x1319_8a2e, 0x0370_7344],
                [0xa409_3822, 0x299f_31d0]
            ),
            [0xd16c_fe09, 0x94fd_cceb, 0x5001_e420, 0x2412_6ea1]
        );
    }

    #[test]
    fn iterator_matches_random_access() {
        let s = NoiseStream::new(42, 7);
        let dt: f64 = 0.01;
        for (k, inc) in s.increments(dt).take(101).enumerate() {
            assert_eq!(inc, dt.sqrt() * s.normal(Lane::Brownian, k as u64));
        }
    }

    #[test]
    fn lanes_and_paths_differ() {
        let s = NoiseStream::new(1, 0);
        assert_ne!(s.normal(Lane::Brownian, 0), s.normal(Lane::Payoff, 0));
        assert_ne!(
            s.normal(Lane::Brownian, 0),
            NoiseStream::new(1, 1).normal(Lane::Brownian, 0)
        );
        assert_ne!(
            s.normal(Lane::Brownian, 0),
            NoiseStream::new(2, 0).normal(Lane::Brownian, 0)
        );
    }

    #[test]
    fn antithetic_negates() {
        let s = NoiseStream::new(9, 3);
        let a = s.antithetic();
        for k in 0..10 {
            assert_eq!(s.normal(Lane::Brownian, k), -a.normal(Lane::Brownian, k));
        }
    }

    #[test]
    fn uniforms_in_range() {
        let s = NoiseStream::new(5, 5);
        for i in 0..10_000 {
            let (a, b) = s.uniform_pair(Lane::Horizon, i);
            assert!(a > 0.0 && a <= 1.0);
            assert!((0.0..1.0).contains(&b));
        }
    }
}
