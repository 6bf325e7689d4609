//! Counter-based deterministic random numbers.
//!
//! Each draw is a pure function of `(seed, counter)`: the SplitMix64 finalizer
//! applied to `seed + (counter + 1) * 0x9E3779B97F4A7C15`. Walking the counter
//! from zero reproduces the ordinary sequential SplitMix64 stream, and any
//! element can be computed independently, so parallel evaluation gives the same
//! bits as sequential evaluation.
//!
//! Normal deviates use the cosine branch of Box-Muller on two consecutive
//! counters. These definitions are frozen by golden-value tests.

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CounterRng {
    seed: u64,
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        CounterRng { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    #[inline]
    pub fn u64_at(&self, counter: u64) -> u64 {
        mix64(
            self.seed
                .wrapping_add(counter.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)),
        )
    }

    /// Uniform on the half-open interval `(0, 1]`, 53-bit resolution.
    #[inline]
    pub fn uniform_open_closed(&self, counter: u64) -> f64 {
        ((self.u64_at(counter) >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal deviate number `index`, built from counters `2*index`
    /// and `2*index + 1`.
    #[inline]
    pub fn standard_normal(&self, index: u64) -> f64 {
        let u1 = self.uniform_open_closed(index.wrapping_mul(2));
        let u2 = self.uniform_open_closed(index.wrapping_mul(2).wrapping_add(1));
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Sequential SplitMix64 reference stream for seed 1234567, as published
    // alongside the original algorithm and reproduced by a standalone
    // Python implementation.
    #[test]
    fn matches_reference_splitmix64_stream() {
        let rng = CounterRng::new(1234567);
        let expected = [
            6457827717110365317u64,
            3203168211198807973,
            9817491932198370423,
            4593380528125082431,
            16408922859458223821,
        ];
        for (k, &e) in expected.iter().enumerate() {
            assert_eq!(rng.u64_at(k as u64), e, "draw {k}");
        }
    }

    #[test]
    fn golden_normals() {
        let rng = CounterRng::new(42);
        let golden = GOLDEN_NORMALS_SEED_42;
        for (k, &g) in golden.iter().enumerate() {
            let z = rng.standard_normal(k as u64);
            assert!((z - g).abs() < 1e-14, "normal {k}: {z} vs {g}");
        }
    }

    // Computed with an independent Python implementation of the same
    // definition (math.log / math.cos in double precision).
    const GOLDEN_NORMALS_SEED_42: [f64; 4] = [
        0.41471975043153003,
        -0.8918862136277573,
        1.729593087937403,
        0.545620436182866,
    ];

    #[test]
    fn uniform_range() {
        let rng = CounterRng::new(7);
        for k in 0..10_000 {
            let u = rng.uniform_open_closed(k);
            assert!(u > 0.0 && u <= 1.0);
        }
    }

    #[test]
    fn normal_moments() {
        let rng = CounterRng::new(99);
        let n = 200_000;
        let (mut s, mut s2) = (0.0, 0.0);
        for k in 0..n {
            let z = rng.standard_normal(k);
            s += z;
            s2 += z * z;
        }
        let mean = s / n as f64;
        let var = s2 / n as f64 - mean * mean;
        assert!(mean.abs() < 0.01);
        assert!((var - 1.0).abs() < 0.015);
    }
}
