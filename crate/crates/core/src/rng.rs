//! Seeded splitmix64 generator.
//!
//! Every randomized decision in the obfuscators and the corpus generator
//! flows through this generator so that identical seeds reproduce identical
//! bytes on any platform. The output sequence is pinned by reference
//! vectors in the tests below; do not change the constants.

/// Deterministic 64-bit PRNG (splitmix64).
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    /// Derive a child generator for a subtask without disturbing sibling
    /// streams. Mixes the label into the current state.
    pub fn fork(&self, label: u64) -> Self {
        let mut child = Self::new(self.state ^ label.wrapping_mul(0x9E3779B97F4A7C15));
        child.next_u64();
        child
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E3779B97F4A7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^ (z >> 31)
    }

    /// Uniform value in `[0, n)` via the multiply-shift reduction.
    /// `n` must be nonzero.
    pub fn next_below(&mut self, n: u64) -> u64 {
        debug_assert!(n > 0);
        ((self.next_u64() as u128 * n as u128) >> 64) as u64
    }

    /// Uniform value in `[lo, hi]` inclusive.
    pub fn next_range(&mut self, lo: u64, hi: u64) -> u64 {
        debug_assert!(lo <= hi);
        lo + self.next_below(hi - lo + 1)
    }

    /// Uniform f64 in `[0, 1)` using the top 53 bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Bernoulli draw: true with probability `p` (clamped to [0,1]).
    pub fn coin(&mut self, p: f64) -> bool {
        if p >= 1.0 {
            return true;
        }
        if p <= 0.0 {
            return false;
        }
        self.next_f64() < p
    }

    /// In-place Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.next_below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }

    /// Pick one element by reference.
    pub fn choose<'a, T>(&mut self, items: &'a [T]) -> &'a T {
        &items[self.next_below(items.len() as u64) as usize]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Reference vectors computed independently with arbitrary-precision
    // integer arithmetic; also matches the published sequence for seed 0.
    #[test]
    fn reference_vectors() {
        let cases: &[(u64, [u64; 4])] = &[
            (
                0,
                [
                    0xE220A8397B1DCDAF,
                    0x6E789E6AA1B965F4,
                    0x06C45D188009454F,
                    0xF88BB8A8724C81EC,
                ],
            ),
            (
                1,
                [
                    0x910A2DEC89025CC1,
                    0xBEEB8DA1658EEC67,
                    0xF893A2EEFB32555E,
                    0x71C18690EE42C90B,
                ],
            ),
            (
                0xDEADBEEF,
                [
                    0x4ADFB90F68C9EB9B,
                    0xDE586A3141A10922,
                    0x021FBC2F8E1CFC1D,
                    0x7466CE737BE16790,
                ],
            ),
            (
                42,
                [
                    0xBDD732262FEB6E95,
                    0x28EFE333B266F103,
                    0x47526757130F9F52,
                    0x581CE1FF0E4AE394,
                ],
            ),
        ];
        for (seed, expected) in cases {
            let mut rng = SplitMix64::new(*seed);
            for want in expected {
                assert_eq!(rng.next_u64(), *want, "seed {seed:#x}");
            }
        }
    }

    #[test]
    fn ranges_stay_in_bounds() {
        let mut rng = SplitMix64::new(7);
        for _ in 0..1000 {
            let v = rng.next_range(3, 9);
            assert!((3..=9).contains(&v));
            let f = rng.next_f64();
            assert!((0.0..1.0).contains(&f));
        }
    }

    #[test]
    fn coin_extremes_are_exact() {
        let mut rng = SplitMix64::new(1);
        assert!(rng.coin(1.0));
        assert!(!rng.coin(0.0));
    }

    #[test]
    fn shuffle_is_a_permutation() {
        let mut rng = SplitMix64::new(99);
        let mut v: Vec<u32> = (0..50).collect();
        rng.shuffle(&mut v);
        let mut sorted = v.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..50).collect::<Vec<_>>());
    }
}
