//! Pinned random source for stream shuffling and synthetic data.
//!
//! The generator is xoshiro256** whose 256-bit state is filled from a
//! 64-bit seed by four successive SplitMix64 outputs. Shuffling is the
//! descending Fisher–Yates walk: for `i` from `n - 1` down to 1, draw one
//! 64-bit word `r` and swap positions `i` and `(r * (i + 1)) >> 64`
//! (128-bit product). Both steps are fixed so shuffled streams are the
//! same on every platform and release.

use rand::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256StarStar;

pub type StreamRng = Xoshiro256StarStar;

pub fn stream_rng(seed: u64) -> StreamRng {
    Xoshiro256StarStar::seed_from_u64(seed)
}

/// Uniform index in `0..=bound` by multiply-high.
fn index_at_most(rng: &mut StreamRng, bound: usize) -> usize {
    ((u128::from(rng.next_u64()) * (bound as u128 + 1)) >> 64) as usize
}

pub fn shuffle<T>(items: &mut [T], seed: u64) {
    let mut rng = stream_rng(seed);
    for i in (1..items.len()).rev() {
        let j = index_at_most(&mut rng, i);
        items.swap(i, j);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Straight transcription of the reference SplitMix64 and xoshiro256**.
    struct Reference {
        s: [u64; 4],
    }

    impl Reference {
        fn new(seed: u64) -> Self {
            let mut x = seed;
            let mut s = [0u64; 4];
            for slot in &mut s {
                x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
                let mut z = x;
                z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
                z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
                *slot = z ^ (z >> 31);
            }
            Reference { s }
        }

        fn next(&mut self) -> u64 {
            let s = &mut self.s;
            let result = s[1].wrapping_mul(5).rotate_left(7).wrapping_mul(9);
            let t = s[1] << 17;
            s[2] ^= s[0];
            s[3] ^= s[1];
            s[1] ^= s[2];
            s[0] ^= s[3];
            s[2] ^= t;
            s[3] = s[3].rotate_left(45);
            result
        }
    }

    #[test]
    fn generator_matches_reference_transcription() {
        for seed in [0, 1, 7, 42, u64::MAX] {
            let mut ours = stream_rng(seed);
            let mut reference = Reference::new(seed);
            for _ in 0..1000 {
                assert_eq!(ours.next_u64(), reference.next());
            }
        }
    }

    #[test]
    fn splitmix_first_output_for_seed_zero() {
        // Published first SplitMix64 output for seed 0.
        assert_eq!(Reference::new(0).s[0], 0xe220_a839_7b1d_cdaf);
    }

    #[test]
    fn shuffle_is_reproducible_permutation() {
        let mut a: Vec<u32> = (0..1000).collect();
        let mut b = a.clone();
        shuffle(&mut a, 7);
        shuffle(&mut b, 7);
        assert_eq!(a, b);
        assert_ne!(a, (0..1000).collect::<Vec<_>>());
        let mut sorted = a.clone();
        sorted.sort();
        assert_eq!(sorted, (0..1000).collect::<Vec<_>>());
        let mut c: Vec<u32> = (0..1000).collect();
        shuffle(&mut c, 8);
        assert_ne!(a, c);
    }

    #[test]
    fn shuffle_of_tiny_slices() {
        let mut empty: [u8; 0] = [];
        shuffle(&mut empty, 1);
        let mut one = [5];
        shuffle(&mut one, 1);
        assert_eq!(one, [5]);
    }

    #[test]
    fn shuffle_positions_are_roughly_uniform() {
        let mut counts = [[0u32; 4]; 4];
        for seed in 0..8000 {
            let mut v = [0usize, 1, 2, 3];
            shuffle(&mut v, seed);
            for (pos, &item) in v.iter().enumerate() {
                counts[item][pos] += 1;
            }
        }
        for row in counts {
            for c in row {
                assert!((1800..2200).contains(&c), "{c}");
            }
        }
    }
}
