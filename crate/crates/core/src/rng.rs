//! Counter-based pseudo-random generation.
//!
//! Every random quantity in the library is derived by hashing a `(seed, tag,
//! index)` triple with the SplitMix64 finalizer. Streams are therefore
//! platform-independent, splittable, and safe to evaluate in parallel: the
//! value at any index never depends on how many values were drawn before it.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer: a full-avalanche 64-bit mixer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child key from a parent key and a tag word.
#[inline]
pub fn derive(key: u64, tag: u64) -> u64 {
    mix64(key ^ tag.wrapping_mul(GOLDEN))
}

/// One-shot hash of a `(seed, a, b)` triple.
#[inline]
pub fn hash3(seed: u64, a: u64, b: u64) -> u64 {
    mix64(derive(derive(seed, a), b))
}

/// Map 64 random bits onto `[0, 1)` using the top 53 bits.
#[inline]
pub fn uniform01(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Sequential stream over a keyed counter.
#[derive(Clone, Debug)]
pub struct Stream {
    key: u64,
    ctr: u64,
}

impl Stream {
    pub fn new(key: u64) -> Self {
        Stream { key, ctr: 0 }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let v = mix64(self.key ^ self.ctr.wrapping_mul(GOLDEN));
        self.ctr += 1;
        v
    }

    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        uniform01(self.next_u64())
    }

    /// Unbiased-enough draw from `[0, n)` via 128-bit widening multiply.
    #[inline]
    pub fn next_below(&mut self, n: u64) -> u64 {
        debug_assert!(n > 0);
        ((self.next_u64() as u128 * n as u128) >> 64) as u64
    }

    /// In-place Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.next_below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }

    /// `m` distinct indices drawn from `0..n` without replacement, ascending.
    pub fn sample_indices(&mut self, n: usize, m: usize) -> Vec<usize> {
        assert!(m <= n, "cannot sample {m} from {n}");
        let mut pool: Vec<usize> = (0..n).collect();
        for i in 0..m {
            let j = i + self.next_below((n - i) as u64) as usize;
            pool.swap(i, j);
        }
        pool.truncate(m);
        pool.sort_unstable();
        pool
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mix_is_deterministic_and_nontrivial() {
        assert_eq!(mix64(0), mix64(0));
        assert_ne!(mix64(0), 0);
        assert_ne!(mix64(1), mix64(2));
    }

    #[test]
    fn stream_restarts_identically() {
        let a: Vec<u64> = {
            let mut s = Stream::new(42);
            (0..16).map(|_| s.next_u64()).collect()
        };
        let b: Vec<u64> = {
            let mut s = Stream::new(42);
            (0..16).map(|_| s.next_u64()).collect()
        };
        assert_eq!(a, b);
        let c: Vec<u64> = {
            let mut s = Stream::new(43);
            (0..16).map(|_| s.next_u64()).collect()
        };
        assert_ne!(a, c);
    }

    #[test]
    fn uniform01_in_range() {
        let mut s = Stream::new(7);
        for _ in 0..10_000 {
            let v = s.next_f64();
            assert!((0.0..1.0).contains(&v));
        }
    }

    #[test]
    fn sample_indices_distinct_and_sorted() {
        let mut s = Stream::new(3);
        let idx = s.sample_indices(100, 40);
        assert_eq!(idx.len(), 40);
        for w in idx.windows(2) {
            assert!(w[0] < w[1]);
        }
        assert!(idx.iter().all(|&i| i < 100));
    }

    #[test]
    fn shuffle_is_a_permutation() {
        let mut s = Stream::new(9);
        let mut v: Vec<usize> = (0..57).collect();
        s.shuffle(&mut v);
        let mut sorted = v.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..57).collect::<Vec<_>>());
    }
}
