//! Counter-based splittable random generator.
//!
//! Every randomized operation in the crate owns an independent stream keyed
//! by `(seed, purpose tag, ...)`. Streams are stateless: output `i` is
//! `mix64(key + (i+1) * GOLDEN_GAMMA)` where `mix64` is the SplitMix64
//! finalizer, so a stream can be replayed from any point and two streams
//! with different keys never share structure. No generator state is shared
//! across threads; identical keys yield identical draws on every platform.

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer: full-avalanche bijection on u64.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Absorbs a byte string into a key. Chunks are little-endian u64s, zero
/// padded; the trailing mix over the length blocks extension collisions.
fn absorb(key: u64, bytes: &[u8]) -> u64 {
    let mut k = key;
    for chunk in bytes.chunks(8) {
        let mut buf = [0u8; 8];
        buf[..chunk.len()].copy_from_slice(chunk);
        k = mix64(k ^ u64::from_le_bytes(buf));
    }
    mix64(k ^ (bytes.len() as u64) ^ GOLDEN_GAMMA)
}

#[derive(Debug, Clone)]
pub struct StreamRng {
    key: u64,
    counter: u64,
}

impl StreamRng {
    /// Stream for a bare seed. Prefer [`StreamRng::keyed`] so unrelated
    /// consumers of the same seed do not replay each other's draws.
    pub fn new(seed: u64) -> Self {
        StreamRng {
            key: mix64(seed ^ GOLDEN_GAMMA),
            counter: 0,
        }
    }

    /// Stream keyed by a seed plus purpose tags, e.g.
    /// `StreamRng::keyed(seed, &["sample", dataset_name])`.
    pub fn keyed(seed: u64, tags: &[&str]) -> Self {
        let mut key = mix64(seed ^ GOLDEN_GAMMA);
        for tag in tags {
            key = absorb(key, tag.as_bytes());
        }
        StreamRng { key, counter: 0 }
    }

    /// Child stream with an extra tag; the parent is not advanced.
    pub fn derive(&self, tag: &str) -> StreamRng {
        StreamRng {
            key: absorb(self.key, tag.as_bytes()),
            counter: 0,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.counter += 1;
        mix64(self.key.wrapping_add(self.counter.wrapping_mul(GOLDEN_GAMMA)))
    }

    /// Uniform draw from `0..n` by modulo rejection; no bias for any n.
    pub fn gen_range(&mut self, n: u64) -> u64 {
        assert!(n > 0, "gen_range requires n > 0");
        let threshold = n.wrapping_neg() % n; // 2^64 mod n
        loop {
            let x = self.next_u64();
            if x >= threshold {
                return x % n;
            }
        }
    }

    pub fn gen_index(&mut self, n: usize) -> usize {
        self.gen_range(n as u64) as usize
    }

    /// In-place Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.gen_index(i + 1);
            items.swap(i, j);
        }
    }

    /// Draws `k` distinct indices from `0..n` without replacement via a
    /// partial Fisher-Yates pass; result order is the draw order.
    pub fn sample_indices(&mut self, n: usize, k: usize) -> Vec<usize> {
        assert!(k <= n, "cannot sample {k} of {n}");
        let mut pool: Vec<usize> = (0..n).collect();
        for i in 0..k {
            let j = i + self.gen_index(n - i);
            pool.swap(i, j);
        }
        pool.truncate(k);
        pool
    }

    /// Same draws as [`sample_indices`](Self::sample_indices) but returned in
    /// ascending order, for callers that treat the result as a set.
    pub fn subset_indices(&mut self, n: usize, k: usize) -> Vec<usize> {
        let mut idx = self.sample_indices(n, k);
        idx.sort_unstable();
        idx
    }
}
