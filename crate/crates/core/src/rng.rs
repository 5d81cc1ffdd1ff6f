//! Seeded random streams that split deterministically by index, so parallel
//! replicates do not depend on the number of workers.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    inner: ChaCha8Rng,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self { seed, inner: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent child stream number `index`. Depends only on the seed of
    /// this stream, not on how much of it has been consumed.
    pub fn split(&self, index: u64) -> Self {
        Self::new(splitmix64(splitmix64(self.seed) ^ splitmix64(index.wrapping_add(0x5851_F42D_4C95_7F2D))))
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn reproducible() {
        let a: Vec<u64> = (0..4).map(|_| 0).scan(RngStream::new(7), |r, _: u64| Some(r.next_u64())).collect();
        let b: Vec<u64> = (0..4).map(|_| 0).scan(RngStream::new(7), |r, _: u64| Some(r.next_u64())).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn split_ignores_consumption() {
        let mut master = RngStream::new(11);
        let before = master.split(3).random::<u64>();
        master.next_u64();
        assert_eq!(master.split(3).random::<u64>(), before);
        assert_ne!(master.split(4).random::<u64>(), before);
    }
}
