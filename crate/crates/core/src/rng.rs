//! Seed derivation for reproducible, order-independent random streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used everywhere a seeded stream is needed.
pub type Rng = ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mix a master seed with any number of stream identifiers.
///
/// The result depends on the order of `parts`, so `(seed, a, b)` and
/// `(seed, b, a)` give unrelated streams.
pub fn derive_seed(master: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(splitmix(master), |acc, &p| splitmix(acc ^ splitmix(p)))
}

/// Stable 64-bit FNV-1a hash, used to turn labels into stream identifiers.
pub fn label_hash(label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

pub fn rng_from(master: u64, parts: &[u64]) -> Rng {
    Rng::seed_from_u64(derive_seed(master, parts))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivation_is_order_sensitive_and_stable() {
        assert_eq!(derive_seed(7, &[1, 2]), derive_seed(7, &[1, 2]));
        assert_ne!(derive_seed(7, &[1, 2]), derive_seed(7, &[2, 1]));
        assert_ne!(derive_seed(7, &[1]), derive_seed(8, &[1]));
    }
}
