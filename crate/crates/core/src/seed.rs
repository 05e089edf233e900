//! Seed derivation for reproducible parallel sampling.
//!
//! Every random draw in the pipeline gets its own generator, seeded from a
//! digest of the master seed and a tuple of identifying parts. The digest is
//! stable across platforms and releases, so outputs do not depend on the
//! order in which parallel tasks are scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// The generator used throughout the crate.
pub type Rng = ChaCha8Rng;

/// A component of a derived seed.
#[derive(Debug, Clone, Copy)]
pub enum SeedPart<'a> {
    Str(&'a str),
    Int(u64),
}

impl<'a> From<&'a str> for SeedPart<'a> {
    fn from(s: &'a str) -> Self {
        SeedPart::Str(s)
    }
}

impl From<u64> for SeedPart<'_> {
    fn from(v: u64) -> Self {
        SeedPart::Int(v)
    }
}

impl From<usize> for SeedPart<'_> {
    fn from(v: usize) -> Self {
        SeedPart::Int(v as u64)
    }
}

/// Hash `(seed, parts...)` into a new 64-bit seed.
pub fn derive_seed(seed: u64, parts: &[SeedPart<'_>]) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    for part in parts {
        match part {
            SeedPart::Str(s) => {
                h.update([0u8]);
                h.update((s.len() as u64).to_le_bytes());
                h.update(s.as_bytes());
            }
            SeedPart::Int(v) => {
                h.update([1u8]);
                h.update(v.to_le_bytes());
            }
        }
    }
    let digest = h.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

/// A generator seeded directly from `seed`.
pub fn rng_from_seed(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivation_is_stable_and_sensitive() {
        let a = derive_seed(7, &["net".into(), "gnm".into(), 3usize.into()]);
        let b = derive_seed(7, &["net".into(), "gnm".into(), 3usize.into()]);
        let c = derive_seed(7, &["net".into(), "gnm".into(), 4usize.into()]);
        let d = derive_seed(8, &["net".into(), "gnm".into(), 3usize.into()]);
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
        // string/int boundaries are unambiguous
        assert_ne!(
            derive_seed(1, &["ab".into(), "c".into()]),
            derive_seed(1, &["a".into(), "bc".into()])
        );
    }
}
