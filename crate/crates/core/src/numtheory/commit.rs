//! Hash commitment over bit strings.

use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest as _, Sha256};

use crate::bits::BitString;

#[derive(Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Digest(pub [u8; 32]);

impl Digest {
    pub const BITS: usize = 256;

    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        self.0.iter().map(|b| format!("{b:02x}")).collect()
    }
}

impl fmt::Display for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl fmt::Debug for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digest({})", self.to_hex())
    }
}

/// SHA-256 of the bit length followed by the packed bits.
pub fn hash_commit(data: &BitString) -> Digest {
    let mut h = Sha256::new();
    h.update((data.len() as u64).to_be_bytes());
    h.update(data.to_bytes());
    Digest(h.finalize().into())
}

/// Digest of arbitrary bytes, used for transcript payload fingerprints.
pub fn hash_bytes(data: &[u8]) -> Digest {
    Digest(Sha256::digest(data).into())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn deterministic_and_length_aware() {
        let c: BitString = "10110".parse().unwrap();
        assert_eq!(hash_commit(&c), hash_commit(&c.clone()));
        assert_eq!(hash_commit(&c).0.len() * 8, Digest::BITS);
        // same packed bytes, different lengths
        let a: BitString = "1".parse().unwrap();
        let b: BitString = "10".parse().unwrap();
        assert_ne!(hash_commit(&a), hash_commit(&b));
    }

    #[test]
    fn flipped_inputs_hash_differently() {
        let mut rng = ChaCha20Rng::seed_from_u64(8);
        let c = BitString::random(16, &mut rng);
        let base = hash_commit(&c);
        for _ in 0..1000 {
            let e = loop {
                let e = BitString::random(16, &mut rng);
                if e.weight() > 0 {
                    break e;
                }
            };
            assert_ne!(hash_commit(&(&c ^ &e)), base);
        }
    }
}
