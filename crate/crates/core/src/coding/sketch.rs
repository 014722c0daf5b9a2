use serde::{Deserialize, Serialize};

use super::LinearCode;
use crate::bits::BitString;
use crate::error::Result;

/// Code offset `b ⊕ c`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sketch(pub BitString);

pub fn make_sketch(b: &BitString, c: &BitString) -> Result<Sketch> {
    Ok(Sketch(b.xor(c)?))
}

pub fn recover_codeword(code: &LinearCode, s: &Sketch, b_prime: &BitString) -> Result<Option<BitString>> {
    code.decode_bounded(&s.0.xor(b_prime)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numtheory::hash_commit;
    use rand::seq::index::sample;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn radius_boundary_on_16_8() {
        let code = LinearCode::standard_16_8();
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        for _ in 0..200 {
            let b = BitString::random(16, &mut rng);
            let c = code.random_codeword(&mut rng);
            let s = make_sketch(&b, &c).unwrap();
            assert_eq!(recover_codeword(&code, &s, &b).unwrap(), Some(c.clone()));

            let at = BitString::with_ones(16, &sample(&mut rng, 16, 2).into_vec());
            let ok = recover_codeword(&code, &s, &(&b ^ &at)).unwrap();
            assert_eq!(ok.as_ref(), Some(&c));
            assert_eq!(ok.map(|x| hash_commit(&x)), Some(hash_commit(&c)));

            let over = BitString::with_ones(16, &sample(&mut rng, 16, 3).into_vec());
            let bad = recover_codeword(&code, &s, &(&b ^ &over)).unwrap();
            assert_ne!(bad.as_ref(), Some(&c));
            assert_ne!(bad.map(|x| hash_commit(&x)), Some(hash_commit(&c)));
        }
    }
}
