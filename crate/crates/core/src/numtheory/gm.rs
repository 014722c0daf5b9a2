//! Goldwasser–Micali bit encryption.
//!
//! A ciphertext of bit `m` is `r^2 * y^m mod N` for a random unit `r`, where `y` is a
//! pseudo-square (non-residue modulo both prime factors). Multiplying two ciphertexts
//! XORs their plaintexts.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::One;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::arith::{is_qr_mod_prime, is_unit, jacobi, random_prime, random_unit};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GmPublicKey {
    #[serde(with = "super::decimal")]
    pub modulus: BigUint,
    #[serde(with = "super::decimal")]
    pub pseudo_square: BigUint,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GmKeyPair {
    pub public: GmPublicKey,
    #[serde(with = "super::decimal")]
    p: BigUint,
    #[serde(with = "super::decimal")]
    q: BigUint,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GmCiphertext(#[serde(with = "super::decimal")] pub BigUint);

impl GmKeyPair {
    /// Fresh key pair with two distinct `prime_bits`-bit primes.
    pub fn generate<R: Rng + ?Sized>(prime_bits: u64, rng: &mut R) -> Result<Self> {
        if prime_bits < 4 {
            return Err(Error::InvalidParams("GM primes need at least 4 bits".into()));
        }
        let p = random_prime(prime_bits, rng, |_| true);
        let q = loop {
            let q = random_prime(prime_bits, rng, |_| true);
            if q != p {
                break q;
            }
        };
        let modulus = &p * &q;
        let pseudo_square = loop {
            let y = random_unit(&modulus, rng);
            if !is_qr_mod_prime(&y, &p) && !is_qr_mod_prime(&y, &q) {
                break y;
            }
        };
        Self::from_parts(p, q, pseudo_square)
    }

    /// Builds a key pair from explicit material, checking the pseudo-square condition.
    pub fn from_parts(p: BigUint, q: BigUint, pseudo_square: BigUint) -> Result<Self> {
        if p == q {
            return Err(Error::InvalidParams("GM primes must be distinct".into()));
        }
        if p.is_even() || q.is_even() {
            return Err(Error::InvalidParams("GM primes must be odd".into()));
        }
        let y = &pseudo_square % &p;
        let y_q = &pseudo_square % &q;
        if is_qr_mod_prime(&y, &p) || is_qr_mod_prime(&y_q, &q) || jacobi(&pseudo_square, &(&p * &q)) != 1 {
            return Err(Error::InvalidParams(
                "pseudo-square must be a non-residue modulo both primes".into(),
            ));
        }
        Ok(GmKeyPair {
            public: GmPublicKey { modulus: &p * &q, pseudo_square },
            p,
            q,
        })
    }

    pub fn decrypt(&self, c: &GmCiphertext) -> Result<bool> {
        self.public.validate(c)?;
        Ok(!is_qr_mod_prime(&(&c.0 % &self.p), &self.p))
    }

    pub fn primes(&self) -> (&BigUint, &BigUint) {
        (&self.p, &self.q)
    }
}

impl GmPublicKey {
    pub fn encrypt<R: Rng + ?Sized>(&self, m: bool, rng: &mut R) -> GmCiphertext {
        let r = random_unit(&self.modulus, rng);
        self.encrypt_with(m, &r)
    }

    /// Encryption with caller-chosen randomness `r`.
    pub fn encrypt_with(&self, m: bool, r: &BigUint) -> GmCiphertext {
        let mut c = (r * r) % &self.modulus;
        if m {
            c = (c * &self.pseudo_square) % &self.modulus;
        }
        GmCiphertext(c)
    }

    /// Structural validity: a unit modulo N with Jacobi symbol +1.
    pub fn validate(&self, c: &GmCiphertext) -> Result<()> {
        if !is_unit(&c.0, &self.modulus) {
            return Err(Error::InvalidCiphertext("not a unit modulo N".into()));
        }
        if jacobi(&c.0, &self.modulus) != 1 {
            return Err(Error::InvalidCiphertext("Jacobi symbol is not +1".into()));
        }
        Ok(())
    }

    pub fn is_valid(&self, c: &GmCiphertext) -> bool {
        self.validate(c).is_ok()
    }

    /// Ciphertext product; decrypts to the XOR of the plaintexts.
    pub fn hom_xor(&self, a: &GmCiphertext, b: &GmCiphertext) -> Result<GmCiphertext> {
        self.validate(a)?;
        self.validate(b)?;
        Ok(GmCiphertext((&a.0 * &b.0) % &self.modulus))
    }

    pub fn rerandomize<R: Rng + ?Sized>(&self, c: &GmCiphertext, rng: &mut R) -> GmCiphertext {
        let r = random_unit(&self.modulus, rng);
        self.rerandomize_with(c, &r)
    }

    pub fn rerandomize_with(&self, c: &GmCiphertext, r: &BigUint) -> GmCiphertext {
        GmCiphertext((&c.0 * r * r) % &self.modulus)
    }

    /// `c^0 = 1`, a valid encryption of zero derivable from any ciphertext.
    pub fn trivial_zero() -> GmCiphertext {
        GmCiphertext(BigUint::one())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn toy() -> GmKeyPair {
        GmKeyPair::from_parts(7u32.into(), 11u32.into(), 6u32.into()).unwrap()
    }

    fn ct(x: u32) -> GmCiphertext {
        GmCiphertext(x.into())
    }

    #[test]
    fn toy_fixture_is_valid() {
        let kp = toy();
        assert_eq!(kp.public.modulus, BigUint::from(77u32));
        assert_eq!(jacobi(&kp.public.pseudo_square, &kp.public.modulus), 1);
    }

    #[test]
    fn toy_fixture_rejects_residue() {
        // 4 = 2^2 is a residue mod both primes
        assert!(GmKeyPair::from_parts(7u32.into(), 11u32.into(), 4u32.into()).is_err());
        assert!(GmKeyPair::from_parts(7u32.into(), 7u32.into(), 6u32.into()).is_err());
    }

    #[test]
    fn toy_encryption_values() {
        let kp = toy();
        let three = BigUint::from(3u32);
        assert_eq!(kp.public.encrypt_with(false, &three), ct(9));
        assert_eq!(kp.public.encrypt_with(true, &three), ct(54));
        assert!(!kp.decrypt(&ct(9)).unwrap());
        assert!(kp.decrypt(&ct(54)).unwrap());
        assert!(!kp.decrypt(&ct(1)).unwrap());
    }

    #[test]
    fn toy_xor_and_rerandomize() {
        let kp = toy();
        let prod = kp.public.hom_xor(&ct(9), &ct(54)).unwrap();
        assert_eq!(prod, ct(24));
        assert!(kp.decrypt(&prod).unwrap());
        let rr = kp.public.rerandomize_with(&ct(9), &BigUint::from(2u32));
        assert_eq!(rr, ct(36));
        assert!(!kp.decrypt(&rr).unwrap());
    }

    #[test]
    fn decrypt_rejects_jacobi_minus_one() {
        let kp = toy();
        // 2 is a residue mod 7 but not mod 11: Jacobi(2, 77) = -1
        assert_eq!(jacobi(&BigUint::from(2u32), &BigUint::from(77u32)), -1);
        assert!(matches!(kp.decrypt(&ct(2)), Err(Error::InvalidCiphertext(_))));
        assert!(kp.decrypt(&ct(7)).is_err());
    }

    #[test]
    fn keygen_is_deterministic_and_valid() {
        let a = GmKeyPair::generate(32, &mut ChaCha20Rng::seed_from_u64(9)).unwrap();
        let b = GmKeyPair::generate(32, &mut ChaCha20Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
        assert_eq!(jacobi(&a.public.pseudo_square, &a.public.modulus), 1);
        assert!(GmKeyPair::generate(3, &mut ChaCha20Rng::seed_from_u64(9)).is_err());
    }

    #[test]
    fn round_trip_and_rerandomization_preserve_bits() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let kp = GmKeyPair::generate(32, &mut rng).unwrap();
        for m in [false, true] {
            let c = kp.public.encrypt(m, &mut rng);
            assert_eq!(kp.decrypt(&c).unwrap(), m);
            let r = kp.public.rerandomize(&c, &mut rng);
            assert_ne!(r, c);
            assert_eq!(kp.decrypt(&r).unwrap(), m);
        }
        assert!(!kp.decrypt(&GmPublicKey::trivial_zero()).unwrap());
    }

    #[test]
    fn rerandomizations_are_distinct() {
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let kp = GmKeyPair::generate(256, &mut rng).unwrap();
        let c = kp.public.encrypt(true, &mut rng);
        let all: std::collections::HashSet<_> =
            (0..100).map(|_| kp.public.rerandomize(&c, &mut rng)).collect();
        assert_eq!(all.len(), 100);

        let small_key = GmKeyPair::generate(32, &mut rng).unwrap();
        let c = small_key.public.encrypt(false, &mut rng);
        let some: std::collections::HashSet<_> =
            (0..100).map(|_| small_key.public.rerandomize(&c, &mut rng)).collect();
        assert!(some.len() >= 99);

        let toy = toy();
        let small: std::collections::HashSet<_> =
            (0..100).map(|_| toy.public.rerandomize(&ct(9), &mut rng)).collect();
        // only 15 residues exist modulo 77
        assert!(small.len() <= 15);
    }

    #[test]
    fn key_pair_json_round_trip() {
        let kp = toy();
        let json = serde_json::to_string(&kp).unwrap();
        assert!(json.contains("\"77\""));
        let back: GmKeyPair = serde_json::from_str(&json).unwrap();
        assert_eq!(back, kp);
    }
}
