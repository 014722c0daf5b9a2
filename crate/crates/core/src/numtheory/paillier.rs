//! Paillier encryption with generator `g = n + 1`.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::One;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::arith::{is_unit, random_prime, random_unit};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PaillierPublicKey {
    #[serde(with = "super::decimal")]
    pub n: BigUint,
    #[serde(with = "super::decimal")]
    pub n_squared: BigUint,
    #[serde(with = "super::decimal")]
    pub g: BigUint,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PaillierKeyPair {
    pub public: PaillierPublicKey,
    #[serde(with = "super::decimal")]
    lambda: BigUint,
    #[serde(with = "super::decimal")]
    mu: BigUint,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PaillierCiphertext(#[serde(with = "super::decimal")] pub BigUint);

impl PaillierKeyPair {
    pub fn generate<R: Rng + ?Sized>(prime_bits: u64, rng: &mut R) -> Result<Self> {
        if prime_bits < 4 {
            return Err(Error::InvalidParams("Paillier primes need at least 4 bits".into()));
        }
        loop {
            let p = random_prime(prime_bits, rng, |_| true);
            let q = random_prime(prime_bits, rng, |_| true);
            if let Ok(kp) = Self::from_primes(p, q) {
                return Ok(kp);
            }
        }
    }

    pub fn from_primes(p: BigUint, q: BigUint) -> Result<Self> {
        if p == q {
            return Err(Error::InvalidParams("Paillier primes must be distinct".into()));
        }
        let n = &p * &q;
        let one = BigUint::one();
        let phi = (&p - &one) * (&q - &one);
        if !n.gcd(&phi).is_one() {
            return Err(Error::InvalidParams("gcd(n, phi(n)) must be 1".into()));
        }
        let lambda = (&p - &one).lcm(&(&q - &one));
        // with g = n+1, L(g^lambda mod n^2) = lambda mod n
        let mu = (&lambda % &n)
            .modinv(&n)
            .ok_or_else(|| Error::InvalidParams("lambda not invertible mod n".into()))?;
        let n_squared = &n * &n;
        Ok(PaillierKeyPair {
            public: PaillierPublicKey { g: &n + &one, n, n_squared },
            lambda,
            mu,
        })
    }

    pub fn decrypt(&self, c: &PaillierCiphertext) -> Result<BigUint> {
        let pk = &self.public;
        pk.validate(c)?;
        let u = c.0.modpow(&self.lambda, &pk.n_squared);
        let l = (u - BigUint::one()) / &pk.n;
        Ok((l * &self.mu) % &pk.n)
    }
}

impl PaillierPublicKey {
    pub fn encrypt<R: Rng + ?Sized>(&self, m: &BigUint, rng: &mut R) -> Result<PaillierCiphertext> {
        let r = random_unit(&self.n, rng);
        self.encrypt_with(m, &r)
    }

    pub fn encrypt_u64<R: Rng + ?Sized>(&self, m: u64, rng: &mut R) -> Result<PaillierCiphertext> {
        self.encrypt(&BigUint::from(m), rng)
    }

    pub fn encrypt_with(&self, m: &BigUint, r: &BigUint) -> Result<PaillierCiphertext> {
        if m >= &self.n {
            return Err(Error::InvalidParams("plaintext outside Z_n".into()));
        }
        // (n+1)^m = 1 + m n mod n^2
        let gm = (BigUint::one() + m * &self.n) % &self.n_squared;
        let rn = r.modpow(&self.n, &self.n_squared);
        Ok(PaillierCiphertext((gm * rn) % &self.n_squared))
    }

    pub fn validate(&self, c: &PaillierCiphertext) -> Result<()> {
        if !is_unit(&c.0, &self.n_squared) {
            return Err(Error::InvalidCiphertext("not in Z_{n^2}*".into()));
        }
        Ok(())
    }

    pub fn is_valid(&self, c: &PaillierCiphertext) -> bool {
        self.validate(c).is_ok()
    }

    pub fn hom_add(&self, a: &PaillierCiphertext, b: &PaillierCiphertext) -> Result<PaillierCiphertext> {
        self.validate(a)?;
        self.validate(b)?;
        Ok(PaillierCiphertext((&a.0 * &b.0) % &self.n_squared))
    }

    pub fn scalar_mul(&self, c: &PaillierCiphertext, s: &BigUint) -> Result<PaillierCiphertext> {
        self.validate(c)?;
        Ok(PaillierCiphertext(c.0.modpow(s, &self.n_squared)))
    }

    pub fn rerandomize<R: Rng + ?Sized>(&self, c: &PaillierCiphertext, rng: &mut R) -> PaillierCiphertext {
        let r = random_unit(&self.n, rng);
        PaillierCiphertext((&c.0 * r.modpow(&self.n, &self.n_squared)) % &self.n_squared)
    }

    /// Deterministic encryption of zero (`g^0 * 1^n = 1`).
    pub fn trivial_zero() -> PaillierCiphertext {
        PaillierCiphertext(BigUint::one())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn toy() -> PaillierKeyPair {
        PaillierKeyPair::from_primes(5u32.into(), 7u32.into()).unwrap()
    }

    #[test]
    fn toy_modulus_and_exhaustive_round_trip() {
        let kp = toy();
        assert_eq!(kp.public.n, BigUint::from(35u32));
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        for m in 0u64..35 {
            let c = kp.public.encrypt_u64(m, &mut rng).unwrap();
            assert_eq!(kp.decrypt(&c).unwrap(), BigUint::from(m));
        }
        assert!(kp.public.encrypt_u64(35, &mut rng).is_err());
    }

    #[test]
    fn toy_homomorphisms() {
        let kp = toy();
        let pk = &kp.public;
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let a = pk.encrypt_u64(10, &mut rng).unwrap();
        let b = pk.encrypt_u64(20, &mut rng).unwrap();
        assert_eq!(kp.decrypt(&pk.hom_add(&a, &b).unwrap()).unwrap(), BigUint::from(30u32));
        let two = pk.scalar_mul(&b, &BigUint::from(2u32)).unwrap();
        assert_eq!(kp.decrypt(&two).unwrap(), BigUint::from(5u32));
        let zero = pk.scalar_mul(&b, &BigUint::from(0u32)).unwrap();
        assert_eq!(kp.decrypt(&zero).unwrap(), BigUint::from(0u32));
        let again = pk.encrypt_u64(10, &mut rng).unwrap();
        assert_ne!(a, again);
        assert_eq!(kp.decrypt(&PaillierPublicKey::trivial_zero()).unwrap(), BigUint::from(0u32));
    }

    #[test]
    fn decrypt_rejects_non_units() {
        let kp = toy();
        assert!(kp.decrypt(&PaillierCiphertext(BigUint::from(0u32))).is_err());
        assert!(kp.decrypt(&PaillierCiphertext(BigUint::from(5u32))).is_err());
        assert!(kp.decrypt(&PaillierCiphertext(BigUint::from(1225u32))).is_err());
    }

    #[test]
    fn keygen_is_deterministic() {
        let a = PaillierKeyPair::generate(32, &mut ChaCha20Rng::seed_from_u64(5)).unwrap();
        let b = PaillierKeyPair::generate(32, &mut ChaCha20Rng::seed_from_u64(5)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.public.g, &a.public.n + 1u32);
        let json = serde_json::to_string(&a).unwrap();
        let back: PaillierKeyPair = serde_json::from_str(&json).unwrap();
        assert_eq!(back, a);
    }
}
