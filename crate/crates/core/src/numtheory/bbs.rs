//! Blum–Blum–Shub generator and Blum–Goldwasser stream encryption.

use num_bigint::BigUint;
use num_traits::One;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::arith::{crt, is_qr_mod_prime, is_unit, random_prime, random_unit};
use crate::bits::BitString;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BbsState {
    #[serde(with = "super::decimal")]
    pub modulus: BigUint,
    #[serde(with = "super::decimal")]
    pub state: BigUint,
}

impl BbsState {
    pub fn new(modulus: BigUint, state: BigUint) -> Self {
        BbsState { modulus, state }
    }

    /// State `seed^2 mod N`, a residue by construction.
    pub fn from_seed(modulus: BigUint, seed: &BigUint) -> Self {
        let state = (seed * seed) % &modulus;
        BbsState { modulus, state }
    }

    pub fn random<R: Rng + ?Sized>(modulus: BigUint, rng: &mut R) -> Self {
        let seed = random_unit(&modulus, rng);
        Self::from_seed(modulus, &seed)
    }

    /// Advances in place and returns `len` bits.
    pub fn next_bits(&mut self, len: usize) -> BitString {
        let (bits, next) = bbs_stream(self, len);
        *self = next;
        bits
    }
}

/// Squares the state `len` times, emitting the low bit of each new state.
pub fn bbs_stream(state: &BbsState, len: usize) -> (BitString, BbsState) {
    let mut x = state.state.clone();
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        x = (&x * &x) % &state.modulus;
        out.push(x.bit(0));
    }
    (BitString::from_bits(out), BbsState::new(state.modulus.clone(), x))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BgPublicKey {
    #[serde(with = "super::decimal")]
    pub modulus: BigUint,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BgKeyPair {
    pub public: BgPublicKey,
    #[serde(with = "super::decimal")]
    p: BigUint,
    #[serde(with = "super::decimal")]
    q: BigUint,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BgCiphertext {
    pub masked: BitString,
    #[serde(with = "super::decimal")]
    pub x_next: BigUint,
}

fn blum_prime<R: Rng + ?Sized>(bits: u64, rng: &mut R) -> BigUint {
    random_prime(bits, rng, |p| p.bit(0) && p.bit(1))
}

impl BgKeyPair {
    pub fn generate<R: Rng + ?Sized>(prime_bits: u64, rng: &mut R) -> Result<Self> {
        if prime_bits < 4 {
            return Err(Error::InvalidParams("Blum primes need at least 4 bits".into()));
        }
        let p = blum_prime(prime_bits, rng);
        let q = loop {
            let q = blum_prime(prime_bits, rng);
            if q != p {
                break q;
            }
        };
        Self::from_primes(p, q)
    }

    pub fn from_primes(p: BigUint, q: BigUint) -> Result<Self> {
        let three = BigUint::from(3u32);
        let four = BigUint::from(4u32);
        if &p % &four != three || &q % &four != three || p == q {
            return Err(Error::InvalidParams("need distinct primes congruent to 3 mod 4".into()));
        }
        Ok(BgKeyPair { public: BgPublicKey { modulus: &p * &q }, p, q })
    }

    /// Recomputes the `len`-bit keystream that ended in `x_next`.
    pub fn recover_stream(&self, x_next: &BigUint, len: usize) -> Result<BitString> {
        let n = &self.public.modulus;
        if !is_unit(x_next, n) {
            return Err(Error::InvalidCiphertext("state is not a unit".into()));
        }
        if !is_qr_mod_prime(&(x_next % &self.p), &self.p) || !is_qr_mod_prime(&(x_next % &self.q), &self.q) {
            return Err(Error::InvalidCiphertext("state is not a quadratic residue".into()));
        }
        let steps = BigUint::from(len as u64 + 1);
        let root = |prime: &BigUint| {
            let one = BigUint::one();
            let e = ((prime + &one) >> 2u32).modpow(&steps, &(prime - &one));
            (x_next % prime).modpow(&e, prime)
        };
        let x0 = crt(&root(&self.p), &self.p, &root(&self.q), &self.q);
        Ok(bbs_stream(&BbsState::new(n.clone(), x0), len).0)
    }

    pub fn decrypt(&self, c: &BgCiphertext) -> Result<BitString> {
        let stream = self.recover_stream(&c.x_next, c.masked.len())?;
        c.masked.xor(&stream)
    }

    pub fn primes(&self) -> (&BigUint, &BigUint) {
        (&self.p, &self.q)
    }
}

impl BgPublicKey {
    pub fn encrypt<R: Rng + ?Sized>(&self, m: &BitString, rng: &mut R) -> BgCiphertext {
        let seed = BbsState::random(self.modulus.clone(), rng);
        self.encrypt_from(m, &seed).0
    }

    /// Encrypts under an explicit seed state; also returns the keystream.
    pub fn encrypt_from(&self, m: &BitString, seed: &BbsState) -> (BgCiphertext, BitString) {
        let (stream, last) = bbs_stream(seed, m.len());
        let x_next = (&last.state * &last.state) % &self.modulus;
        let masked = m ^ &stream;
        (BgCiphertext { masked, x_next }, stream)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn toy_stream_values() {
        let seed = BbsState::from_seed(77u32.into(), &3u32.into());
        assert_eq!(seed.state, BigUint::from(9u32));
        let (bits, last) = bbs_stream(&seed, 3);
        assert_eq!(bits.to_string(), "001");
        assert_eq!(last.state, BigUint::from(25u32));
        let (empty, same) = bbs_stream(&seed, 0);
        assert!(empty.is_empty());
        assert_eq!(same, seed);
    }

    #[test]
    fn toy_decryption_recovers_stream() {
        let kp = BgKeyPair::from_primes(7u32.into(), 11u32.into()).unwrap();
        let seed = BbsState::from_seed(77u32.into(), &3u32.into());
        let m: BitString = "101".parse().unwrap();
        let (ct, stream) = kp.public.encrypt_from(&m, &seed);
        assert_eq!(stream.to_string(), "001");
        // 25^2 mod 77
        assert_eq!(ct.x_next, BigUint::from(9u32));
        assert_eq!(kp.recover_stream(&ct.x_next, 3).unwrap(), stream);
        assert_eq!(kp.decrypt(&ct).unwrap(), m);
    }

    #[test]
    fn rejects_non_residue_state() {
        let kp = BgKeyPair::from_primes(7u32.into(), 11u32.into()).unwrap();
        let ct = BgCiphertext { masked: BitString::zeros(4), x_next: 6u32.into() };
        assert!(kp.decrypt(&ct).is_err());
        assert!(BgKeyPair::from_primes(5u32.into(), 11u32.into()).is_err());
    }

    #[test]
    fn round_trips_and_zero_message() {
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        let kp = BgKeyPair::generate(32, &mut rng).unwrap();
        for _ in 0..100 {
            let m = BitString::random(64, &mut rng);
            let ct = kp.public.encrypt(&m, &mut rng);
            assert_eq!(kp.decrypt(&ct).unwrap(), m);
        }
        let seed = BbsState::random(kp.public.modulus.clone(), &mut rng);
        let (ct, stream) = kp.public.encrypt_from(&BitString::zeros(40), &seed);
        assert_eq!(ct.masked, stream);
        assert_eq!(bbs_stream(&seed, 40).0, stream);
    }
}
