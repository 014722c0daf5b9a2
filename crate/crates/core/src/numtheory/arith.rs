//! Shared modular arithmetic helpers: primality, Jacobi symbols, CRT, unit sampling.

use num_bigint::{BigUint, RandBigInt};
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::Rng;

const MR_ROUNDS: usize = 32;

const SMALL_PRIMES: [u32; 15] = [3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// Miller-Rabin with random bases drawn from `rng`.
pub fn is_probable_prime<R: Rng + ?Sized>(n: &BigUint, rng: &mut R) -> bool {
    let two = BigUint::from(2u32);
    if *n < two {
        return false;
    }
    for &sp in &SMALL_PRIMES {
        let sp = BigUint::from(sp);
        if *n == sp {
            return true;
        }
        if (n % &sp).is_zero() {
            return false;
        }
    }
    if n.is_even() {
        return *n == two;
    }
    let n_minus_one = n - 1u32;
    let mut d = n_minus_one.clone();
    let mut s = 0u32;
    while d.is_even() {
        d >>= 1;
        s += 1;
    }
    'witness: for _ in 0..MR_ROUNDS {
        let a = rng.gen_biguint_range(&two, &n_minus_one);
        let mut x = a.modpow(&d, n);
        if x.is_one() || x == n_minus_one {
            continue;
        }
        for _ in 1..s {
            x = x.modpow(&two, n);
            if x == n_minus_one {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Uniform prime with exactly `bits` bits satisfying `accept`.
pub fn random_prime<R, F>(bits: u64, rng: &mut R, accept: F) -> BigUint
where
    R: Rng + ?Sized,
    F: Fn(&BigUint) -> bool,
{
    assert!(bits >= 3, "prime size too small");
    loop {
        let mut candidate = rng.gen_biguint(bits);
        candidate.set_bit(bits - 1, true);
        candidate.set_bit(0, true);
        if accept(&candidate) && is_probable_prime(&candidate, rng) {
            return candidate;
        }
    }
}

/// Jacobi symbol (a/n) for odd n > 0.
pub fn jacobi(a: &BigUint, n: &BigUint) -> i8 {
    assert!(n.is_odd(), "Jacobi symbol needs an odd modulus");
    let mut a = a % n;
    let mut n = n.clone();
    let mut result = 1i8;
    while !a.is_zero() {
        while a.is_even() {
            a >>= 1;
            let r = (&n % 8u32).to_u32_digits().first().copied().unwrap_or(0);
            if r == 3 || r == 5 {
                result = -result;
            }
        }
        std::mem::swap(&mut a, &mut n);
        let a4 = (&a % 4u32).to_u32_digits().first().copied().unwrap_or(0);
        let n4 = (&n % 4u32).to_u32_digits().first().copied().unwrap_or(0);
        if a4 == 3 && n4 == 3 {
            result = -result;
        }
        a %= &n;
    }
    if n.is_one() {
        result
    } else {
        0
    }
}

/// Whether `a` is a nonzero quadratic residue modulo the odd prime `p`.
pub fn is_qr_mod_prime(a: &BigUint, p: &BigUint) -> bool {
    jacobi(a, p) == 1
}

/// Combines residues modulo coprime `p` and `q` into the residue modulo `p*q`.
pub fn crt(rp: &BigUint, p: &BigUint, rq: &BigUint, q: &BigUint) -> BigUint {
    let n = p * q;
    let q_inv = q.modinv(p).expect("CRT moduli must be coprime");
    let p_inv = p.modinv(q).expect("CRT moduli must be coprime");
    (rp * q * q_inv + rq * p * p_inv) % n
}

/// Uniform element of Z_n^*.
pub fn random_unit<R: Rng + ?Sized>(n: &BigUint, rng: &mut R) -> BigUint {
    loop {
        let r = rng.gen_biguint_below(n);
        if !r.is_zero() && r.gcd(n).is_one() {
            return r;
        }
    }
}

pub fn is_unit(a: &BigUint, n: &BigUint) -> bool {
    !a.is_zero() && a < n && a.gcd(n).is_one()
}

/// Integer ceil(log2(n)) for n >= 1.
pub fn ceil_log2(n: &BigUint) -> u64 {
    if n <= &BigUint::one() {
        return 0;
    }
    (n - 1u32).bits()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn big(x: u64) -> BigUint {
        BigUint::from(x)
    }

    #[test]
    fn jacobi_matches_euler_criterion_for_small_primes() {
        for p in [3u64, 5, 7, 11, 13, 17, 19, 23] {
            for a in 1..p {
                let euler = big(a).modpow(&big((p - 1) / 2), &big(p));
                let expected = if euler.is_one() { 1 } else { -1 };
                assert_eq!(jacobi(&big(a), &big(p)), expected, "a={a} p={p}");
            }
        }
    }

    #[test]
    fn jacobi_is_multiplicative_in_modulus() {
        for a in 1..77u64 {
            if a % 7 == 0 || a % 11 == 0 {
                assert_eq!(jacobi(&big(a), &big(77)), 0);
                continue;
            }
            let expected = jacobi(&big(a), &big(7)) * jacobi(&big(a), &big(11));
            assert_eq!(jacobi(&big(a), &big(77)), expected);
        }
    }

    #[test]
    fn primality_on_small_range() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        for n in 0..500u64 {
            let trial = n >= 2 && (2..n).take_while(|d| d * d <= n).all(|d| n % d != 0);
            assert_eq!(is_probable_prime(&big(n), &mut rng), trial, "n={n}");
        }
    }

    #[test]
    fn random_prime_has_requested_size() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        for bits in [4u64, 8, 32, 64] {
            let p = random_prime(bits, &mut rng, |_| true);
            assert_eq!(p.bits(), bits);
        }
    }

    #[test]
    fn crt_recombines() {
        let x = crt(&big(3), &big(7), &big(4), &big(11));
        assert_eq!(x, big(59));
    }

    #[test]
    fn ceil_log2_values() {
        assert_eq!(ceil_log2(&big(1)), 0);
        assert_eq!(ceil_log2(&big(2)), 1);
        assert_eq!(ceil_log2(&big(35)), 6);
        assert_eq!(ceil_log2(&big(64)), 6);
        assert_eq!(ceil_log2(&big(65)), 7);
    }
}
