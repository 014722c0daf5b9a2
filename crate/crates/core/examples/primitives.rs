//! The building blocks on their own: GM xor homomorphism, Paillier addition,
//! Blum-Goldwasser round trip and bounded decoding of a fuzzy commitment.

use biometric_blackbox::coding::{make_sketch, recover_codeword, LinearCode};
use biometric_blackbox::numtheory::{BgKeyPair, GmKeyPair, PaillierKeyPair};
use biometric_blackbox::BitString;
use num_bigint::BigUint;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn main() -> anyhow::Result<()> {
    let mut rng = ChaCha20Rng::seed_from_u64(1);

    let gm = GmKeyPair::generate(32, &mut rng)?;
    let c = gm.public.hom_xor(&gm.public.encrypt(true, &mut rng), &gm.public.encrypt(true, &mut rng))?;
    println!("GM: 1 xor 1 decrypts to {}", gm.decrypt(&c)? as u8);

    let pa = PaillierKeyPair::generate(32, &mut rng)?;
    let sum = pa.public.hom_add(&pa.public.encrypt_u64(40, &mut rng)?, &pa.public.encrypt_u64(2, &mut rng)?)?;
    let scaled = pa.public.scalar_mul(&sum, &BigUint::from(3u8))?;
    println!("Paillier: 3 * (40 + 2) = {}", pa.decrypt(&scaled)?);

    let bg = BgKeyPair::generate(32, &mut rng)?;
    let m = BitString::random(24, &mut rng);
    println!("BG: round trip {}", bg.decrypt(&bg.public.encrypt(&m, &mut rng))? == m);

    let code = LinearCode::standard_16_8();
    let b = BitString::random(16, &mut rng);
    let c = code.random_codeword(&mut rng);
    let sketch = make_sketch(&b, &c)?;
    let mut noisy = b.clone();
    noisy.flip(3);
    noisy.flip(11);
    println!(
        "sketch: two errors decode {}, min distance {}",
        recover_codeword(&code, &sketch, &noisy)? == Some(c),
        code.min_distance()
    );
    Ok(())
}
