//! Linking queries: balanced same/different experiments with attacker-side
//! fingerprints. The Stoianov matcher recognises the user's codeword; the GM
//! matcher sees only a permuted distance and stays near chance.

use biometric_blackbox::attack::trace::{
    accepted_stream, codeword_fingerprint, fixed_weight_stream, trace_experiment, weight_fingerprint,
};
use biometric_blackbox::coding::LinearCode;
use biometric_blackbox::entity::BlackboxSystem;
use biometric_blackbox::protocol::{GmParams, GmProtocol, StoParams, StoProtocol};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn main() -> anyhow::Result<()> {
    let mut rng = ChaCha20Rng::seed_from_u64(4);
    let sto = StoProtocol::setup(LinearCode::standard_16_8(), &StoParams::default(), &mut rng)?;
    let mut sys = BlackboxSystem::new(sto, "m".parse()?, 4);
    let out = trace_experiment(&mut sys, 200, &mut rng, accepted_stream, codeword_fingerprint)?;
    println!("Stoianov matcher: advantage {:.3} ({}/{} correct)", out.advantage, out.correct, out.trials);

    let gm = GmProtocol::setup(&GmParams::default(), &mut rng)?;
    let mut sys = BlackboxSystem::new(gm, "m".parse()?, 4);
    let out = trace_experiment(&mut sys, 200, &mut rng, fixed_weight_stream(3, 9), weight_fingerprint)?;
    println!("GM matcher:       advantage {:.3} ({}/{} correct)", out.advantage, out.correct, out.trials);
    Ok(())
}
