//! Fuzzy-commitment collusions. The matcher holds the keystream, so any partner
//! that adds a known word (sensor) or the stored commitment (database) exposes b.

use biometric_blackbox::attack::stoianov::{matcher_database, matcher_sensor};
use biometric_blackbox::coding::LinearCode;
use biometric_blackbox::entity::{BlackboxSystem, Flow};
use biometric_blackbox::protocol::{StoParams, StoProtocol};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn system(attacker: &str, seed: u64) -> anyhow::Result<BlackboxSystem<StoProtocol>> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let proto = StoProtocol::setup(LinearCode::standard_16_8(), &StoParams::default(), &mut rng)?;
    Ok(BlackboxSystem::new(proto, attacker.parse()?, seed))
}

fn main() -> anyhow::Result<()> {
    let mut sys = system("m+s", 1)?;
    let got = matcher_sensor(&mut sys.adversary(), 0, false)?;
    let truth = sys.escrow().codeword(0)?.xor(sys.escrow().reference(0)?)?;
    println!("M+S: c xor b exact {} after {} sensor query", got.sketch == truth, sys.attack_ledger().get(Flow::F1));

    let mut sys = system("db+m", 2)?;
    sys.set_traffic_user(Some(0));
    let got = matcher_database(&mut sys.adversary(), 0, true)?;
    let exact = got.reference.as_ref() == Some(sys.escrow().reference(0)?);
    println!("M+DB: b exact {exact} after {} ticks of genuine traffic", sys.ticks());
    if let Some((seq, sample)) = got.sample {
        println!("      and the sample of message {seq}: {sample}");
    }
    Ok(())
}
