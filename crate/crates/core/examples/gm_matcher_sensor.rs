//! Matcher and sensor collude: the sensor presents the zero word and toggles one
//! position per query while the matcher watches the weight of b xor b'.

use biometric_blackbox::attack::gm;
use biometric_blackbox::entity::BlackboxSystem;
use biometric_blackbox::protocol::{GmParams, GmProtocol};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn main() -> anyhow::Result<()> {
    let params = GmParams { bits: 32, threshold: 5, ..Default::default() };
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    let proto = GmProtocol::setup(&params, &mut rng)?;
    let mut sys = BlackboxSystem::new(proto, "m+s".parse()?, 3);

    let learned = gm::matcher_sensor_learns_reference(&mut sys.adversary(), 1)?;
    println!("exact: {}", &learned == sys.escrow().reference(1)?);
    println!("sensor queries: {}", sys.attack_ledger().get(biometric_blackbox::entity::Flow::F1));
    Ok(())
}
