//! A malicious authentication server learns an encrypted GM reference bit by bit,
//! using nothing but the matcher's accept/reject answers.

use biometric_blackbox::attack::gm;
use biometric_blackbox::entity::BlackboxSystem;
use biometric_blackbox::protocol::{GmParams, GmProtocol};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn main() -> anyhow::Result<()> {
    let mut rng = ChaCha20Rng::seed_from_u64(7);
    let proto = GmProtocol::setup(&GmParams::default(), &mut rng)?;
    let mut sys = BlackboxSystem::new(proto, "as".parse()?, 7);

    // disguised queries carry up to t encryptions of one and are shuffled
    let learned = gm::server_learns_reference(&mut sys.adversary(), 0, true)?;

    let truth = sys.escrow().reference(0)?;
    println!("recovered {}", learned);
    println!("exact     {}", &learned == truth);
    for (channel, n) in sys.attack_ledger().entries() {
        println!("  {channel}: {n}");
    }
    Ok(())
}
