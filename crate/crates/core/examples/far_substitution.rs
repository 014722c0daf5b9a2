//! FAR attack: the server waits for one genuine accept, then replaces positions
//! of that sample with known bits and reads the reference off the decisions.

use biometric_blackbox::attack::far::{self, server_far_attack, FarOutcome};
use biometric_blackbox::entity::BlackboxSystem;
use biometric_blackbox::protocol::{GmParams, GmProtocol};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn main() -> anyhow::Result<()> {
    let params = GmParams::default();
    let (n, t) = (params.bits, params.threshold);
    let mut over = 0;
    for seed in 0..10 {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let proto = GmProtocol::setup(&params, &mut rng)?;
        let mut sys = BlackboxSystem::new(proto, "as".parse()?, seed);
        sys.set_traffic_budget(100);
        match server_far_attack(&mut sys.adversary())? {
            FarOutcome::Recovered { user, result } => {
                let exact = &result.reference == sys.escrow().reference(user)?;
                over += (result.queries > far::bound(n, t)) as u32;
                println!(
                    "seed {seed}: user {user} exact {exact}, {} queries after {} ticks",
                    result.queries,
                    sys.ticks()
                );
            }
            FarOutcome::Waiting => println!("seed {seed}: no genuine accept within the budget"),
        }
    }
    println!("{over} of 10 runs needed more than n+2t = {}", far::bound(n, t));
    Ok(())
}
