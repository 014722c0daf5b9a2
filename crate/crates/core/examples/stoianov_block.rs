//! The server, helped by the sensor, pushes known errors into a merged query
//! and enumerates one block of b xor b' at a time.

use biometric_blackbox::attack::stoianov::{block_bound, server_block_attack, BlockOutcome};
use biometric_blackbox::coding::LinearCode;
use biometric_blackbox::entity::BlackboxSystem;
use biometric_blackbox::protocol::{StoParams, StoProtocol};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn main() -> anyhow::Result<()> {
    let code = LinearCode::standard_16_8();
    let (n, t_c, l) = (code.length(), code.radius(), 4);
    println!("[{n},{}] code, radius {t_c}, blocks of {l}, bound {}", code.dimension(), block_bound(n, t_c, l));
    for seed in 0..5 {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let proto = StoProtocol::setup(code.clone(), &StoParams::default(), &mut rng)?;
        let mut sys = BlackboxSystem::new(proto, "as+s".parse()?, seed);
        sys.set_traffic_user(Some(0));
        match server_block_attack(&mut sys.adversary(), l)? {
            BlockOutcome::Recovered(r) => {
                let exact = r.reference.as_ref() == Some(sys.escrow().reference(r.index)?);
                println!("seed {seed}: b xor b' = {} ({} queries), b exact {exact}", r.difference, r.queries);
            }
            BlockOutcome::Ambiguous { block, queries } => println!("seed {seed}: block {block} ambiguous after {queries}"),
            BlockOutcome::Waiting => println!("seed {seed}: no genuine traffic"),
        }
    }
    Ok(())
}
