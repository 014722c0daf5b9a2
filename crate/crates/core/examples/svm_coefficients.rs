//! The authentication server recovers every SVM coefficient by binary search,
//! pitting an encrypted probe against the unknown class score.

use biometric_blackbox::attack::svm::{queries_per_value, server_learns_coefficients};
use biometric_blackbox::entity::{BlackboxSystem, Flow};
use biometric_blackbox::protocol::{SvmParams, SvmProtocol};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn main() -> anyhow::Result<()> {
    let params = SvmParams { classes: 3, features: 4, ..Default::default() };
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    let proto = SvmProtocol::setup(&params, &mut rng)?;
    let per_value = queries_per_value(&proto.public_key().n);
    let mut sys = BlackboxSystem::new(proto, "as".parse()?, 5);

    let beta = server_learns_coefficients(&mut sys.adversary())?;
    let truth = sys.escrow().beta();
    for (j, row) in beta.iter().enumerate() {
        let cells: Vec<String> = row.iter().map(|b| b.to_string()).collect();
        println!("class {j}: [{}]", cells.join(", "));
    }
    println!("exact: {}", beta == truth);
    let queries = sys.attack_ledger().get(Flow::F3);
    println!("{queries} matcher queries for {} values, at most {per_value} each", 3 * 4);
    Ok(())
}
