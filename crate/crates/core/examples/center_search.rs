//! Center search from an accepted sample: flip bits until rejection, then
//! restore and classify each position. Runs once against a plain threshold
//! oracle and once through the GM system with a corrupted server and sensor.

use biometric_blackbox::attack::center::{bound, center_search};
use biometric_blackbox::attack::scenario::{run_scenario, AttackId, ScenarioConfig};
use biometric_blackbox::protocol::ProtocolId;
use biometric_blackbox::BitString;

fn main() -> anyhow::Result<()> {
    let (n, t) = (16, 4);
    let reference = BitString::from_u64(0xb3a5, n);
    // t-1 errors up front and one at the end: the case that needs 2t+n queries
    let mut start = reference.clone();
    for i in [0, 1, 2, n - 1] {
        start.flip(i);
    }
    let mut oracle = |w: &BitString| Ok(w.hamming(&reference)? <= t);
    let r = center_search(&mut oracle, &start, t)?;
    println!("plain oracle: exact {} in {} queries (bound {})", r.reference == reference, r.queries, bound(n, t));

    let mut config = ScenarioConfig::new(ProtocolId::Gm, "as+s".parse()?, "learn-reference".parse()?, 11);
    config.method = Some(AttackId::GmCenterSearch);
    let report = run_scenario(&config)?;
    println!(
        "GM system:    {:?} in {} sensor queries (bound {:?})",
        report.outcome,
        report.queries_of("sensor"),
        report.bound
    );
    Ok(())
}
