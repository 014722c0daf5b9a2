//! Enrolls a population under each protocol and authenticates every user once.

use biometric_blackbox::attack::scenario::ScenarioParams;
use biometric_blackbox::harness::cmd_demo;
use biometric_blackbox::protocol::ProtocolId;

fn main() -> anyhow::Result<()> {
    let params = ScenarioParams { users: 20, noise_prob: 0.05, ..Default::default() };
    for protocol in ProtocolId::ALL {
        let report = cmd_demo(protocol, &params, 1)?;
        println!("{protocol:<13} ok rate {:.2} over {} users", report.ok_rate, report.users);
        for (flow, n) in &report.flows {
            println!("    {flow:<8} {n}");
        }
    }
    Ok(())
}
