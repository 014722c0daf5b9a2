//! Runs every relevant attacker/goal cell and prints the table per protocol.

use std::collections::BTreeMap;

use biometric_blackbox::attack::scenario::ScenarioParams;
use biometric_blackbox::harness::cmd_sweep;
use biometric_blackbox::protocol::ProtocolId;

fn main() -> anyhow::Result<()> {
    let goals = ["learn-reference", "learn-sample", "trace-identities", "trace-queries"];
    for protocol in ProtocolId::ALL {
        let report = cmd_sweep(&[protocol], &ScenarioParams::default(), 1)?;
        let mut table: BTreeMap<(usize, String), BTreeMap<String, String>> = BTreeMap::new();
        for row in &report.rows {
            let key = (row.attacker.matches('+').count(), row.attacker.clone());
            table.entry(key).or_default().insert(row.goal.clone(), row.outcome.clone());
        }
        println!("\n{protocol}");
        println!("{:<10} {:<12} {:<12} {:<12} {:<12}", "attacker", "learn b", "learn b'", "trace ids", "trace qs");
        for ((_, attacker), cells) in &table {
            let cols: Vec<String> =
                goals.iter().map(|g| format!("{:<12}", cells.get(*g).map_or("-", String::as_str))).collect();
            println!("{attacker:<10} {}", cols.join(" "));
        }
    }
    Ok(())
}
