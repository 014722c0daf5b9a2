use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::entity::{AttackerSet, Flow, Goal, Ledger};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Outcome {
    Success,
    Fail,
    Unsupported,
    /// no genuine accept arrived within the traffic budget
    Waiting,
    /// the block search could not isolate a unique candidate
    Ambiguous,
}

impl Outcome {
    /// Collapsed form used in sweep tables.
    pub fn cell(self) -> &'static str {
        match self {
            Outcome::Success => "SUCCESS",
            Outcome::Unsupported => "UNSUPPORTED",
            _ => "FAIL",
        }
    }
}

/// Named counters plus the raw per-channel ledger.
pub fn query_counts(ledger: &Ledger) -> BTreeMap<String, u64> {
    let mut out: BTreeMap<String, u64> = ledger.to_map();
    out.insert("sensor".into(), ledger.get(Flow::F1));
    out.insert("database".into(), ledger.get(Flow::G2));
    out.insert("matcher".into(), ledger.get(Flow::F3));
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackReport {
    pub scenario: String,
    pub protocol: String,
    pub attacker: AttackerSet,
    pub goal: Goal,
    /// the attack the catalog chose
    pub method: Option<super::scenario::AttackId>,
    pub outcome: Outcome,
    pub success: bool,
    pub queries: BTreeMap<String, u64>,
    pub bound: Option<u64>,
    pub bound_satisfied: bool,
    pub recovered_digest: Option<String>,
    pub ticks_waited: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    pub seed: u64,
    pub wall_ms: u64,
}

impl AttackReport {
    pub fn queries_of(&self, name: &str) -> u64 {
        self.queries.get(name).copied().unwrap_or(0)
    }

    /// JSON with the timing field zeroed, for determinism checks.
    pub fn canonical_json(&self) -> String {
        let mut c = self.clone();
        c.wall_ms = 0;
        serde_json::to_string_pretty(&c).expect("reports serialize")
    }
}
