//! Adversarial strategies against the blackbox systems.
//!
//! Each attack drives an [`Adversary`](crate::entity::Adversary) and returns what
//! it recovered; checking against ground truth is the caller's job.

pub mod center;
pub mod far;
pub mod gm;
pub mod report;
pub mod scenario;
pub mod stoianov;
pub mod svm;
pub mod trace;

pub use report::{query_counts, AttackReport, Outcome};

use crate::entity::{Flow, Message, Payload, Reply};
use crate::error::{Error, Result};

/// Accepted reply or an attack error naming the rejection.
pub(crate) fn expect_accepted(reply: Reply) -> Result<Payload> {
    match reply {
        Reply::Accepted(p) => Ok(p),
        Reply::Rejected(r) => Err(Error::Attack(format!("blackbox rejected a query: {:?} {}", r.reason, r.detail))),
    }
}

pub(crate) fn verdict(payload: &Payload) -> Result<bool> {
    match payload {
        Payload::Verdict { ok } => Ok(*ok),
        Payload::Feedback { decision } => Ok(decision.is_ok()),
        other => Err(Error::Attack(format!("expected a decision, got {other:?}"))),
    }
}

/// Last message of a flow in a slice of observations.
pub(crate) fn last_of(messages: &[Message], flow: Flow) -> Option<&Message> {
    messages.iter().rev().find(|m| m.flow == flow)
}

/// Lets genuine traffic through until a matching message of `flow` shows up in
/// the attacker's observations. `None` once the traffic budget is spent.
pub(crate) fn wait_for_flow<P: crate::entity::Protocol>(
    adv: &mut crate::entity::Adversary<'_, P>,
    flow: Flow,
    accept: impl Fn(&Message) -> bool,
) -> Result<Option<Message>> {
    let mut seen = adv.observed().len();
    loop {
        if adv.wait_for_traffic()?.is_none() {
            return Ok(None);
        }
        let fresh = &adv.observed()[seen..];
        if let Some(m) = fresh.iter().find(|m| m.flow == flow && accept(m)) {
            return Ok(Some(m.clone()));
        }
        seen = adv.observed().len();
    }
}
