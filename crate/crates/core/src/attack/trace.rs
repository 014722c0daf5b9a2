//! Linking queries across time.
//!
//! Two authentication streams run behind the blackbox, either by one user or
//! by two. The attacker fingerprints what its entities saw during each stream
//! and guesses SAME when the fingerprints agree.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::entity::{Adversary, BlackboxSystem, Capture, Decision, Flow, Message, Payload, Protocol};
use crate::error::{Error, Result};
use crate::protocol::{GmProtocol, StoProtocol};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceOutcome {
    pub trials: u64,
    pub correct: u64,
    /// |P(correct) - 1/2| * 2
    pub advantage: f64,
}

/// Runs `trials` balanced SAME/DIFFERENT experiments.
///
/// `stream` drives one user's authentication; `fingerprint` sees only the
/// messages the attacker observed during that stream.
pub fn trace_experiment<P, S, F>(
    sys: &mut BlackboxSystem<P>,
    trials: u64,
    rng: &mut impl Rng,
    mut stream: S,
    mut fingerprint: F,
) -> Result<TraceOutcome>
where
    P: Protocol,
    S: FnMut(&mut BlackboxSystem<P>, usize) -> Result<()>,
    F: FnMut(&Adversary<'_, P>, &[Message]) -> Result<Option<String>>,
{
    let users = sys.escrow().users();
    if users.len() < 2 {
        return Err(Error::InvalidParams("tracing needs two enrolled users".into()));
    }
    let mut correct = 0;
    for trial in 0..trials {
        let same = trial % 2 == 0;
        let first = *users.choose(rng).expect("non-empty");
        let second = if same {
            first
        } else {
            *users.iter().filter(|&&u| u != first).collect::<Vec<_>>().choose(rng).copied().expect("two users")
        };
        let mut prints = Vec::with_capacity(2);
        for user in [first, second] {
            let before = sys.adversary().observed().len();
            stream(sys, user)?;
            let adv = sys.adversary();
            let seen = adv.observed()[before..].to_vec();
            prints.push(fingerprint(&adv, &seen)?);
        }
        let guess_same = matches!((&prints[0], &prints[1]), (Some(a), Some(b)) if a == b);
        correct += (guess_same == same) as u64;
    }
    let p = correct as f64 / trials.max(1) as f64;
    Ok(TraceOutcome { trials, correct, advantage: ((p - 0.5).abs() * 2.0).min(1.0) })
}

/// One honest authentication per stream.
pub fn honest_stream<P: Protocol>(sys: &mut BlackboxSystem<P>, user: usize) -> Result<()> {
    sys.run_honest_auth(user, user).map(|_| ())
}

/// Retries fresh captures until one is accepted.
pub fn accepted_stream<P: Protocol>(sys: &mut BlackboxSystem<P>, user: usize) -> Result<()> {
    for _ in 0..64 {
        if sys.run_honest_auth(user, user)?.is_ok() {
            return Ok(());
        }
    }
    Err(Error::Attack(format!("user {user} never accepted")))
}

/// The database sees which record is looked up.
pub fn lookup_fingerprint<P: Protocol>(_: &Adversary<'_, P>, seen: &[Message]) -> Result<Option<String>> {
    Ok(seen.iter().find_map(|m| match m.payload {
        Payload::Lookup { index } if m.flow == Flow::G2 => Some(index.to_string()),
        _ => None,
    }))
}

/// The sensor sees the claimed identity.
pub fn claim_fingerprint<P: Protocol>(_: &Adversary<'_, P>, seen: &[Message]) -> Result<Option<String>> {
    Ok(seen.iter().find_map(|m| match &m.payload {
        Payload::Presentation { claimed, .. } => Some(claimed.to_string()),
        _ => None,
    }))
}

/// In identification mode the server learns who was identified.
pub fn outcome_fingerprint<P: Protocol>(_: &Adversary<'_, P>, seen: &[Message]) -> Result<Option<String>> {
    Ok(seen.iter().find_map(|m| match m.payload {
        Payload::Feedback { decision: Decision::Identified(u) } => Some(u.to_string()),
        _ => None,
    }))
}

/// The matcher decodes the enrolled codeword on every accept.
pub fn codeword_fingerprint(adv: &Adversary<'_, StoProtocol>, seen: &[Message]) -> Result<Option<String>> {
    for m in seen.iter().filter(|m| m.flow == Flow::F3) {
        if let Some(c) = super::stoianov::unmask(adv, m)?.codeword {
            return Ok(Some(c.to_string()));
        }
    }
    Ok(None)
}

/// All a GM matcher learns is the weight of the permuted difference.
pub fn weight_fingerprint(adv: &Adversary<'_, GmProtocol>, seen: &[Message]) -> Result<Option<String>> {
    let keys = adv.state().secret_key.ok_or_else(|| Error::InvalidAttacker("needs the matcher".into()))?;
    for m in seen.iter().filter(|m| m.flow == Flow::F3) {
        if let Payload::GmCombined { cts } = &m.payload {
            let mut w = 0;
            for c in cts {
                w += keys.decrypt(c)? as usize;
            }
            return Ok(Some(w.to_string()));
        }
    }
    Ok(None)
}

/// GM streams whose sample differs from the reference in exactly `weight`
/// random positions, so every difference has the same weight.
pub fn fixed_weight_stream(weight: usize, seed: u64) -> impl FnMut(&mut BlackboxSystem<GmProtocol>, usize) -> Result<()> {
    let mut rng = <rand_chacha::ChaCha20Rng as rand::SeedableRng>::seed_from_u64(seed);
    move |sys, user| {
        let mut b = sys.escrow().reference(user)?.clone();
        for i in rand::seq::index::sample(&mut rng, b.len(), weight) {
            b.flip(i);
        }
        sys.run_auth_with(user, Capture::Bits(b)).map(|_| ())
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    use super::*;
    use crate::coding::LinearCode;
    use crate::protocol::{GmParams, StoParams};

    fn sto(attacker: &str, seed: u64) -> BlackboxSystem<StoProtocol> {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let proto = StoProtocol::setup(LinearCode::standard_16_8(), &StoParams::default(), &mut rng).unwrap();
        BlackboxSystem::new(proto, attacker.parse().unwrap(), seed)
    }

    #[test]
    fn matcher_links_by_codeword() {
        let mut sys = sto("m", 1);
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let out = trace_experiment(&mut sys, 40, &mut rng, accepted_stream, codeword_fingerprint).unwrap();
        assert!(out.advantage >= 0.95, "{out:?}");
    }

    #[test]
    fn database_links_by_lookup() {
        let mut sys = sto("db", 3);
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let out = trace_experiment(&mut sys, 40, &mut rng, honest_stream, lookup_fingerprint).unwrap();
        assert_eq!(out.advantage, 1.0);
    }

    #[test]
    fn gm_matcher_sees_only_weights() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let params = GmParams { bits: 32, threshold: 5, ..GmParams::default() };
        let proto = GmProtocol::setup(&params, &mut rng).unwrap();
        let mut sys = BlackboxSystem::new(proto, "m".parse().unwrap(), 5);
        let out = trace_experiment(&mut sys, 60, &mut rng, fixed_weight_stream(3, 6), weight_fingerprint).unwrap();
        assert!(out.advantage < 0.1, "{out:?}");
    }
}
