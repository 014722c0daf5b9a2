//! Center search: drive an accepted word to the exact reference through an
//! accept/reject oracle.

use crate::bits::BitString;
use crate::entity::{Adversary, Payload, Role};
use crate::error::{Error, Result};
use crate::protocol::{GmProtocol, StoProtocol};

use super::{expect_accepted, verdict};

/// Accepts a word iff it is within the threshold of the hidden reference.
pub trait DecisionOracle {
    fn accepts(&mut self, word: &BitString) -> Result<bool>;
}

impl<F: FnMut(&BitString) -> Result<bool>> DecisionOracle for F {
    fn accepts(&mut self, word: &BitString) -> Result<bool> {
        self(word)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CenterResult {
    pub reference: BitString,
    pub queries: u64,
}

/// Flips bits left to right until a rejection, undoes the last flip so the word
/// sits exactly on the boundary, then tests every other position by flipping it.
///
/// `start` must already be accepted. Uses at most `n + 2t` queries.
pub fn center_search<O: DecisionOracle>(oracle: &mut O, start: &BitString, t: usize) -> Result<CenterResult> {
    let n = start.len();
    let mut queries = 0u64;
    let mut ask = |w: &BitString| {
        queries += 1;
        oracle.accepts(w)
    };
    let mut u = start.clone();
    let mut boundary = None;
    for p in 0..n {
        u.flip(p);
        if !ask(&u)? {
            u.flip(p);
            boundary = Some(p);
            break;
        }
    }
    let Some(p) = boundary else {
        return Err(Error::Attack("no rejection while flipping; threshold too large for the word length".into()));
    };
    // u is at distance exactly t and u[p] is correct
    let mut wrong = Vec::new();
    for i in (0..n).filter(|&i| i != p) {
        if wrong.len() == t {
            break;
        }
        u.flip(i);
        if ask(&u)? {
            wrong.push(i);
        }
        u.flip(i);
    }
    for i in wrong {
        u.flip(i);
    }
    Ok(CenterResult { reference: u, queries })
}

/// Largest query count the search may use.
pub fn bound(n: usize, t: usize) -> u64 {
    (2 * t + n).max(4 * t) as u64
}

/// GM decisions through a corrupted sensor: encrypt the word and present it.
pub fn gm_sensor_oracle<'s, 'a>(
    adv: &'s mut Adversary<'a, GmProtocol>,
    claimed: usize,
) -> Result<impl FnMut(&BitString) -> Result<bool> + use<'s, 'a>> {
    let pk = adv
        .state()
        .public_key
        .ok_or_else(|| Error::InvalidAttacker("needs the sensor".into()))?;
    if !adv.controls(Role::Sensor) {
        return Err(Error::InvalidAttacker("needs the sensor".into()));
    }
    Ok(move |w: &BitString| {
        let cts = w.iter().map(|bit| pk.encrypt(bit, adv.rng())).collect();
        verdict(&expect_accepted(adv.submit(Role::Sensor, Role::AuthServer, Payload::GmSample { id: claimed, cts })?)?)
    })
}

/// Stoianov decisions through a corrupted sensor.
pub fn sto_sensor_oracle<'s, 'a>(
    adv: &'s mut Adversary<'a, StoProtocol>,
    claimed: usize,
) -> Result<impl FnMut(&BitString) -> Result<bool> + use<'s, 'a>> {
    if !adv.controls(Role::Sensor) {
        return Err(Error::InvalidAttacker("needs the sensor".into()));
    }
    let pk = adv.state().public_key;
    Ok(move |w: &BitString| {
        let ct = pk.encrypt(w, adv.rng());
        let sample = Payload::StoSample { id: claimed, masked: ct.masked, state: ct.x_next };
        verdict(&expect_accepted(adv.submit(Role::Sensor, Role::AuthServer, sample)?)?)
    })
}
