//! Attacks on the bitwise Goldwasser–Micali scheme.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

use super::{expect_accepted, last_of, verdict, wait_for_flow};
use crate::bits::BitString;
use crate::entity::{Adversary, Flow, Payload, Role};
use crate::error::{Error, Result};
use crate::numtheory::{GmCiphertext, GmPublicKey};
use crate::protocol::GmProtocol;

/// A matcher that thresholds the number of encrypted ones in a vector of
/// components, reachable with arbitrary component vectors.
///
/// Anything with this shape leaks every component of a decomposed reference:
/// repeat one component `t+1` times and the threshold flips on its value.
pub trait ComponentwiseOracle {
    type Component: Clone;

    fn width(&self) -> usize;
    fn threshold(&self) -> usize;
    /// A fresh component decrypting to zero.
    fn zero(&mut self) -> Self::Component;
    /// A fresh component decrypting to one, if the caller can make one.
    fn one(&mut self) -> Option<Self::Component>;
    fn refresh(&mut self, c: &Self::Component) -> Self::Component;
    fn accepts(&mut self, query: Vec<Self::Component>) -> Result<bool>;
    fn shuffle(&mut self, query: &mut [Self::Component]);
}

/// Recovers the plaintext bit behind each target component, one query each.
///
/// With `disguise` every query also carries up to `t` encrypted ones and is
/// shuffled, so no two queries share a weight pattern.
pub fn recover_components<O: ComponentwiseOracle>(
    oracle: &mut O,
    targets: &[O::Component],
    disguise: bool,
    rng: &mut impl Rng,
) -> Result<BitString> {
    let (m, t) = (oracle.width(), oracle.threshold());
    if t + 1 > m {
        return Err(Error::InvalidParams("threshold leaves no room for a probe".into()));
    }
    let mut out = BitString::zeros(targets.len());
    for (k, target) in targets.iter().enumerate() {
        let ones = if disguise && oracle.one().is_some() { rng.gen_range(0..=t) } else { 0 };
        let mut query = Vec::with_capacity(m);
        for _ in 0..(t + 1 - ones) {
            query.push(oracle.refresh(target));
        }
        for _ in 0..ones {
            query.push(oracle.one().expect("checked above"));
        }
        while query.len() < m {
            query.push(oracle.zero());
        }
        if disguise {
            oracle.shuffle(&mut query);
        }
        out.set(k, !oracle.accepts(query)?);
    }
    Ok(out)
}

/// The GM matcher seen from a corrupted authentication server.
pub struct GmServerOracle<'s, 'a> {
    adv: &'s mut Adversary<'a, GmProtocol>,
    pk: Option<GmPublicKey>,
    bits: usize,
    threshold: usize,
}

impl<'s, 'a> GmServerOracle<'s, 'a> {
    pub fn new(adv: &'s mut Adversary<'a, GmProtocol>) -> Result<Self> {
        if !adv.controls(Role::AuthServer) {
            return Err(Error::InvalidAttacker("needs the authentication server".into()));
        }
        let view = adv.state();
        Ok(GmServerOracle { pk: view.public_key, bits: view.bits, threshold: view.threshold, adv })
    }
}

impl ComponentwiseOracle for GmServerOracle<'_, '_> {
    type Component = GmCiphertext;

    fn width(&self) -> usize {
        self.bits
    }

    fn threshold(&self) -> usize {
        self.threshold
    }

    fn zero(&mut self) -> GmCiphertext {
        // c^0 = 1 is a valid encryption of zero even without the key
        match &self.pk {
            Some(pk) => pk.rerandomize(&GmPublicKey::trivial_zero(), self.adv.rng()),
            None => GmPublicKey::trivial_zero(),
        }
    }

    fn one(&mut self) -> Option<GmCiphertext> {
        let pk = self.pk.clone()?;
        Some(pk.encrypt(true, self.adv.rng()))
    }

    fn refresh(&mut self, c: &GmCiphertext) -> GmCiphertext {
        match &self.pk {
            Some(pk) => pk.rerandomize(c, self.adv.rng()),
            None => c.clone(),
        }
    }

    fn accepts(&mut self, query: Vec<GmCiphertext>) -> Result<bool> {
        let reply = self.adv.submit(Role::AuthServer, Role::Matcher, Payload::GmCombined { cts: query })?;
        verdict(&expect_accepted(reply)?)
    }

    fn shuffle(&mut self, query: &mut [GmCiphertext]) {
        query.shuffle(self.adv.rng());
    }
}

/// Fetches an encrypted reference through the lookup channel.
pub fn fetch_reference(adv: &mut Adversary<'_, GmProtocol>, index: usize) -> Result<Vec<GmCiphertext>> {
    let reply = adv.submit(Role::AuthServer, Role::Database, Payload::Lookup { index })?;
    match expect_accepted(reply)? {
        Payload::GmReference { cts } => Ok(cts),
        other => Err(Error::Attack(format!("unexpected database answer {other:?}"))),
    }
}

/// Corrupted server: one lookup, then one matcher query per reference bit.
pub fn server_learns_reference(adv: &mut Adversary<'_, GmProtocol>, index: usize, disguise: bool) -> Result<BitString> {
    let reference = fetch_reference(adv, index)?;
    let mut rng = rand_chacha::ChaCha20Rng::from_rng(adv.rng()).map_err(|e| Error::Attack(e.to_string()))?;
    let mut oracle = GmServerOracle::new(adv)?;
    recover_components(&mut oracle, &reference, disguise, &mut rng)
}

/// Corrupted server: the same probing applied to a genuine sample it relayed.
/// Returns the sequence number of that sample with the recovered bits.
pub fn server_learns_sample(adv: &mut Adversary<'_, GmProtocol>, disguise: bool) -> Result<Option<(u64, BitString)>> {
    let Some(msg) = wait_for_flow(adv, Flow::F1, |_| true)? else { return Ok(None) };
    let Payload::GmSample { cts, .. } = &msg.payload else { return Err(Error::Attack("odd sample".into())) };
    let mut rng = rand_chacha::ChaCha20Rng::from_rng(adv.rng()).map_err(|e| Error::Attack(e.to_string()))?;
    let mut oracle = GmServerOracle::new(adv)?;
    Ok(Some((msg.seq, recover_components(&mut oracle, cts, disguise, &mut rng)?)))
}

/// Corrupted matcher and sensor: encrypted zero vector, then one toggled bit per
/// query. Each weight change reveals a bit; the last follows from the total.
pub fn matcher_sensor_learns_reference(adv: &mut Adversary<'_, GmProtocol>, claimed: usize) -> Result<BitString> {
    if !adv.controls(Role::Matcher) || !adv.controls(Role::Sensor) {
        return Err(Error::InvalidAttacker("needs the matcher and the sensor".into()));
    }
    let view = adv.state();
    let keys = view.secret_key.expect("matcher holds the key");
    let m = view.bits;
    let probe = |adv: &mut Adversary<'_, GmProtocol>, x: &BitString| -> Result<usize> {
        let cts = x.iter().map(|bit| keys.public.encrypt(bit, adv.rng())).collect();
        expect_accepted(adv.submit(Role::Sensor, Role::AuthServer, Payload::GmSample { id: claimed, cts })?)?;
        let Some(Payload::GmCombined { cts }) = last_of(adv.observed(), Flow::F3).map(|m| &m.payload) else {
            return Err(Error::Attack("matcher saw no query".into()));
        };
        let mut w = 0;
        for c in cts {
            w += keys.decrypt(c)? as usize;
        }
        Ok(w)
    };
    let w0 = probe(adv, &BitString::zeros(m))?;
    let mut b = BitString::zeros(m);
    let mut known = 0;
    for x in 0..m.saturating_sub(1) {
        let mut toggled = BitString::zeros(m);
        toggled.set(x, true);
        let bit = probe(adv, &toggled)? < w0;
        b.set(x, bit);
        known += bit as usize;
    }
    if m > 0 {
        match w0.checked_sub(known) {
            Some(0) => {}
            Some(1) => b.set(m - 1, true),
            _ => return Err(Error::Attack("weights are inconsistent".into())),
        }
    }
    Ok(b)
}

/// Corrupted matcher with access to the encrypted references: decrypt them.
pub fn matcher_decrypts_reference(adv: &mut Adversary<'_, GmProtocol>, index: usize) -> Result<BitString> {
    let view = adv.state();
    let keys = view.secret_key.ok_or_else(|| Error::InvalidAttacker("needs the matcher".into()))?;
    let cts = match view.records {
        Some(records) => records.get(&index).cloned().ok_or(Error::UnknownUser(index))?,
        None => fetch_reference(adv, index)?,
    };
    cts.iter().map(|c| keys.decrypt(c)).collect()
}

/// Corrupted matcher and server: decrypt a relayed sample.
pub fn matcher_decrypts_sample(adv: &mut Adversary<'_, GmProtocol>) -> Result<Option<(u64, BitString)>> {
    let keys = adv.state().secret_key.ok_or_else(|| Error::InvalidAttacker("needs the matcher".into()))?;
    let Some(msg) = wait_for_flow(adv, Flow::F1, |_| true)? else { return Ok(None) };
    let Payload::GmSample { cts, .. } = &msg.payload else { return Err(Error::Attack("odd sample".into())) };
    let bits = cts.iter().map(|c| keys.decrypt(c)).collect::<Result<BitString>>()?;
    Ok(Some((msg.seq, bits)))
}
