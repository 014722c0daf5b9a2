//! Substitution attack riding on a genuine accept.
//!
//! A corrupted authentication server that cannot produce samples itself waits
//! for a genuine accepted sample, then replaces some of its encrypted
//! components with encryptions of known constants. Each matcher decision
//! compares the hidden reference with the partially substituted word.

use rand::seq::SliceRandom;

use super::{expect_accepted, verdict};
use crate::bits::BitString;
use crate::entity::{Adversary, Flow, Payload, Role};
use crate::error::{Error, Result};
use crate::numtheory::{GmCiphertext, GmPublicKey};
use crate::protocol::GmProtocol;

/// `None` keeps the genuine component, `Some(v)` substitutes the constant `v`.
pub type Word = [Option<bool>];

pub trait SubstitutionOracle {
    fn len(&self) -> usize;
    fn accepts(&mut self, word: &Word) -> Result<bool>;
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FarResult {
    pub reference: BitString,
    pub queries: u64,
}

struct Counting<'o, O> {
    inner: &'o mut O,
    queries: u64,
}

impl<O: SubstitutionOracle> Counting<'_, O> {
    fn ask(&mut self, word: &Word) -> Result<bool> {
        self.queries += 1;
        self.inner.accepts(word)
    }

    fn ask_bits(&mut self, bits: &BitString) -> Result<bool> {
        let word: Vec<_> = bits.iter().map(Some).collect();
        self.ask(&word)
    }
}

fn constant_prefix(n: usize, len: usize, v: bool) -> Vec<Option<bool>> {
    (0..n).map(|i| (i < len).then_some(v)).collect()
}

/// Recovers the reference from an accepted genuine sample.
pub fn substitution_search<O: SubstitutionOracle>(oracle: &mut O, t: usize) -> Result<FarResult> {
    let n = oracle.len();
    let mut q = Counting { inner: oracle, queries: 0 };

    // Longest prefix of ones that is still accepted; the next position is a
    // zero the genuine sample also had right.
    let guess = n.min(3 * t);
    let (mut lo, mut hi) = if q.ask(&constant_prefix(n, guess, true))? { (guess, n + 1) } else { (0, guess) };
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if q.ask(&constant_prefix(n, mid, true))? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if hi == n + 1 {
        return all_ones_accepted(&mut q, n, t);
    }
    let p = hi - 1;
    let base = constant_prefix(n, p, true);
    let mut guess_bits = BitString::zeros(n);
    let mut prefix_zeros = 0;
    for j in 0..p {
        let mut z = base.clone();
        z[j] = Some(false);
        let one = !q.ask(&z)?;
        guess_bits.set(j, one);
        prefix_zeros += !one as usize;
    }
    // tail: a rejection proves a zero; an accept is a one unless the genuine
    // sample had a one over a zero there
    let mut labelled_one = Vec::new();
    for k in p + 1..n {
        let mut z = base.clone();
        z[k] = Some(true);
        if q.ask(&z)? {
            guess_bits.set(k, true);
            labelled_one.push(k);
        }
    }
    let tail_errors = t - prefix_zeros;
    let sure: Vec<usize> = (0..n).filter(|&j| j <= p || !guess_bits.get(j)).collect();
    let dial = |bits: &BitString, e: usize| -> Result<BitString> {
        if e > sure.len() {
            return Err(Error::Attack("not enough known positions to add errors".into()));
        }
        let mut z = bits.clone();
        for &j in &sure[..e] {
            z.flip(j);
        }
        Ok(z)
    };

    // number of mislabelled ones
    let mut m = 0;
    while m < tail_errors && !q.ask_bits(&dial(&guess_bits, t - m)?)? {
        m += 1;
    }

    // group tests: zeroing a set S of candidates and dialling in t-(m+|S|-2)
    // known errors is accepted iff S holds a mislabelled position
    let mut cand = labelled_one;
    while m > 0 {
        let found = if cand.len() == m {
            cand[0]
        } else {
            let s = (cand.len() + 1 - m).min(t + 2 - m).min(cand.len() / m).max(1);
            let hits = |q: &mut Counting<'_, O>, set: &[usize]| -> Result<bool> {
                let mut z = guess_bits.clone();
                for &j in set {
                    z.set(j, false);
                }
                q.ask_bits(&dial(&z, t + 2 - m - set.len())?)
            };
            let mut set = cand[..s].to_vec();
            if !hits(&mut q, &set)? {
                cand.drain(..s);
                continue;
            }
            while set.len() > 1 {
                let half = set[..set.len() / 2].to_vec();
                if hits(&mut q, &half)? {
                    set = half;
                } else {
                    set.drain(..set.len() / 2);
                }
            }
            set[0]
        };
        guess_bits.set(found, false);
        cand.retain(|&c| c != found);
        m -= 1;
    }
    Ok(FarResult { reference: guess_bits, queries: q.queries })
}

/// The all-ones word is accepted: search with a zero prefix over a fully known
/// word instead, where every single change is decisive.
fn all_ones_accepted<O: SubstitutionOracle>(q: &mut Counting<'_, O>, n: usize, t: usize) -> Result<FarResult> {
    let word = |len: usize| -> BitString { (0..n).map(|i| i >= len).collect() };
    let (mut lo, mut hi) = (0, n + 1);
    let guess = (t + 1).min(n);
    if q.ask_bits(&word(guess))? {
        lo = guess;
    } else {
        hi = guess;
    }
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if q.ask_bits(&word(mid))? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if hi == n + 1 {
        return Err(Error::Attack("every constant word is accepted".into()));
    }
    let p = hi - 1;
    let base = word(p);
    let mut out = base.clone();
    for j in (0..n).filter(|&j| j != p) {
        let mut z = base.clone();
        z.flip(j);
        if q.ask_bits(&z)? {
            out.flip(j);
        }
    }
    Ok(FarResult { reference: out, queries: q.queries })
}

/// The server-side oracle: genuine sample components, constants where
/// substituted, combined with the fetched reference.
pub struct GmSubstitution<'s, 'a> {
    adv: &'s mut Adversary<'a, GmProtocol>,
    pk: GmPublicKey,
    sample: Vec<GmCiphertext>,
    reference: Vec<GmCiphertext>,
}

impl SubstitutionOracle for GmSubstitution<'_, '_> {
    fn len(&self) -> usize {
        self.sample.len()
    }

    fn accepts(&mut self, word: &Word) -> Result<bool> {
        let mut cts = Vec::with_capacity(word.len());
        for ((w, s), r) in word.iter().zip(&self.sample).zip(&self.reference) {
            let c = match w {
                None => self.pk.rerandomize(s, self.adv.rng()),
                Some(v) => self.pk.encrypt(*v, self.adv.rng()),
            };
            cts.push(self.pk.hom_xor(&c, r)?);
        }
        cts.shuffle(self.adv.rng());
        let reply = self.adv.submit(Role::AuthServer, Role::Matcher, Payload::GmCombined { cts })?;
        verdict(&expect_accepted(reply)?)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FarOutcome {
    Recovered { user: usize, result: FarResult },
    /// traffic budget spent without a genuine accept
    Waiting,
}

/// Waits for an accepted genuine sample, fetches the matching reference once and
/// runs the substitution search.
pub fn server_far_attack(adv: &mut Adversary<'_, GmProtocol>) -> Result<FarOutcome> {
    if !adv.controls(Role::AuthServer) {
        return Err(Error::InvalidAttacker("needs the authentication server".into()));
    }
    let view = adv.state();
    let pk = view.public_key.ok_or_else(|| Error::InvalidAttacker("the server must hold the public key".into()))?;
    let (user, sample) = loop {
        match adv.wait_for_traffic()? {
            None => return Ok(FarOutcome::Waiting),
            Some(d) if d.is_ok() => {
                let msg = super::last_of(adv.observed(), Flow::F1).expect("server relays every sample");
                let Payload::GmSample { id, cts } = &msg.payload else { return Err(Error::Attack("odd sample".into())) };
                break (*id, cts.clone());
            }
            Some(_) => {}
        }
    };
    let index = view.id_table.as_ref().and_then(|t| t.get(&user).copied()).ok_or(Error::UnknownUser(user))?;
    let reference = super::gm::fetch_reference(adv, index)?;
    let mut oracle = GmSubstitution { adv, pk, sample, reference };
    let result = substitution_search(&mut oracle, view.threshold)?;
    Ok(FarOutcome::Recovered { user, result })
}

/// Substitution queries the search is held to.
pub fn bound(n: usize, t: usize) -> u64 {
    (n + 2 * t) as u64
}
