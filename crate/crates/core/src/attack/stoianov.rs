//! Attacks on the split fuzzy-commitment scheme.

use super::{expect_accepted, last_of, verdict};
use crate::bits::BitString;
use crate::entity::{Adversary, Capture, Flow, Message, Payload, Role};
use crate::error::{Error, Result};
use crate::numtheory::BgKeyPair;
use crate::protocol::{StoProtocol, StoView};

use num_bigint::BigUint;

/// What a corrupted matcher extracts from one merged query.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Unmasked {
    pub seq: u64,
    pub index: usize,
    /// c ⊕ b ⊕ b'
    pub word: BitString,
    /// the decoded codeword, when decoding and the hash check succeed
    pub codeword: Option<BitString>,
}

fn matcher_keys(view: &StoView) -> Result<&BgKeyPair> {
    view.secret_key.as_ref().ok_or_else(|| Error::InvalidAttacker("needs the matcher".into()))
}

/// Strips both keystreams from a merged query the matcher received.
pub fn unmask(adv: &Adversary<'_, StoProtocol>, msg: &Message) -> Result<Unmasked> {
    let Payload::StoMerged { index, masked, state } = &msg.payload else {
        return Err(Error::Attack("not a merged query".into()));
    };
    let view = adv.state();
    let keys = matcher_keys(&view)?;
    let rec = view.matcher_records.as_ref().and_then(|r| r.get(index)).ok_or(Error::UnknownUser(*index))?;
    let fresh = keys.recover_stream(state, masked.len())?;
    let word = &(masked ^ &fresh) ^ &rec.stream;
    let codeword = view
        .code
        .decode_bounded(&word)?
        .filter(|c| crate::numtheory::hash_commit(c) == rec.codeword_hash);
    Ok(Unmasked { seq: msg.seq, index: *index, word, codeword })
}

/// Lets traffic through until the matcher sees a query for `index` that it
/// accepts, returning the unmasked form.
fn wait_for_match(adv: &mut Adversary<'_, StoProtocol>, index: Option<usize>) -> Result<Option<Unmasked>> {
    loop {
        let before = adv.observed().len();
        if adv.wait_for_traffic()?.is_none() {
            return Ok(None);
        }
        let fresh: Vec<Message> = adv.observed()[before..].iter().filter(|m| m.flow == Flow::F3).cloned().collect();
        for msg in fresh {
            let u = unmask(adv, &msg)?;
            if u.codeword.is_some() && index.map_or(true, |i| i == u.index) {
                return Ok(Some(u));
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Collusion {
    pub index: usize,
    /// c ⊕ b
    pub sketch: BitString,
    pub reference: Option<BitString>,
    /// the genuine sample at the accept that exposed c, with the sequence
    /// number of the merged query it arrived in
    pub sample: Option<(u64, BitString)>,
}

fn finish(adv: &mut Adversary<'_, StoProtocol>, index: usize, sketch: BitString, wait: bool) -> Result<Collusion> {
    let mut out = Collusion { index, sketch, reference: None, sample: None };
    if !wait {
        return Ok(out);
    }
    if let Some(u) = wait_for_match(adv, Some(index))? {
        let c = u.codeword.expect("filtered on success");
        let b = out.sketch.xor(&c)?;
        let b_prime = u.word.xor(&c)?.xor(&b)?;
        out.reference = Some(b);
        out.sample = Some((u.seq, b_prime));
    }
    Ok(out)
}

/// Matcher and sensor: present the zero word once; the matcher reads c ⊕ b.
/// With `wait`, also learns b from the next genuine accept.
pub fn matcher_sensor(adv: &mut Adversary<'_, StoProtocol>, claimed: usize, wait: bool) -> Result<Collusion> {
    if !adv.controls(Role::Sensor) {
        return Err(Error::InvalidAttacker("needs the sensor".into()));
    }
    let view = adv.state();
    matcher_keys(&view)?;
    let n = view.code_length;
    let ct = view.public_key.encrypt(&BitString::zeros(n), adv.rng());
    let sample = Payload::StoSample { id: claimed, masked: ct.masked, state: ct.x_next };
    expect_accepted(adv.submit(Role::Sensor, Role::AuthServer, sample)?)?;
    let msg = last_of(adv.observed(), Flow::F3).cloned().ok_or_else(|| Error::Attack("matcher saw no query".into()))?;
    let u = unmask(adv, &msg)?;
    finish(adv, u.index, u.word, wait)
}

/// Matcher and database: the two stored halves XOR to c ⊕ b.
pub fn matcher_database(adv: &mut Adversary<'_, StoProtocol>, index: usize, wait: bool) -> Result<Collusion> {
    let view = adv.state();
    let db = view.db_records.as_ref().ok_or_else(|| Error::InvalidAttacker("needs the database".into()))?;
    let stream = &view.matcher_records.as_ref().ok_or_else(|| Error::InvalidAttacker("needs the matcher".into()))?;
    let masked = db.get(&index).ok_or(Error::UnknownUser(index))?;
    let sketch = masked.xor(&stream.get(&index).ok_or(Error::UnknownUser(index))?.stream)?;
    finish(adv, index, sketch, wait)
}

/// Matcher and server: one lookup yields the masked sketch.
pub fn matcher_server(adv: &mut Adversary<'_, StoProtocol>, index: usize, wait: bool) -> Result<Collusion> {
    let view = adv.state();
    let records = view.matcher_records.as_ref().ok_or_else(|| Error::InvalidAttacker("needs the matcher".into()))?;
    let masked = fetch_record(adv, index)?;
    let sketch = masked.xor(&records.get(&index).ok_or(Error::UnknownUser(index))?.stream)?;
    finish(adv, index, sketch, wait)
}

/// Matcher and server: every relayed sample unmasks to the fresh capture.
pub fn matcher_server_sample(adv: &mut Adversary<'_, StoProtocol>) -> Result<Option<(u64, BitString)>> {
    let view = adv.state();
    let keys = matcher_keys(&view)?.clone();
    let Some(msg) = super::wait_for_flow(adv, Flow::F1, |_| true)? else { return Ok(None) };
    let Payload::StoSample { masked, state, .. } = &msg.payload else { return Err(Error::Attack("odd sample".into())) };
    let stream = keys.recover_stream(state, masked.len())?;
    Ok(Some((msg.seq, masked.xor(&stream)?)))
}

pub fn fetch_record(adv: &mut Adversary<'_, StoProtocol>, index: usize) -> Result<BitString> {
    match expect_accepted(adv.submit(Role::AuthServer, Role::Database, Payload::Lookup { index })?)? {
        Payload::StoRecord { masked } => Ok(masked),
        other => Err(Error::Attack(format!("unexpected database answer {other:?}"))),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BlockOutcome {
    Recovered(BlockResult),
    /// no unique candidate for some block within the position budget
    Ambiguous { block: usize, queries: u64 },
    Waiting,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockResult {
    pub index: usize,
    pub f1_seq: u64,
    /// b ⊕ b'
    pub difference: BitString,
    /// b, when the sensor is also corrupted
    pub reference: Option<BitString>,
    pub queries: u64,
}

/// Query budget of the block search.
pub fn block_bound(n: usize, t: usize, l: usize) -> u64 {
    ((t + 1) * 2 + n.div_ceil(l) * (1 << l) * (t + 1)) as u64
}

/// Boundary walk plus block-by-block exhaustive search.
///
/// `accepts(W)` answers whether `W` lies within the decoding radius of a hidden
/// word `K`. `v` is a known accepted word. Returns `K`, or the block that stayed ambiguous.
pub fn block_search(
    v: &BitString,
    l: usize,
    mut accepts: impl FnMut(&BitString) -> Result<bool>,
) -> Result<(std::result::Result<BitString, usize>, u64)> {
    let n = v.len();
    let mut queries = 0u64;
    let mut ask = |w: &BitString| {
        queries += 1;
        accepts(w)
    };
    let mut w = v.clone();
    let mut on_boundary = false;
    for i in 0..n {
        w.flip(i);
        if !ask(&w)? {
            w.flip(i);
            on_boundary = true;
            break;
        }
    }
    if !on_boundary {
        return Ok((Err(0), queries));
    }
    let blocks: Vec<(usize, usize)> = (0..n).step_by(l).map(|s| (s, (s + l).min(n))).collect();
    let mut known: Vec<Option<bool>> = vec![None; n];
    let mut next_free = 0usize;
    for (bi, &(start, end)) in blocks.iter().enumerate() {
        let width = end - start;
        loop {
            let mut hits = Vec::new();
            for x in 0..(1u64 << width) {
                let mut cand = w.clone();
                cand.splice(start, &BitString::from_u64(x, width));
                if ask(&cand)? {
                    hits.push(x);
                    if hits.len() == 2 {
                        break;
                    }
                }
            }
            if let [x] = hits[..] {
                let block = BitString::from_u64(x, width);
                w.splice(start, &block);
                for (j, bit) in block.iter().enumerate() {
                    known[start + j] = Some(bit);
                }
                break;
            }
            // push one more error outside the block, exactly where K is known
            let exact = (0..n).find(|&j| known[j] == Some(w.get(j)));
            let pos = exact.or_else(|| {
                while next_free < n && (known[next_free].is_some() || (start..end).contains(&next_free)) {
                    next_free += 1;
                }
                (next_free < n).then(|| {
                    next_free += 1;
                    next_free - 1
                })
            });
            match pos {
                Some(j) => w.flip(j),
                None => return Ok((Err(bi), queries)),
            }
        }
    }
    // w still carries the errors pushed into solved blocks; K is what was learned
    Ok((Ok(known.into_iter().map(|b| b.expect("every block solved")).collect()), queries))
}

/// The capture the corrupted sensor saw just before a sample went out.
pub fn sensor_capture_before(observed: &[Message], f1_seq: u64) -> Option<BitString> {
    observed.iter().rev().filter(|m| m.seq < f1_seq).find_map(|m| match &m.payload {
        Payload::Presentation { capture: Capture::Bits(b), .. } if m.flow == Flow::Capture => Some(b.clone()),
        _ => None,
    })
}

/// Corrupted server: take a genuine accepted sample, fetch the masked sketch
/// once and search the decoding region block by block. With the sensor also
/// corrupted, the known capture turns b ⊕ b' into b.
pub fn server_block_attack(adv: &mut Adversary<'_, StoProtocol>, l: usize) -> Result<BlockOutcome> {
    if !adv.controls(Role::AuthServer) {
        return Err(Error::InvalidAttacker("needs the authentication server".into()));
    }
    if l == 0 || l > 16 {
        return Err(Error::InvalidParams("block length must be in 1..=16".into()));
    }
    let view = adv.state();
    let (f1_seq, id, sample, state) = loop {
        match adv.wait_for_traffic()? {
            None => return Ok(BlockOutcome::Waiting),
            Some(d) if d.is_ok() => {
                let msg = last_of(adv.observed(), Flow::F1).expect("server relays every sample");
                let Payload::StoSample { id, masked, state } = &msg.payload else {
                    return Err(Error::Attack("odd sample".into()));
                };
                break (msg.seq, *id, masked.clone(), state.clone());
            }
            Some(_) => {}
        }
    };
    let index = view.id_table.as_ref().and_then(|t| t.get(&id).copied()).ok_or(Error::UnknownUser(id))?;
    let record = fetch_record(adv, index)?;
    let v = sample.xor(&record)?;
    let (found, queries) = block_search(&v, l, |w| merged_accepted(adv, index, w, &state))?;
    let k = match found {
        Ok(k) => k,
        Err(block) => return Ok(BlockOutcome::Ambiguous { block, queries }),
    };
    let difference = v.xor(&k)?;
    let reference = if adv.controls(Role::Sensor) {
        sensor_capture_before(adv.observed(), f1_seq).map(|b_prime| &difference ^ &b_prime)
    } else {
        None
    };
    Ok(BlockOutcome::Recovered(BlockResult { index, f1_seq, difference, reference, queries }))
}

fn merged_accepted(adv: &mut Adversary<'_, StoProtocol>, index: usize, w: &BitString, state: &BigUint) -> Result<bool> {
    let query = Payload::StoMerged { index, masked: w.clone(), state: state.clone() };
    verdict(&expect_accepted(adv.submit(Role::AuthServer, Role::Matcher, query)?)?)
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    use super::*;
    use crate::biometric::BiometricSource;
    use crate::coding::LinearCode;
    use crate::entity::{AttackerSet, BlackboxSystem};
    use crate::protocol::StoParams;

    fn system(attacker: &str, seed: u64, noise: f64) -> BlackboxSystem<StoProtocol> {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let params = StoParams { noise_prob: noise, ..StoParams::default() };
        let proto = StoProtocol::setup(LinearCode::standard_16_8(), &params, &mut rng).unwrap();
        BlackboxSystem::new(proto, attacker.parse::<AttackerSet>().unwrap(), seed)
    }

    fn sketch(sys: &BlackboxSystem<StoProtocol>, user: usize) -> BitString {
        sys.escrow().reference(user).unwrap() ^ sys.escrow().codeword(user).unwrap()
    }

    #[test]
    fn zero_presentation_reveals_sketch() {
        for seed in 0..5 {
            let mut sys = system("m+s", seed, 0.03);
            let got = matcher_sensor(&mut sys.adversary(), 1, false).unwrap();
            assert_eq!(got.sketch, sketch(&sys, 1));
            assert_eq!(sys.attack_ledger().get(Flow::F1), 1);
        }
    }

    #[test]
    fn matcher_database_after_genuine_accept() {
        for seed in 0..5 {
            let mut sys = system("m+db", seed, 0.03);
            sys.set_traffic_user(Some(2));
            let got = matcher_database(&mut sys.adversary(), 2, true).unwrap();
            assert_eq!(got.reference.as_ref(), Some(sys.escrow().reference(2).unwrap()));
            let (seq, b_prime) = got.sample.unwrap();
            assert_eq!(sys.presentation_before(seq), Some(&Capture::Bits(b_prime)));
            assert!(sys.attack_ledger().is_zero());
        }
    }

    #[test]
    fn matcher_server_reads_every_sample() {
        let mut sys = system("m+as", 4, 0.05);
        for _ in 0..5 {
            let (seq, b_prime) = matcher_server_sample(&mut sys.adversary()).unwrap().unwrap();
            assert_eq!(sys.presentation_for(seq), Some(&Capture::Bits(b_prime)));
        }
        let got = matcher_server(&mut sys.adversary(), 0, false).unwrap();
        assert_eq!(got.sketch, sketch(&sys, 0));
    }

    #[test]
    fn plain_block_search() {
        let mut rng = ChaCha20Rng::seed_from_u64(8);
        let mut solved = 0;
        for _ in 0..200 {
            let k = BitString::random(16, &mut rng);
            let mut v = k.clone();
            let d = rng.gen_range(0..=2);
            for i in rand::seq::index::sample(&mut rng, 16, d) {
                v.flip(i);
            }
            let (found, queries) = block_search(&v, 4, |w| Ok(w.hamming(&k)? <= 2)).unwrap();
            assert!(queries <= block_bound(16, 2, 4));
            if let Ok(found) = found {
                assert_eq!(found, k);
                solved += 1;
            }
        }
        assert!(solved >= 190, "{solved}");
    }

    #[test]
    fn block_attack_zero_difference() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let source = BiometricSource::generate(2, 16, 0.0, &mut rng).unwrap();
        let proto =
            StoProtocol::with_source(LinearCode::standard_16_8(), source, &StoParams::default(), &mut rng).unwrap();
        let mut sys = BlackboxSystem::new(proto, "as+s".parse().unwrap(), 1);
        let BlockOutcome::Recovered(r) = server_block_attack(&mut sys.adversary(), 4).unwrap() else { panic!() };
        assert_eq!(r.difference, BitString::zeros(16));
        assert_eq!(r.reference.as_ref(), Some(sys.escrow().reference(r.index).unwrap()));
    }

    #[test]
    fn block_attack_matches_escrow() {
        for seed in 0..10 {
            let mut sys = system("as", seed, 0.05);
            match server_block_attack(&mut sys.adversary(), 4).unwrap() {
                BlockOutcome::Recovered(r) => {
                    let Some(Capture::Bits(b_prime)) = sys.presentation_for(r.f1_seq) else { panic!() };
                    assert_eq!(r.difference, sys.escrow().reference(r.index).unwrap() ^ b_prime);
                }
                other => panic!("{other:?}"),
            }
        }
    }
}
