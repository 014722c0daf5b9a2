//! Fuzzy commitment under Blum–Goldwasser masking with split storage.
//!
//! The database keeps `Š ⊕ c ⊕ b`, the matcher keeps `Š` and `H(c)`. Both sides can
//! be rekeyed with a shared keystream that preserves `Š ⊕ masked = c ⊕ b`.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use super::{internal, unexpected};
use crate::biometric::{BiometricSource, Template};
use crate::bits::BitString;
use crate::coding::LinearCode;
use crate::entity::{AttackerSet, Capture, Decision, Deployment, Flow, Mode, Payload, Protocol, Role};
use crate::error::{Error, Result};
use crate::numtheory::arith::is_unit;
use crate::numtheory::{hash_commit, BbsState, BgCiphertext, BgKeyPair, BgPublicKey, Digest};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StoParams {
    pub users: usize,
    pub prime_bits: u64,
    pub noise_prob: f64,
}

impl Default for StoParams {
    fn default() -> Self {
        StoParams { users: 4, prime_bits: 32, noise_prob: 0.03 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatcherRecord {
    pub stream: BitString,
    pub codeword_hash: Digest,
}

pub struct StoProtocol {
    code: LinearCode,
    keys: BgKeyPair,
    source: BiometricSource,
    db: BTreeMap<usize, BitString>,
    matcher: BTreeMap<usize, MatcherRecord>,
    id_table: BTreeMap<usize, usize>,
    rekey_stream: BbsState,
    codewords: BTreeMap<usize, BitString>,
}

#[derive(Clone, Debug, Serialize)]
pub struct StoView {
    pub code_length: usize,
    /// public system configuration
    #[serde(skip)]
    pub code: LinearCode,
    pub public_key: BgPublicKey,
    pub secret_key: Option<BgKeyPair>,
    pub matcher_records: Option<BTreeMap<usize, MatcherRecord>>,
    pub db_records: Option<BTreeMap<usize, BitString>>,
    pub id_table: Option<BTreeMap<usize, usize>>,
}

impl StoProtocol {
    pub fn setup<R: Rng + ?Sized>(code: LinearCode, params: &StoParams, rng: &mut R) -> Result<Self> {
        let source = BiometricSource::generate(params.users, code.length(), params.noise_prob, rng)?;
        Self::with_source(code, source, params, rng)
    }

    pub fn with_source<R: Rng + ?Sized>(
        code: LinearCode,
        source: BiometricSource,
        params: &StoParams,
        rng: &mut R,
    ) -> Result<Self> {
        if source.template_len() != code.length() {
            return Err(Error::LengthMismatch { expected: code.length(), actual: source.template_len() });
        }
        let keys = BgKeyPair::generate(params.prime_bits, rng)?;
        // independent keystream shared by matcher and database
        let rekey_keys = BgKeyPair::generate(params.prime_bits, rng)?;
        let rekey_stream = BbsState::random(rekey_keys.public.modulus.clone(), rng);
        let mut proto = StoProtocol {
            code,
            keys,
            source,
            db: BTreeMap::new(),
            matcher: BTreeMap::new(),
            id_table: BTreeMap::new(),
            rekey_stream,
            codewords: BTreeMap::new(),
        };
        let users: Vec<usize> = proto.source.user_ids().collect();
        for u in users {
            let b = proto.source.ground_truth(u)?.clone();
            proto.enroll(u, &b, rng)?;
        }
        Ok(proto)
    }

    pub fn enroll<R: Rng + ?Sized>(&mut self, user: usize, b: &Template, rng: &mut R) -> Result<()> {
        if self.db.contains_key(&user) {
            return Err(Error::DuplicateUser(user));
        }
        let c = self.code.random_codeword(rng);
        let sketch = b.xor(&c)?;
        let ct = self.keys.public.encrypt(&sketch, rng);
        let stream = self.keys.recover_stream(&ct.x_next, sketch.len())?;
        self.db.insert(user, ct.masked);
        self.matcher.insert(user, MatcherRecord { stream, codeword_hash: hash_commit(&c) });
        self.id_table.insert(user, user);
        self.codewords.insert(user, c);
        Ok(())
    }

    /// Both sides XOR the same fresh keystream into their stored values.
    pub fn rekey(&mut self, user: usize) -> Result<()> {
        let n = self.code.length();
        let masked = self.db.get_mut(&user).ok_or(Error::UnknownUser(user))?;
        let key = self.rekey_stream.next_bits(n);
        *masked ^= &key;
        let rec = self.matcher.get_mut(&user).expect("matcher and database enrolled together");
        rec.stream ^= &key;
        Ok(())
    }

    pub fn code(&self) -> &LinearCode {
        &self.code
    }

    pub fn keys(&self) -> &BgKeyPair {
        &self.keys
    }

    pub fn public_key(&self) -> &BgPublicKey {
        &self.keys.public
    }

    pub fn source(&self) -> &BiometricSource {
        &self.source
    }

    pub fn reference(&self, user: usize) -> Result<&Template> {
        self.source.ground_truth(user)
    }

    pub fn codeword(&self, user: usize) -> Result<&BitString> {
        self.codewords.get(&user).ok_or(Error::UnknownUser(user))
    }

    pub fn db_record(&self, user: usize) -> Result<&BitString> {
        self.db.get(&user).ok_or(Error::UnknownUser(user))
    }

    pub fn matcher_record(&self, user: usize) -> Result<&MatcherRecord> {
        self.matcher.get(&user).ok_or(Error::UnknownUser(user))
    }

    /// The sensor's encryption of a sample.
    pub fn encrypt_sample<R: RngCore + ?Sized>(&self, b: &Template, rng: &mut R) -> BgCiphertext {
        self.keys.public.encrypt(b, rng)
    }

    /// Matcher check of a merged word: decode `c ⊕ b ⊕ b'` and compare hashes.
    pub fn matcher_check(&self, index: usize, masked: &BitString, state: &BigUint) -> Result<bool> {
        let rec = self.matcher_record(index)?;
        let Ok(fresh) = self.keys.recover_stream(state, masked.len()) else {
            return Ok(false);
        };
        let word = &(masked ^ &fresh) ^ &rec.stream;
        Ok(matches!(self.code.decode_bounded(&word)?, Some(c) if hash_commit(&c) == rec.codeword_hash))
    }

    fn check_bits(&self, what: &str, bits: &BitString) -> std::result::Result<(), String> {
        if bits.len() == self.code.length() {
            Ok(())
        } else {
            Err(format!("{what}: expected {} bits, got {}", self.code.length(), bits.len()))
        }
    }

    fn check_state(&self, state: &BigUint) -> std::result::Result<(), String> {
        if is_unit(state, &self.keys.public.modulus) {
            Ok(())
        } else {
            Err("generator state is not a unit".into())
        }
    }
}

impl Protocol for StoProtocol {
    type View = StoView;

    fn name(&self) -> &'static str {
        "stoianov2010"
    }

    fn deployment(&self) -> Deployment {
        Deployment { mode: Mode::Verification, db_stores_plaintext: false, identifiers_hidden: false }
    }

    fn users(&self) -> Vec<usize> {
        self.id_table.keys().copied().collect()
    }

    fn validate(&self, flow: Flow, payload: &Payload) -> std::result::Result<(), String> {
        match (flow, payload) {
            (Flow::Capture, Payload::Presentation { claimed, capture: Capture::Bits(b) }) => {
                if !self.id_table.contains_key(claimed) {
                    return Err(format!("unknown identity {claimed}"));
                }
                self.check_bits("presentation", b)
            }
            (Flow::F1, Payload::StoSample { id, masked, state }) => {
                if !self.id_table.contains_key(id) {
                    return Err(format!("unknown identity {id}"));
                }
                self.check_bits("sample", masked)?;
                self.check_state(state)
            }
            (Flow::G2, Payload::Lookup { index }) => {
                if self.db.contains_key(index) {
                    Ok(())
                } else {
                    Err(format!("no record {index}"))
                }
            }
            (Flow::F2, Payload::StoRecord { masked }) => self.check_bits("record", masked),
            (Flow::F3, Payload::StoMerged { index, masked, state }) => {
                if !self.matcher.contains_key(index) {
                    return Err(format!("no record {index}"));
                }
                self.check_bits("merged", masked)?;
                self.check_state(state)
            }
            (Flow::F4, Payload::Verdict { .. }) => Ok(()),
            _ => Err(unexpected(flow)),
        }
    }

    fn capture(&self, user: usize, rng: &mut dyn RngCore) -> Result<Capture> {
        self.source.capture(user, rng).map(Capture::Bits)
    }

    fn sensor_encode(&self, claimed: usize, capture: &Capture, rng: &mut dyn RngCore) -> Result<Payload> {
        let Capture::Bits(b) = capture else { return Err(internal("sensor")) };
        let ct = self.encrypt_sample(b, rng);
        Ok(Payload::StoSample { id: claimed, masked: ct.masked, state: ct.x_next })
    }

    fn lookup(&mut self, sample: &Payload) -> Result<Payload> {
        let Payload::StoSample { id, .. } = sample else { return Err(internal("lookup")) };
        let index = *self.id_table.get(id).ok_or(Error::UnknownUser(*id))?;
        Ok(Payload::Lookup { index })
    }

    fn db_respond(&mut self, request: &Payload, _rng: &mut dyn RngCore) -> Result<Payload> {
        let Payload::Lookup { index } = request else { return Err(internal("database")) };
        Ok(Payload::StoRecord { masked: self.db_record(*index)?.clone() })
    }

    fn combine(&mut self, sample: &Payload, record: &Payload, _rng: &mut dyn RngCore) -> Result<Payload> {
        let (Payload::StoSample { id, masked, state }, Payload::StoRecord { masked: stored }) = (sample, record) else {
            return Err(internal("combine"));
        };
        let index = *self.id_table.get(id).ok_or(Error::UnknownUser(*id))?;
        Ok(Payload::StoMerged { index, masked: masked.xor(stored)?, state: state.clone() })
    }

    fn matcher_respond(&mut self, query: &Payload, _rng: &mut dyn RngCore) -> Result<Payload> {
        let Payload::StoMerged { index, masked, state } = query else { return Err(internal("matcher")) };
        Ok(Payload::Verdict { ok: self.matcher_check(*index, masked, state)? })
    }

    fn conclude(&mut self, answer: &Payload) -> Result<Decision> {
        let Payload::Verdict { ok } = answer else { return Err(internal("decision")) };
        Ok(if *ok { Decision::Ok } else { Decision::Nok })
    }

    fn view(&self, attacker: &AttackerSet) -> StoView {
        let m = attacker.contains(Role::Matcher);
        StoView {
            code_length: self.code.length(),
            code: self.code.clone(),
            public_key: self.keys.public.clone(),
            secret_key: m.then(|| self.keys.clone()),
            matcher_records: m.then(|| self.matcher.clone()),
            db_records: attacker.contains(Role::Database).then(|| self.db.clone()),
            id_table: attacker.contains(Role::AuthServer).then(|| self.id_table.clone()),
        }
    }
}
