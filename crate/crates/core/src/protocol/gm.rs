//! Bitwise Goldwasser–Micali verification with Hamming-weight matching.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use super::{expect_len, internal, unexpected};
use crate::biometric::{BiometricSource, Template};
use crate::entity::{AttackerSet, Capture, Decision, Deployment, Flow, Mode, Payload, Protocol, Role};
use crate::error::{Error, Result};
use crate::numtheory::{GmCiphertext, GmKeyPair, GmPublicKey};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GmParams {
    pub users: usize,
    pub bits: usize,
    pub threshold: usize,
    pub prime_bits: u64,
    pub noise_prob: f64,
    /// Whether the authentication server holds the public key.
    pub as_knows_pk: bool,
}

impl Default for GmParams {
    fn default() -> Self {
        GmParams { users: 4, bits: 64, threshold: 10, prime_bits: 32, noise_prob: 0.05, as_knows_pk: true }
    }
}

pub struct GmProtocol {
    keys: GmKeyPair,
    source: BiometricSource,
    threshold: usize,
    as_knows_pk: bool,
    db: BTreeMap<usize, Vec<GmCiphertext>>,
    id_table: BTreeMap<usize, usize>,
}

/// What corrupted entities know.
#[derive(Clone, Debug, Serialize)]
pub struct GmView {
    pub bits: usize,
    pub threshold: usize,
    pub public_key: Option<GmPublicKey>,
    pub secret_key: Option<GmKeyPair>,
    pub records: Option<BTreeMap<usize, Vec<GmCiphertext>>>,
    pub id_table: Option<BTreeMap<usize, usize>>,
}

impl GmProtocol {
    pub fn setup<R: Rng + ?Sized>(params: &GmParams, rng: &mut R) -> Result<Self> {
        let source = BiometricSource::generate(params.users, params.bits, params.noise_prob, rng)?;
        Self::with_source(source, params, rng)
    }

    pub fn with_source<R: Rng + ?Sized>(source: BiometricSource, params: &GmParams, rng: &mut R) -> Result<Self> {
        if params.threshold >= params.bits {
            return Err(Error::InvalidParams("threshold must be below the template length".into()));
        }
        if source.template_len() != params.bits {
            return Err(Error::LengthMismatch { expected: params.bits, actual: source.template_len() });
        }
        let keys = GmKeyPair::generate(params.prime_bits, rng)?;
        let mut proto = GmProtocol {
            keys,
            source,
            threshold: params.threshold,
            as_knows_pk: params.as_knows_pk,
            db: BTreeMap::new(),
            id_table: BTreeMap::new(),
        };
        let users: Vec<usize> = proto.source.user_ids().collect();
        for u in users {
            let b = proto.source.ground_truth(u)?.clone();
            proto.enroll(u, &b, rng)?;
        }
        Ok(proto)
    }

    /// Enrollment: the trusted sensor encrypts bitwise, the server maps ID to index.
    pub fn enroll<R: Rng + ?Sized>(&mut self, index: usize, b: &Template, rng: &mut R) -> Result<()> {
        if self.db.contains_key(&index) {
            return Err(Error::DuplicateUser(index));
        }
        if b.len() != self.bits() {
            return Err(Error::LengthMismatch { expected: self.bits(), actual: b.len() });
        }
        self.db.insert(index, self.encrypt_bits(b, rng));
        self.id_table.insert(index, index);
        Ok(())
    }

    pub fn encrypt_bits<R: Rng + ?Sized>(&self, b: &Template, rng: &mut R) -> Vec<GmCiphertext> {
        b.iter().map(|bit| self.keys.public.encrypt(bit, rng)).collect()
    }

    pub fn bits(&self) -> usize {
        self.source.template_len()
    }

    pub fn threshold(&self) -> usize {
        self.threshold
    }

    pub fn public_key(&self) -> &GmPublicKey {
        &self.keys.public
    }

    pub fn keys(&self) -> &GmKeyPair {
        &self.keys
    }

    pub fn source(&self) -> &BiometricSource {
        &self.source
    }

    pub fn reference(&self, user: usize) -> Result<&Template> {
        self.source.ground_truth(user)
    }

    pub fn record(&self, index: usize) -> Result<&Vec<GmCiphertext>> {
        self.db.get(&index).ok_or(Error::UnknownUser(index))
    }

    pub fn decrypt_all(&self, cts: &[GmCiphertext]) -> Result<Template> {
        cts.iter().map(|c| self.keys.decrypt(c)).collect()
    }

    /// Componentwise product then a fresh uniform permutation.
    pub fn combine_cts<R: Rng + ?Sized>(
        &self,
        sample: &[GmCiphertext],
        reference: &[GmCiphertext],
        rng: &mut R,
    ) -> Result<Vec<GmCiphertext>> {
        if sample.len() != reference.len() {
            return Err(Error::LengthMismatch { expected: reference.len(), actual: sample.len() });
        }
        let mut out = sample
            .iter()
            .zip(reference)
            .map(|(a, b)| self.keys.public.hom_xor(a, b))
            .collect::<Result<Vec<_>>>()?;
        out.shuffle(rng);
        Ok(out)
    }

    /// Matcher decision: weight of the decrypted difference at most t.
    pub fn decide(&self, cts: &[GmCiphertext]) -> Result<bool> {
        let mut weight = 0;
        for c in cts {
            weight += self.keys.decrypt(c)? as usize;
        }
        Ok(weight <= self.threshold)
    }

    fn check_cts(&self, what: &str, cts: &[GmCiphertext]) -> std::result::Result<(), String> {
        expect_len(what, cts.len(), self.bits())?;
        match cts.iter().position(|c| !self.keys.public.is_valid(c)) {
            Some(i) => Err(format!("{what}: ciphertext {i} is not a unit with Jacobi symbol +1")),
            None => Ok(()),
        }
    }
}

impl Protocol for GmProtocol {
    type View = GmView;

    fn name(&self) -> &'static str {
        "gm2007"
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
                expect_len("presentation", b.len(), self.bits())
            }
            (Flow::F1, Payload::GmSample { id, cts }) => {
                if !self.id_table.contains_key(id) {
                    return Err(format!("unknown identity {id}"));
                }
                self.check_cts("sample", cts)
            }
            (Flow::G2, Payload::Lookup { index }) => {
                if self.db.contains_key(index) {
                    Ok(())
                } else {
                    Err(format!("no record {index}"))
                }
            }
            (Flow::F2, Payload::GmReference { cts }) => self.check_cts("reference", cts),
            (Flow::F3, Payload::GmCombined { cts }) => self.check_cts("combined", cts),
            (Flow::F4, Payload::Verdict { .. }) => Ok(()),
            _ => Err(unexpected(flow)),
        }
    }

    fn capture(&self, user: usize, rng: &mut dyn RngCore) -> Result<Capture> {
        self.source.capture(user, rng).map(Capture::Bits)
    }

    fn sensor_encode(&self, claimed: usize, capture: &Capture, rng: &mut dyn RngCore) -> Result<Payload> {
        let Capture::Bits(b) = capture else { return Err(internal("sensor")) };
        Ok(Payload::GmSample { id: claimed, cts: self.encrypt_bits(b, rng) })
    }

    fn lookup(&mut self, sample: &Payload) -> Result<Payload> {
        let Payload::GmSample { id, .. } = sample else { return Err(internal("lookup")) };
        let index = *self.id_table.get(id).ok_or(Error::UnknownUser(*id))?;
        Ok(Payload::Lookup { index })
    }

    fn db_respond(&mut self, request: &Payload, _rng: &mut dyn RngCore) -> Result<Payload> {
        let Payload::Lookup { index } = request else { return Err(internal("database")) };
        Ok(Payload::GmReference { cts: self.record(*index)?.clone() })
    }

    fn combine(&mut self, sample: &Payload, record: &Payload, rng: &mut dyn RngCore) -> Result<Payload> {
        let (Payload::GmSample { cts: s, .. }, Payload::GmReference { cts: r }) = (sample, record) else {
            return Err(internal("combine"));
        };
        Ok(Payload::GmCombined { cts: self.combine_cts(s, r, rng)? })
    }

    fn matcher_respond(&mut self, query: &Payload, _rng: &mut dyn RngCore) -> Result<Payload> {
        let Payload::GmCombined { cts } = query else { return Err(internal("matcher")) };
        Ok(Payload::Verdict { ok: self.decide(cts)? })
    }

    fn conclude(&mut self, answer: &Payload) -> Result<Decision> {
        let Payload::Verdict { ok } = answer else { return Err(internal("decision")) };
        Ok(if *ok { Decision::Ok } else { Decision::Nok })
    }

    fn view(&self, attacker: &AttackerSet) -> GmView {
        let knows_pk = attacker.contains(Role::Sensor)
            || attacker.contains(Role::Database)
            || attacker.contains(Role::Matcher)
            || (attacker.contains(Role::AuthServer) && self.as_knows_pk);
        GmView {
            bits: self.bits(),
            threshold: self.threshold,
            public_key: knows_pk.then(|| self.keys.public.clone()),
            secret_key: attacker.contains(Role::Matcher).then(|| self.keys.clone()),
            records: attacker.contains(Role::Database).then(|| self.db.clone()),
            id_table: attacker.contains(Role::AuthServer).then(|| self.id_table.clone()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::BitString;
    use crate::entity::{BlackboxSystem, Flow, RejectReason, Reply};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn small(noise: f64) -> GmProtocol {
        let params = GmParams { users: 3, bits: 12, threshold: 3, noise_prob: noise, ..GmParams::default() };
        GmProtocol::setup(&params, &mut ChaCha20Rng::seed_from_u64(1)).unwrap()
    }

    #[test]
    fn enrolled_records_decrypt_to_references() {
        let mut p = small(0.0);
        for u in 0..3 {
            let rec = p.record(u).unwrap();
            assert_eq!(rec.len(), 12);
            assert_eq!(&p.decrypt_all(rec).unwrap(), p.reference(u).unwrap());
        }
        let b = p.reference(0).unwrap().clone();
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        assert_eq!(p.enroll(0, &b, &mut rng), Err(Error::DuplicateUser(0)));
        p.enroll(7, &b, &mut rng).unwrap();
        assert_ne!(p.record(7).unwrap(), p.record(0).unwrap());
    }

    #[test]
    fn sensor_encoding_and_combination() {
        let mut p = small(0.0);
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let b = p.reference(1).unwrap().clone();
        let b2 = BitString::random(12, &mut rng);
        let Payload::GmSample { cts, .. } = p.sensor_encode(1, &Capture::Bits(b2.clone()), &mut rng).unwrap() else {
            panic!()
        };
        assert_eq!(p.decrypt_all(&cts).unwrap(), b2);
        let Payload::GmSample { cts: again, .. } = p.sensor_encode(1, &Capture::Bits(b2.clone()), &mut rng).unwrap()
        else {
            panic!()
        };
        assert_ne!(cts, again);
        let combined = p.combine_cts(&cts, p.record(1).unwrap(), &mut rng).unwrap();
        let diff = p.decrypt_all(&combined).unwrap();
        assert_eq!(diff.weight(), (&b ^ &b2).weight());
        let Payload::Lookup { index } = p.lookup(&Payload::GmSample { id: 1, cts }).unwrap() else { panic!() };
        assert_eq!(index, 1);
    }

    #[test]
    fn decision_at_threshold() {
        let p = small(0.0);
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let at = p.encrypt_bits(&BitString::with_ones(12, &[0, 4, 9]), &mut rng);
        let over = p.encrypt_bits(&BitString::with_ones(12, &[0, 4, 9, 11]), &mut rng);
        assert!(p.decide(&at).unwrap());
        assert!(!p.decide(&over).unwrap());
        assert!(p.decide(&p.encrypt_bits(&BitString::zeros(12), &mut rng)).unwrap());
    }

    #[test]
    fn honest_runs_and_ledger() {
        let mut sys = BlackboxSystem::new(small(0.0), AttackerSet::single(Role::AuthServer).unwrap(), 5);
        assert!(sys.ledger().is_zero());
        assert_eq!(sys.run_honest_auth(0, 0).unwrap(), Decision::Ok);
        for flow in [Flow::Capture, Flow::F1, Flow::G2, Flow::F2, Flow::F3, Flow::F4] {
            assert_eq!(sys.ledger().get(flow), 1, "{flow:?}");
        }
        assert_eq!(sys.ledger().total(), 6);
        for u in 0..3 {
            assert_eq!(sys.run_honest_auth(u, u).unwrap(), Decision::Ok);
        }
    }

    #[test]
    fn blackbox_rejections() {
        let p = small(0.0);
        let mut rng = ChaCha20Rng::seed_from_u64(6);
        let short = p.encrypt_bits(&BitString::zeros(11), &mut rng);
        let full = p.encrypt_bits(&BitString::zeros(12), &mut rng);
        let mut sys = BlackboxSystem::new(p, AttackerSet::single(Role::AuthServer).unwrap(), 7);
        let mut adv = sys.adversary();
        let r = adv.submit(Role::AuthServer, Role::Matcher, Payload::GmCombined { cts: full.clone() }).unwrap();
        assert!(matches!(r, Reply::Rejected(ref j) if j.reason == RejectReason::OutOfOrder));
        let r = adv.submit(Role::AuthServer, Role::Matcher, Payload::GmCombined { cts: short }).unwrap();
        assert!(matches!(r, Reply::Rejected(ref j) if j.reason == RejectReason::Malformed));
        assert!(adv.submit(Role::Sensor, Role::AuthServer, Payload::Lookup { index: 0 }).is_err());
        let r = adv.submit(Role::AuthServer, Role::Database, Payload::Lookup { index: 0 }).unwrap();
        assert!(matches!(r, Reply::Accepted(Payload::GmReference { .. })));
        let r = adv.submit(Role::AuthServer, Role::Matcher, Payload::GmCombined { cts: full }).unwrap();
        assert_eq!(r, Reply::Accepted(Payload::Verdict { ok: true }));
        assert_eq!(adv.attack_ledger().total(), 4);
        assert_eq!(sys.rejections(), 2);
        assert_eq!(sys.transcript().rejected(RejectReason::Malformed), 1);
        assert_eq!(sys.ledger().total(), 4);
    }

    #[test]
    fn attacker_view_hides_honest_secrets() {
        let mut sys = BlackboxSystem::new(small(0.05), AttackerSet::single(Role::AuthServer).unwrap(), 8);
        sys.run_honest_auth(2, 2).unwrap();
        let json = serde_json::to_string(&sys.adversary().view()).unwrap();
        let (p, q) = sys.escrow().keys().primes();
        assert!(!json.contains(&format!("\"{p}\"")));
        assert!(!json.contains(&format!("\"{q}\"")));
        assert!(!json.contains(&sys.escrow().reference(2).unwrap().to_string()));
        // the AS saw the sample, lookup, record, query and verdict
        assert_eq!(sys.adversary().observed().len(), 6);
    }
}
