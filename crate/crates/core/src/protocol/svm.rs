//! Paillier-encrypted linear SVM identification.
//!
//! Class scores follow `c_j(v) = sum_i alpha_ij * <v, SV_ij>`, evaluated by the
//! database under encryption and ranked by the matcher.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_traits::Zero;
use rand::seq::SliceRandom;
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use super::{expect_len, internal, unexpected};
use crate::biometric::FeatureVector;
use crate::entity::{AttackerSet, Capture, Decision, Deployment, Flow, Mode, Payload, Protocol, Role};
use crate::error::{Error, Result};
use crate::numtheory::{PaillierCiphertext, PaillierKeyPair, PaillierPublicKey};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub classes: usize,
    pub samples: usize,
    pub features: usize,
    pub prime_bits: u64,
    pub feature_max: u64,
    /// Largest per-feature deviation of a fresh capture.
    pub capture_delta: u64,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams { classes: 3, samples: 4, features: 8, prime_bits: 32, feature_max: 255, capture_delta: 2 }
    }
}

/// Support vectors `sv[j][i]` and weights `alpha[j][i]` for class `j`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SvmReference {
    pub sv: Vec<Vec<Vec<u64>>>,
    #[serde(with = "alpha_serde")]
    pub alpha: Vec<Vec<BigUint>>,
}

mod alpha_serde {
    use num_bigint::BigUint;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[Vec<BigUint>], s: S) -> Result<S::Ok, S::Error> {
        let strs: Vec<Vec<String>> = v.iter().map(|row| row.iter().map(|x| x.to_str_radix(10)).collect()).collect();
        strs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<BigUint>>, D::Error> {
        let strs = Vec::<Vec<String>>::deserialize(d)?;
        strs.into_iter()
            .map(|row| {
                row.into_iter()
                    .map(|x| {
                        BigUint::parse_bytes(x.as_bytes(), 10)
                            .ok_or_else(|| serde::de::Error::custom(format!("bad integer {x:?}")))
                    })
                    .collect()
            })
            .collect()
    }
}

impl SvmReference {
    pub fn classes(&self) -> usize {
        self.sv.len()
    }

    pub fn features(&self) -> usize {
        self.sv.first().and_then(|c| c.first()).map_or(0, Vec::len)
    }

    pub fn check(&self) -> Result<()> {
        let k = self.features();
        if self.sv.is_empty() || k == 0 || self.alpha.len() != self.sv.len() {
            return Err(Error::InvalidParams("empty or inconsistent reference".into()));
        }
        for (svs, alphas) in self.sv.iter().zip(&self.alpha) {
            if svs.len() != alphas.len() || svs.iter().any(|v| v.len() != k) {
                return Err(Error::InvalidParams("inconsistent reference dimensions".into()));
            }
        }
        Ok(())
    }

    /// `beta[j][l] = sum_i alpha_ij * SV_ij[l] mod n`.
    pub fn beta(&self, n: &BigUint) -> Vec<Vec<BigUint>> {
        self.sv
            .iter()
            .zip(&self.alpha)
            .map(|(svs, alphas)| {
                (0..self.features())
                    .map(|l| {
                        svs.iter().zip(alphas).fold(BigUint::zero(), |acc, (sv, a)| acc + a * sv[l]) % n
                    })
                    .collect()
            })
            .collect()
    }

    /// Plaintext class scores mod n, evaluated from the double sum.
    pub fn scores(&self, v: &[u64], n: &BigUint) -> Vec<BigUint> {
        self.sv
            .iter()
            .zip(&self.alpha)
            .map(|(svs, alphas)| {
                let total = svs.iter().zip(alphas).fold(BigUint::zero(), |acc, (sv, a)| {
                    let dot: BigUint = sv.iter().zip(v).map(|(&s, &x)| BigUint::from(s) * x).sum();
                    acc + a * dot
                });
                total % n
            })
            .collect()
    }
}

/// Index of the largest value, lowest index on ties.
pub fn argmax(values: &[BigUint]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if v > &values[best] {
            best = i;
        }
    }
    best
}

pub struct SvmProtocol {
    keys: PaillierKeyPair,
    reference: SvmReference,
    templates: BTreeMap<usize, FeatureVector>,
    feature_max: u64,
    capture_delta: u64,
    unscramble: Vec<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SvmView {
    pub classes: usize,
    pub features: usize,
    pub public_key: PaillierPublicKey,
    pub secret_key: Option<PaillierKeyPair>,
    pub reference: Option<SvmReference>,
    pub unscramble: Option<Vec<usize>>,
}

impl SvmProtocol {
    /// Draws user templates and a reference that classifies each template to its own
    /// class with margin and keeps every score below n/2.
    pub fn setup<R: Rng + ?Sized>(params: &SvmParams, rng: &mut R) -> Result<Self> {
        if params.classes < 2 || params.samples == 0 || params.features == 0 {
            return Err(Error::InvalidParams("need at least two classes, one sample, one feature".into()));
        }
        let keys = PaillierKeyPair::generate(params.prime_bits, rng)?;
        let half = &keys.public.n >> 1u32;
        for _ in 0..10_000 {
            let templates: Vec<FeatureVector> =
                (0..params.classes).map(|_| FeatureVector::random(params.features, params.feature_max, rng)).collect();
            let reference = synth_reference(&templates, params, rng);
            if acceptable(&reference, &templates, params, &keys.public.n, &half) {
                return Self::from_parts(keys, reference, templates, params);
            }
        }
        Err(Error::InvalidParams("could not draw a separable reference; enlarge the key".into()))
    }

    pub fn from_parts(
        keys: PaillierKeyPair,
        reference: SvmReference,
        templates: Vec<FeatureVector>,
        params: &SvmParams,
    ) -> Result<Self> {
        reference.check()?;
        if templates.len() != reference.classes() {
            return Err(Error::InvalidParams("one template per class required".into()));
        }
        Ok(SvmProtocol {
            unscramble: (0..reference.classes()).collect(),
            keys,
            reference,
            templates: templates.into_iter().enumerate().collect(),
            feature_max: params.feature_max,
            capture_delta: params.capture_delta,
        })
    }

    pub fn keys(&self) -> &PaillierKeyPair {
        &self.keys
    }

    pub fn public_key(&self) -> &PaillierPublicKey {
        &self.keys.public
    }

    pub fn reference(&self) -> &SvmReference {
        &self.reference
    }

    pub fn template(&self, user: usize) -> Result<&FeatureVector> {
        self.templates.get(&user).ok_or(Error::UnknownUser(user))
    }

    pub fn beta(&self) -> Vec<Vec<BigUint>> {
        self.reference.beta(&self.keys.public.n)
    }

    pub fn classes(&self) -> usize {
        self.reference.classes()
    }

    pub fn features(&self) -> usize {
        self.reference.features()
    }

    pub fn encrypt_features<R: RngCore + ?Sized>(&self, v: &[u64], rng: &mut R) -> Result<Vec<PaillierCiphertext>> {
        v.iter().map(|&x| self.keys.public.encrypt_u64(x, rng)).collect()
    }

    /// Encrypted evaluation: `c_j = prod_i (prod_l auth_l^{SV_ij[l]})^{alpha_ij}`.
    pub fn classify_encrypted(&self, auth: &[PaillierCiphertext]) -> Result<Vec<PaillierCiphertext>> {
        let pk = &self.keys.public;
        if auth.len() != self.features() {
            return Err(Error::LengthMismatch { expected: self.features(), actual: auth.len() });
        }
        let mut out = Vec::with_capacity(self.classes());
        for (svs, alphas) in self.reference.sv.iter().zip(&self.reference.alpha) {
            let mut c = PaillierPublicKey::trivial_zero();
            for (sv, alpha) in svs.iter().zip(alphas) {
                let mut inner = PaillierPublicKey::trivial_zero();
                for (a, &s) in auth.iter().zip(sv) {
                    inner = pk.hom_add(&inner, &pk.scalar_mul(a, &BigUint::from(s))?)?;
                }
                c = pk.hom_add(&c, &pk.scalar_mul(&inner, alpha)?)?;
            }
            out.push(c);
        }
        Ok(out)
    }

    pub fn decrypt_all(&self, cts: &[PaillierCiphertext]) -> Result<Vec<BigUint>> {
        cts.iter().map(|c| self.keys.decrypt(c)).collect()
    }

    fn check_cts(&self, what: &str, cts: &[PaillierCiphertext], len: usize) -> std::result::Result<(), String> {
        expect_len(what, cts.len(), len)?;
        match cts.iter().position(|c| !self.keys.public.is_valid(c)) {
            Some(i) => Err(format!("{what}: ciphertext {i} outside Z_(n^2)*")),
            None => Ok(()),
        }
    }
}

fn synth_reference<R: Rng + ?Sized>(templates: &[FeatureVector], params: &SvmParams, rng: &mut R) -> SvmReference {
    let mut sv = Vec::new();
    let mut alpha = Vec::new();
    for t in templates {
        let norm2: u64 = t.0.iter().map(|x| x * x).sum::<u64>().max(1);
        // weights roughly equalise class score scales
        let base = ((1u64 << 24) / norm2).max(1);
        let svs: Vec<Vec<u64>> =
            (0..params.samples).map(|_| t.perturbed(params.capture_delta, params.feature_max, rng).0).collect();
        let alphas: Vec<BigUint> = (0..params.samples).map(|_| BigUint::from(base + rng.gen_range(0..=base / 8))).collect();
        sv.push(svs);
        alpha.push(alphas);
    }
    SvmReference { sv, alpha }
}

fn acceptable(
    reference: &SvmReference,
    templates: &[FeatureVector],
    params: &SvmParams,
    n: &BigUint,
    half: &BigUint,
) -> bool {
    if reference.beta(n).iter().flatten().any(|b| b >= half) {
        return false;
    }
    let all_max = vec![params.feature_max; params.features];
    if reference.scores(&all_max, n).iter().any(|s| s >= half) {
        return false;
    }
    templates.iter().enumerate().all(|(j, t)| {
        let scores = reference.scores(&t.0, n);
        // 5% margin so perturbed captures stay on the right side
        let own = &scores[j] * 100u32;
        scores.iter().enumerate().all(|(u, s)| u == j || own > s * 105u32)
    })
}

impl Protocol for SvmProtocol {
    type View = SvmView;

    fn name(&self) -> &'static str {
        "svm2008"
    }

    fn deployment(&self) -> Deployment {
        Deployment { mode: Mode::Identification, db_stores_plaintext: true, identifiers_hidden: false }
    }

    fn users(&self) -> Vec<usize> {
        self.templates.keys().copied().collect()
    }

    fn validate(&self, flow: Flow, payload: &Payload) -> std::result::Result<(), String> {
        let n = &self.keys.public.n;
        match (flow, payload) {
            (Flow::Capture, Payload::Presentation { capture: Capture::Features(v), .. }) => {
                expect_len("presentation", v.len(), self.features())?;
                if v.0.iter().any(|&x| BigUint::from(x) >= *n) {
                    return Err("feature outside Z_n".into());
                }
                Ok(())
            }
            (Flow::F1, Payload::SvmAuth { cts }) => self.check_cts("auth", cts, self.features()),
            (Flow::G2, Payload::SvmQuery { cts }) => self.check_cts("query", cts, self.features()),
            (Flow::F2 | Flow::F3, Payload::SvmScores { cts }) => self.check_cts("scores", cts, self.classes()),
            (Flow::F4, Payload::SvmClass { index }) if *index < self.classes() => Ok(()),
            _ => Err(unexpected(flow)),
        }
    }

    fn capture(&self, user: usize, rng: &mut dyn RngCore) -> Result<Capture> {
        let t = self.template(user)?;
        Ok(Capture::Features(t.perturbed(self.capture_delta, self.feature_max, rng)))
    }

    fn sensor_encode(&self, _claimed: usize, capture: &Capture, rng: &mut dyn RngCore) -> Result<Payload> {
        let Capture::Features(v) = capture else { return Err(internal("sensor")) };
        Ok(Payload::SvmAuth { cts: self.encrypt_features(&v.0, rng)? })
    }

    fn lookup(&mut self, sample: &Payload) -> Result<Payload> {
        let Payload::SvmAuth { cts } = sample else { return Err(internal("lookup")) };
        Ok(Payload::SvmQuery { cts: cts.clone() })
    }

    fn db_respond(&mut self, request: &Payload, _rng: &mut dyn RngCore) -> Result<Payload> {
        let Payload::SvmQuery { cts } = request else { return Err(internal("database")) };
        Ok(Payload::SvmScores { cts: self.classify_encrypted(cts)? })
    }

    fn combine(&mut self, _sample: &Payload, record: &Payload, rng: &mut dyn RngCore) -> Result<Payload> {
        let Payload::SvmScores { cts } = record else { return Err(internal("combine")) };
        let mut order: Vec<usize> = (0..cts.len()).collect();
        order.shuffle(rng);
        // slot s of the forwarded vector holds class order[s]
        self.unscramble = order.clone();
        Ok(Payload::SvmScores { cts: order.iter().map(|&j| cts[j].clone()).collect() })
    }

    fn matcher_respond(&mut self, query: &Payload, _rng: &mut dyn RngCore) -> Result<Payload> {
        let Payload::SvmScores { cts } = query else { return Err(internal("matcher")) };
        Ok(Payload::SvmClass { index: argmax(&self.decrypt_all(cts)?) })
    }

    fn conclude(&mut self, answer: &Payload) -> Result<Decision> {
        let Payload::SvmClass { index } = answer else { return Err(internal("decision")) };
        let class = *self.unscramble.get(*index).ok_or_else(|| internal("class index"))?;
        Ok(Decision::Identified(class))
    }

    fn view(&self, attacker: &AttackerSet) -> SvmView {
        SvmView {
            classes: self.classes(),
            features: self.features(),
            public_key: self.keys.public.clone(),
            secret_key: attacker.contains(Role::Matcher).then(|| self.keys.clone()),
            reference: attacker.contains(Role::Database).then(|| self.reference.clone()),
            unscramble: attacker.contains(Role::AuthServer).then(|| self.unscramble.clone()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entity::BlackboxSystem;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn b(x: u64) -> BigUint {
        BigUint::from(x)
    }

    fn toy() -> SvmProtocol {
        let keys = PaillierKeyPair::from_primes(b(5), b(7)).unwrap();
        let reference = SvmReference {
            sv: vec![vec![vec![1, 2], vec![0, 1]], vec![vec![3, 0], vec![1, 1]]],
            alpha: vec![vec![b(2), b(3)], vec![b(1), b(4)]],
        };
        let templates = vec![FeatureVector(vec![1, 1]), FeatureVector(vec![2, 0])];
        let params = SvmParams { classes: 2, samples: 2, features: 2, feature_max: 4, capture_delta: 0, ..Default::default() };
        SvmProtocol::from_parts(keys, reference, templates, &params).unwrap()
    }

    #[test]
    fn toy_coefficients_and_scores() {
        let p = toy();
        // class 0: 2*(1,2) + 3*(0,1) = (2,7); class 1: (3,0) + 4*(1,1) = (7,4)
        assert_eq!(p.beta(), vec![vec![b(2), b(7)], vec![b(7), b(4)]]);
        assert_eq!(p.reference().scores(&[1, 1], &b(35)), vec![b(9), b(11)]);
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        for v in [[1u64, 0], [0, 0], [3, 4]] {
            let cts = p.classify_encrypted(&p.encrypt_features(&v, &mut rng).unwrap()).unwrap();
            assert_eq!(p.decrypt_all(&cts).unwrap(), p.reference().scores(&v, &b(35)));
        }
        let unit = p.classify_encrypted(&p.encrypt_features(&[1, 0], &mut rng).unwrap()).unwrap();
        assert_eq!(p.decrypt_all(&unit).unwrap(), vec![b(2), b(7)]);
    }

    #[test]
    fn argmax_rules() {
        assert_eq!(argmax(&[b(5), b(9), b(1)]), 1);
        assert_eq!(argmax(&[b(4), b(4), b(4)]), 0);
    }

    #[test]
    fn generated_reference_identifies_users() {
        let params = SvmParams::default();
        let p = SvmProtocol::setup(&params, &mut ChaCha20Rng::seed_from_u64(2)).unwrap();
        let n = p.public_key().n.clone();
        let half = &n >> 1u32;
        assert!(p.beta().iter().flatten().all(|x| x < &half));
        let mut sys = BlackboxSystem::new(p, AttackerSet::single(Role::AuthServer).unwrap(), 3);
        for u in 0..3 {
            for _ in 0..3 {
                assert_eq!(sys.run_honest_auth(u, u).unwrap(), Decision::Identified(u));
            }
        }
    }

    #[test]
    fn reference_json_round_trip() {
        let p = toy();
        let json = serde_json::to_string(p.reference()).unwrap();
        assert!(json.contains("\"4\""));
        assert_eq!(&serde_json::from_str::<SvmReference>(&json).unwrap(), p.reference());
    }
}
