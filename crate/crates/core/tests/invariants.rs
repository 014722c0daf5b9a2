use biometric_blackbox::attack::center::{self, center_search};
use biometric_blackbox::attack::far::{substitution_search, SubstitutionOracle, Word};
use biometric_blackbox::attack::query_counts;
use biometric_blackbox::attack::scenario::{run_scenario, ScenarioConfig, ScenarioParams};
use biometric_blackbox::coding::{make_sketch, recover_codeword, LinearCode};
use biometric_blackbox::entity::{AttackerSet, BlackboxSystem, Flow, Goal, REJECTION_CAP};
use biometric_blackbox::harness::{cmd_sweep, SWEEP_HEADER};
use biometric_blackbox::numtheory::GmKeyPair;
use biometric_blackbox::protocol::{GmParams, GmProtocol, ProtocolId};
use biometric_blackbox::{BitString, Result};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn bits(len: usize) -> impl Strategy<Value = BitString> {
    prop::collection::vec(any::<bool>(), len).prop_map(BitString::from_bits)
}

/// A reference and a word within distance `t` of it.
fn accepted_pair(n: usize, t: usize) -> impl Strategy<Value = (BitString, BitString)> {
    (bits(n), prop::collection::btree_set(0..n, 0..=t)).prop_map(move |(b, flips)| {
        let mut w = b.clone();
        for i in flips {
            w.flip(i);
        }
        (b, w)
    })
}

struct Plain {
    b: BitString,
    genuine: BitString,
    t: usize,
}

impl SubstitutionOracle for Plain {
    fn len(&self) -> usize {
        self.b.len()
    }

    fn accepts(&mut self, word: &Word) -> Result<bool> {
        let z: BitString = word.iter().zip(self.genuine.iter()).map(|(w, g)| w.unwrap_or(g)).collect();
        Ok(z.hamming(&self.b)? <= self.t)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn xor_is_an_involution_and_hamming_is_its_weight(a in bits(40), b in bits(40)) {
        let x = a.xor(&b).unwrap();
        prop_assert_eq!(x.xor(&b).unwrap(), a.clone());
        prop_assert_eq!(a.hamming(&b).unwrap(), x.weight());
    }

    #[test]
    fn center_search_recovers_within_bound((b, start) in accepted_pair(64, 10)) {
        let mut oracle = |w: &BitString| -> Result<bool> { Ok(w.hamming(&b)? <= 10) };
        let r = center_search(&mut oracle, &start, 10).unwrap();
        prop_assert_eq!(&r.reference, &b);
        prop_assert!(r.queries <= center::bound(64, 10));
    }

    #[test]
    fn substitution_search_is_exact((b, genuine) in accepted_pair(64, 10)) {
        let r = substitution_search(&mut Plain { b: b.clone(), genuine, t: 10 }, 10).unwrap();
        prop_assert_eq!(r.reference, b);
    }

    #[test]
    fn sketch_tolerates_the_decoding_radius(msg in bits(8), (b, b2) in accepted_pair(16, 2)) {
        let code = LinearCode::standard_16_8();
        let c = code.encode(&msg).unwrap();
        let s = make_sketch(&b, &c).unwrap();
        prop_assert_eq!(recover_codeword(&code, &s, &b2).unwrap(), Some(c));
    }

    #[test]
    fn gm_xor_homomorphism(seed in any::<u64>(), m in any::<bool>(), m2 in any::<bool>()) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let k = GmKeyPair::generate(16, &mut rng).unwrap();
        let c = k.public.hom_xor(&k.public.encrypt(m, &mut rng), &k.public.encrypt(m2, &mut rng)).unwrap();
        prop_assert_eq!(k.decrypt(&c).unwrap(), m ^ m2);
        prop_assert_eq!(k.decrypt(&k.public.rerandomize(&c, &mut rng)).unwrap(), m ^ m2);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn ledger_counts_every_accepted_message(seed in any::<u64>(), auths in 1usize..6) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let params = GmParams { users: 3, bits: 16, threshold: 3, prime_bits: 24, ..Default::default() };
        let proto = GmProtocol::setup(&params, &mut rng).unwrap();
        let mut sys = BlackboxSystem::new(proto, "as".parse::<AttackerSet>().unwrap(), seed);
        for i in 0..auths {
            sys.run_honest_auth(i % 3, i % 3).unwrap();
        }
        let ledger = sys.ledger();
        let per_channel: u64 = ledger.entries().map(|(_, n)| n).sum();
        prop_assert_eq!(ledger.total(), per_channel);
        for flow in [Flow::Capture, Flow::F1, Flow::G2, Flow::F2, Flow::F3, Flow::F4] {
            prop_assert_eq!(ledger.get(flow), auths as u64);
        }
        prop_assert!(sys.attack_ledger().is_zero());
        prop_assert!(sys.rejections() < REJECTION_CAP);
        let named = query_counts(sys.attack_ledger());
        prop_assert_eq!(named["matcher"], 0);
    }

    #[test]
    fn same_config_same_report(seed in any::<u64>(), protocol in prop::sample::select(ProtocolId::ALL.to_vec())) {
        let goal: Goal = "learn-reference".parse().unwrap();
        let attacker = if protocol == ProtocolId::Stoianov { "m+s" } else { "as" };
        let mut c = ScenarioConfig::new(protocol, attacker.parse().unwrap(), goal, seed);
        c.params = ScenarioParams { bits: 32, threshold: 5, features: 4, ..Default::default() };
        let a = run_scenario(&c).unwrap();
        let b = run_scenario(&c).unwrap();
        prop_assert!(a.success);
        prop_assert_eq!(a.canonical_json(), b.canonical_json());
    }
}

#[test]
fn sweep_csv_has_one_row_per_relevant_cell() {
    let params = ScenarioParams { bits: 32, threshold: 5, ..Default::default() };
    let report = cmd_sweep(&[ProtocolId::Stoianov], &params, 3).unwrap();
    let csv = report.to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(SWEEP_HEADER));
    assert_eq!(lines.count(), report.rows.len());
    assert_eq!(report.failures, 0);
    assert!(report.rows.iter().all(|r| r.goal != "trace-queries" || !r.attacker.contains("as")));
}
