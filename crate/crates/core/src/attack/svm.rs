//! Binary search on the encrypted SVM scores.

use num_bigint::BigUint;
use num_traits::{One, Zero};

use super::{expect_accepted, wait_for_flow};
use crate::entity::{Adversary, Flow, Payload, Role};
use crate::error::{Error, Result};
use crate::numtheory::{PaillierCiphertext, PaillierPublicKey};
use crate::protocol::SvmProtocol;

/// Matcher queries per searched value: the interval `[0, n)` halves each time.
pub fn queries_per_value(n: &BigUint) -> u64 {
    crate::numtheory::arith::ceil_log2(n)
}

fn probe(
    adv: &mut Adversary<'_, SvmProtocol>,
    pk: &PaillierPublicKey,
    classes: usize,
    target: &PaillierCiphertext,
    x: &BigUint,
) -> Result<bool> {
    let mut cts = Vec::with_capacity(classes);
    cts.push(pk.rerandomize(target, adv.rng()));
    cts.push(pk.encrypt(x, adv.rng())?);
    while cts.len() < classes {
        cts.push(pk.encrypt(&BigUint::zero(), adv.rng())?);
    }
    match expect_accepted(adv.submit(Role::AuthServer, Role::Matcher, Payload::SvmScores { cts })?)? {
        // ties go to the lower slot, so slot 0 wins iff target >= x
        Payload::SvmClass { index } => Ok(index == 0),
        other => Err(Error::Attack(format!("unexpected matcher answer {other:?}"))),
    }
}

/// Plaintext of one ciphertext by comparison against encryptions of guesses.
pub fn search_plaintext(
    adv: &mut Adversary<'_, SvmProtocol>,
    pk: &PaillierPublicKey,
    classes: usize,
    target: &PaillierCiphertext,
) -> Result<BigUint> {
    let (mut lo, mut hi) = (BigUint::zero(), &pk.n - 1u32);
    while lo < hi {
        let mid: BigUint = (&lo + &hi + 1u32) >> 1u32;
        if probe(adv, pk, classes, target, &mid)? {
            lo = mid;
        } else {
            hi = mid - 1u32;
        }
    }
    Ok(lo)
}

fn server_keys(adv: &Adversary<'_, SvmProtocol>) -> Result<(PaillierPublicKey, usize, usize)> {
    if !adv.controls(Role::AuthServer) {
        return Err(Error::InvalidAttacker("needs the authentication server".into()));
    }
    let view = adv.state();
    if view.classes < 2 {
        return Err(Error::InvalidParams("the search needs two score slots".into()));
    }
    Ok((view.public_key, view.classes, view.features))
}

/// Every coefficient `beta[j][l]`: one database query per feature with a unit
/// vector, then a binary search per class score.
pub fn server_learns_coefficients(adv: &mut Adversary<'_, SvmProtocol>) -> Result<Vec<Vec<BigUint>>> {
    let (pk, classes, features) = server_keys(adv)?;
    let mut beta = vec![vec![BigUint::zero(); features]; classes];
    for l in 0..features {
        let mut unit = Vec::with_capacity(features);
        for i in 0..features {
            let m = if i == l { BigUint::one() } else { BigUint::zero() };
            unit.push(pk.encrypt(&m, adv.rng())?);
        }
        let scores = match expect_accepted(adv.submit(Role::AuthServer, Role::Database, Payload::SvmQuery { cts: unit })?)? {
            Payload::SvmScores { cts } => cts,
            other => return Err(Error::Attack(format!("unexpected database answer {other:?}"))),
        };
        for (j, c) in scores.iter().enumerate() {
            beta[j][l] = search_plaintext(adv, &pk, classes, c)?;
        }
    }
    Ok(beta)
}

/// The features of a relayed genuine sample, by the same search.
pub fn server_learns_sample(adv: &mut Adversary<'_, SvmProtocol>) -> Result<Option<(u64, Vec<BigUint>)>> {
    let (pk, classes, _) = server_keys(adv)?;
    let Some(msg) = wait_for_flow(adv, Flow::F1, |_| true)? else { return Ok(None) };
    let Payload::SvmAuth { cts } = &msg.payload else { return Err(Error::Attack("odd sample".into())) };
    let values = cts.iter().map(|c| search_plaintext(adv, &pk, classes, c)).collect::<Result<_>>()?;
    Ok(Some((msg.seq, values)))
}

/// Matcher colluding with whoever sees the encrypted features: decrypt them.
pub fn matcher_decrypts_sample(adv: &mut Adversary<'_, SvmProtocol>) -> Result<Option<(u64, Vec<BigUint>)>> {
    let keys = adv.state().secret_key.ok_or_else(|| Error::InvalidAttacker("needs the matcher".into()))?;
    let seen_by = if adv.controls(Role::AuthServer) { Flow::F1 } else { Flow::G2 };
    let Some(msg) = wait_for_flow(adv, seen_by, |_| true)? else { return Ok(None) };
    let (Payload::SvmAuth { cts } | Payload::SvmQuery { cts }) = &msg.payload else {
        return Err(Error::Attack("odd sample".into()));
    };
    let values = cts.iter().map(|c| keys.decrypt(c)).collect::<Result<_>>()?;
    Ok(Some((msg.seq, values)))
}

/// Database and matcher together: decrypt the features the database is asked
/// about and classify them against the stored reference in the clear.
pub fn classify_fingerprint(adv: &Adversary<'_, SvmProtocol>, seen: &[crate::entity::Message]) -> Result<Option<String>> {
    let view = adv.state();
    let (Some(keys), Some(reference)) = (view.secret_key, view.reference) else {
        return Err(Error::InvalidAttacker("needs the database and the matcher".into()));
    };
    for m in seen.iter().filter(|m| m.flow == Flow::G2) {
        if let Payload::SvmQuery { cts } = &m.payload {
            let mut v = Vec::with_capacity(cts.len());
            for c in cts {
                let x = keys.decrypt(c)?;
                v.push(u64::try_from(&x).map_err(|_| Error::Attack("feature does not fit a machine word".into()))?);
            }
            let scores = reference.scores(&v, &keys.public.n);
            return Ok(Some(crate::protocol::svm::argmax(&scores).to_string()));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    use super::*;
    use crate::entity::{BlackboxSystem, Capture, RejectReason};
    use crate::protocol::SvmParams;

    fn system(attacker: &str, seed: u64, params: &SvmParams) -> BlackboxSystem<SvmProtocol> {
        let proto = SvmProtocol::setup(params, &mut ChaCha20Rng::seed_from_u64(seed)).unwrap();
        BlackboxSystem::new(proto, attacker.parse().unwrap(), seed)
    }

    #[test]
    fn recovers_all_coefficients() {
        let params = SvmParams { features: 3, ..SvmParams::default() };
        let mut sys = system("as", 5, &params);
        let beta = server_learns_coefficients(&mut sys.adversary()).unwrap();
        assert_eq!(beta, sys.escrow().beta());
        let n = &sys.escrow().public_key().n;
        assert!(sys.attack_ledger().get(Flow::F3) <= 3 * 3 * queries_per_value(n));
        assert_eq!(sys.attack_ledger().get(Flow::G2), 3);
        assert_eq!(sys.transcript().rejected(RejectReason::Malformed), 0);
    }

    #[test]
    fn zero_and_boundary_plaintexts() {
        let params = SvmParams { features: 2, ..SvmParams::default() };
        let mut sys = system("as", 6, &params);
        let pk = sys.escrow().public_key().clone();
        let top = &pk.n - 1u32;
        let mut adv = sys.adversary();
        expect_accepted(adv.submit(Role::AuthServer, Role::Database, Payload::SvmQuery {
            cts: vec![PaillierPublicKey::trivial_zero(); 2],
        }).unwrap())
        .unwrap();
        for value in [BigUint::zero(), BigUint::one(), top.clone(), &top >> 1u32] {
            let c = pk.encrypt(&value, adv.rng()).unwrap();
            assert_eq!(search_plaintext(&mut adv, &pk, 3, &c).unwrap(), value);
        }
    }

    #[test]
    fn sample_search_and_decryption() {
        let params = SvmParams { features: 2, ..SvmParams::default() };
        let mut sys = system("as", 7, &params);
        let (seq, v) = server_learns_sample(&mut sys.adversary()).unwrap().unwrap();
        let Some(Capture::Features(f)) = sys.presentation_for(seq) else { panic!() };
        assert_eq!(v, f.0.iter().map(|&x| BigUint::from(x)).collect::<Vec<_>>());

        let mut sys = system("db+m", 8, &params);
        let (seq, v) = matcher_decrypts_sample(&mut sys.adversary()).unwrap().unwrap();
        let Some(Capture::Features(f)) = sys.presentation_before(seq) else { panic!() };
        assert_eq!(v, f.0.iter().map(|&x| BigUint::from(x)).collect::<Vec<_>>());
    }
}
