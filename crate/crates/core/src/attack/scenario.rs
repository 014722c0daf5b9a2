//! Which attack answers which (attacker, goal) cell, and running one end to end.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use num_bigint::BigUint;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use super::report::{query_counts, AttackReport, Outcome};
use super::stoianov::{BlockOutcome, Collusion};
use super::trace::{self, TraceOutcome};
use super::{center, far, gm, stoianov, svm};
use crate::bits::BitString;
use crate::coding::LinearCode;
use crate::entity::{
    is_relevant, Adversary, AttackerSet, BlackboxSystem, Capture, Flow, Goal, Message, Payload, Protocol, Role,
};
use crate::error::{Error, Result};
use crate::numtheory::{arith::ceil_log2, hash_bytes};
use crate::protocol::{GmParams, GmProtocol, ProtocolId, StoParams, StoProtocol, SvmParams, SvmProtocol};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttackId {
    GmBitwise,
    GmMatcherSensor,
    GmDecryptReference,
    GmCenterSearch,
    GmFarSubstitution,
    GmBitwiseSample,
    GmDecryptSample,
    SvmBinarySearch,
    SvmSampleSearch,
    SvmDecryptSample,
    SvmOutcomeTrace,
    SvmClassifyTrace,
    StoMatcherSensor,
    StoMatcherDatabase,
    StoMatcherServer,
    StoBlock,
    StoCenterSearch,
    StoServerSample,
    StoDatabaseSample,
    StoCodewordTrace,
    LookupTrace,
    SensorDisclosure,
    SensorTrace,
}

impl AttackId {
    pub const ALL: [AttackId; 23] = [
        AttackId::GmBitwise,
        AttackId::GmMatcherSensor,
        AttackId::GmDecryptReference,
        AttackId::GmCenterSearch,
        AttackId::GmFarSubstitution,
        AttackId::GmBitwiseSample,
        AttackId::GmDecryptSample,
        AttackId::SvmBinarySearch,
        AttackId::SvmSampleSearch,
        AttackId::SvmDecryptSample,
        AttackId::SvmOutcomeTrace,
        AttackId::SvmClassifyTrace,
        AttackId::StoMatcherSensor,
        AttackId::StoMatcherDatabase,
        AttackId::StoMatcherServer,
        AttackId::StoBlock,
        AttackId::StoCenterSearch,
        AttackId::StoServerSample,
        AttackId::StoDatabaseSample,
        AttackId::StoCodewordTrace,
        AttackId::LookupTrace,
        AttackId::SensorDisclosure,
        AttackId::SensorTrace,
    ];

    pub fn name(self) -> String {
        serde_json::to_value(self).ok().and_then(|v| v.as_str().map(String::from)).expect("unit variants")
    }
}

impl fmt::Display for AttackId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for AttackId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AttackId::ALL
            .into_iter()
            .find(|a| a.name() == s.trim())
            .ok_or_else(|| Error::Parse(format!("unknown attack {s:?}")))
    }
}

/// One implemented way of reaching a goal, and the entities it needs.
#[derive(Clone, Copy, Debug)]
pub struct Route {
    pub goal: &'static str,
    pub needs: &'static [Role],
    pub attack: AttackId,
}

use Role::{AuthServer as AS, Database as DB, Matcher as M, Sensor as S};

const fn route(goal: &'static str, needs: &'static [Role], attack: AttackId) -> Route {
    Route { goal, needs, attack }
}

/// Routes in priority order; the first whose entities are all corrupted wins.
pub fn routes(protocol: ProtocolId) -> &'static [Route] {
    use AttackId::*;
    const GM: &[Route] = &[
        route("learn-reference", &[M, S], GmMatcherSensor),
        route("learn-reference", &[M, DB], GmDecryptReference),
        route("learn-reference", &[M, AS], GmDecryptReference),
        route("learn-reference", &[AS], GmBitwise),
        route("learn-reference", &[AS, S], GmCenterSearch),
        route("learn-reference", &[AS], GmFarSubstitution),
        route("learn-sample", &[S], SensorDisclosure),
        route("learn-sample", &[AS, M], GmDecryptSample),
        route("learn-sample", &[AS], GmBitwiseSample),
        route("trace-queries", &[S], SensorTrace),
        route("trace-queries", &[DB, M], LookupTrace),
    ];
    const SVM: &[Route] = &[
        route("learn-reference", &[AS], SvmBinarySearch),
        route("learn-sample", &[S], SensorDisclosure),
        route("learn-sample", &[AS, M], SvmDecryptSample),
        route("learn-sample", &[DB, M], SvmDecryptSample),
        route("learn-sample", &[AS], SvmSampleSearch),
        route("trace-queries", &[AS], SvmOutcomeTrace),
        route("trace-queries", &[DB, M], SvmClassifyTrace),
        route("trace-queries", &[S], SensorTrace),
    ];
    const STO: &[Route] = &[
        route("learn-reference", &[M, S], StoMatcherSensor),
        route("learn-reference", &[M, DB], StoMatcherDatabase),
        route("learn-reference", &[M, AS], StoMatcherServer),
        route("learn-reference", &[AS, S], StoBlock),
        route("learn-reference", &[AS, S], StoCenterSearch),
        route("learn-sample", &[S], SensorDisclosure),
        route("learn-sample", &[M, AS], StoServerSample),
        route("learn-sample", &[M, DB], StoDatabaseSample),
        route("trace-queries", &[M], StoCodewordTrace),
        route("trace-queries", &[DB], LookupTrace),
        route("trace-queries", &[S], SensorTrace),
    ];
    match protocol {
        ProtocolId::Gm => GM,
        ProtocolId::Svm => SVM,
        ProtocolId::Stoianov => STO,
    }
}

/// Why a cell has no attack.
pub fn unsupported_reason(protocol: ProtocolId, attacker: &AttackerSet, goal: Goal) -> &'static str {
    if goal == Goal::TraceIdentities {
        return "linking one user's references across applications needs several deployments; a single system is modelled";
    }
    let passive = attacker.primaries().all(|r| r != AS) && !attacker.contains(S);
    match (protocol, goal) {
        _ if passive && attacker.primaries().count() == 1 => {
            "this entity answers before it sees any input it could influence, so alone it can only listen"
        }
        (ProtocolId::Gm, Goal::LearnSample(_)) => {
            "the server permutes the combined ciphertexts, so positions of the fresh sample never reach these entities"
        }
        (ProtocolId::Stoianov, Goal::LearnReference(_)) => {
            "without the matcher's keystream or a known capture the server only isolates b xor b'"
        }
        (ProtocolId::Stoianov, Goal::LearnSample(_)) => {
            "the fresh keystream of each sample stays with the matcher; without it the sample cannot be separated from b"
        }
        _ => "no procedure for this combination",
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Plan {
    Attack(AttackId),
    Unsupported(&'static str),
    /// the goal is not relevant for this attacker under the deployment
    Irrelevant,
}

fn deployment(protocol: ProtocolId) -> crate::entity::Deployment {
    use crate::entity::{Deployment, Mode};
    match protocol {
        ProtocolId::Gm | ProtocolId::Stoianov => {
            Deployment { mode: Mode::Verification, db_stores_plaintext: false, identifiers_hidden: false }
        }
        ProtocolId::Svm => Deployment { mode: Mode::Identification, db_stores_plaintext: true, identifiers_hidden: false },
    }
}

/// Relevant goals for one protocol and attacker.
pub fn relevant(protocol: ProtocolId, attacker: &AttackerSet, goal: Goal) -> bool {
    is_relevant(attacker, goal, deployment(protocol))
}

pub fn plan(protocol: ProtocolId, attacker: &AttackerSet, goal: Goal, method: Option<AttackId>) -> Plan {
    if !relevant(protocol, attacker, goal) {
        return Plan::Irrelevant;
    }
    let fits = |r: &&Route| r.goal == goal.name() && r.needs.iter().all(|&n| attacker.contains(n));
    let found = routes(protocol).iter().filter(fits).find(|r| method.map_or(true, |m| m == r.attack));
    match (found, method) {
        (Some(r), _) => Plan::Attack(r.attack),
        (None, Some(_)) => Plan::Unsupported("the requested method does not apply to this attacker and goal"),
        (None, None) => Plan::Unsupported(unsupported_reason(protocol, attacker, goal)),
    }
}

/// Every relevant (attacker, goal) cell with its plan.
pub fn enumerate_scenarios(protocol: ProtocolId) -> Vec<(AttackerSet, Goal, Plan)> {
    let mut out = Vec::new();
    for attacker in AttackerSet::catalog() {
        for goal in Goal::TABLE {
            match plan(protocol, &attacker, goal, None) {
                Plan::Irrelevant => {}
                p => out.push((attacker.clone(), goal, p)),
            }
        }
    }
    out
}

/// Everything needed to build a system and run one attack.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioParams {
    pub users: usize,
    pub bits: usize,
    pub threshold: usize,
    pub prime_bits: u64,
    pub noise_prob: f64,
    pub classes: usize,
    pub samples: usize,
    pub features: usize,
    pub feature_max: u64,
    pub capture_delta: u64,
    /// generator matrix file; the shipped [16,8] code when absent
    pub code: Option<std::path::PathBuf>,
    pub code_radius: usize,
    pub block_len: usize,
    pub traffic_ticks: u64,
    pub trace_trials: u64,
    pub target: usize,
    pub disguise: bool,
    pub as_knows_pk: bool,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        let gm = GmParams::default();
        let svm = SvmParams::default();
        ScenarioParams {
            users: gm.users,
            bits: gm.bits,
            threshold: gm.threshold,
            prime_bits: gm.prime_bits,
            noise_prob: gm.noise_prob,
            classes: svm.classes,
            samples: svm.samples,
            features: svm.features,
            feature_max: svm.feature_max,
            capture_delta: svm.capture_delta,
            code: None,
            code_radius: 2,
            block_len: 4,
            traffic_ticks: 1000,
            trace_trials: 200,
            target: 0,
            disguise: false,
            as_knows_pk: true,
        }
    }
}

impl ScenarioParams {
    pub fn gm(&self) -> GmParams {
        GmParams {
            users: self.users,
            bits: self.bits,
            threshold: self.threshold,
            prime_bits: self.prime_bits,
            noise_prob: self.noise_prob,
            as_knows_pk: self.as_knows_pk,
        }
    }

    pub fn svm(&self) -> SvmParams {
        SvmParams {
            classes: self.classes,
            samples: self.samples,
            features: self.features,
            prime_bits: self.prime_bits,
            feature_max: self.feature_max,
            capture_delta: self.capture_delta,
        }
    }

    pub fn sto(&self) -> StoParams {
        StoParams { users: self.users, prime_bits: self.prime_bits, noise_prob: self.noise_prob }
    }

    pub fn linear_code(&self) -> Result<LinearCode> {
        match &self.code {
            Some(path) => LinearCode::load(path, self.code_radius),
            None => Ok(LinearCode::standard_16_8()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub protocol: ProtocolId,
    pub attacker: AttackerSet,
    pub goal: Goal,
    #[serde(default)]
    pub method: Option<AttackId>,
    #[serde(default)]
    pub params: ScenarioParams,
    pub seed: u64,
}

impl ScenarioConfig {
    pub fn new(protocol: ProtocolId, attacker: AttackerSet, goal: Goal, seed: u64) -> Self {
        ScenarioConfig { protocol, attacker, goal, method: None, params: ScenarioParams::default(), seed }
    }

    pub fn scenario_id(&self) -> String {
        format!("{}/{}/{}", self.protocol, self.attacker, self.goal)
    }

    /// Protocol-specific consistency checks.
    pub fn validate(&self) -> Result<()> {
        let p = &self.params;
        if p.users < 2 {
            return Err(Error::InvalidParams("need at least two enrolled users".into()));
        }
        if p.target >= p.users.max(p.classes) {
            return Err(Error::InvalidParams(format!("target user {} is not enrolled", p.target)));
        }
        match self.protocol {
            ProtocolId::Gm if p.threshold >= p.bits => {
                Err(Error::InvalidParams("threshold must be below the template length".into()))
            }
            ProtocolId::Svm if p.target >= p.classes => Err(Error::InvalidParams("target class out of range".into())),
            ProtocolId::Stoianov => {
                let code = p.linear_code()?;
                if p.block_len == 0 || p.block_len > code.length() {
                    return Err(Error::InvalidParams("block length must be between 1 and the code length".into()));
                }
                Ok(())
            }
            _ if !(0.0..=1.0).contains(&p.noise_prob) => Err(Error::InvalidParams("noise must be a probability".into())),
            _ => Ok(()),
        }
    }
}

/// What an attack produced, before verification.
#[derive(Clone, Debug, PartialEq)]
pub enum Recovered {
    Reference { user: usize, bits: BitString },
    /// `seq` is any message of the authentication the sample came from
    Sample { seq: u64, bits: BitString },
    Features { seq: u64, values: Vec<BigUint> },
    Coefficients(Vec<Vec<BigUint>>),
    Linkage(TraceOutcome),
}

struct Raw {
    recovered: Option<Recovered>,
    outcome: Option<Outcome>,
    bound: Option<u64>,
    note: Option<String>,
}

impl Raw {
    fn got(recovered: Recovered, bound: Option<u64>) -> Self {
        Raw { recovered: Some(recovered), outcome: None, bound, note: None }
    }

    fn waiting() -> Self {
        Raw { recovered: None, outcome: Some(Outcome::Waiting), bound: None, note: Some("no genuine accept within the traffic budget".into()) }
    }
}

/// Builds the system, runs the planned attack and checks it against escrow.
pub fn run_scenario(config: &ScenarioConfig) -> Result<AttackReport> {
    config.validate()?;
    let started = Instant::now();
    let plan = plan(config.protocol, &config.attacker, config.goal, config.method);
    let mut report = AttackReport {
        scenario: config.scenario_id(),
        protocol: config.protocol.to_string(),
        attacker: config.attacker.clone(),
        goal: config.goal,
        outcome: Outcome::Unsupported,
        success: false,
        queries: Default::default(),
        bound: None,
        bound_satisfied: true,
        recovered_digest: None,
        ticks_waited: 0,
        note: None,
        seed: config.seed,
        wall_ms: 0,
        method: None,
    };
    let attack = match plan {
        Plan::Attack(a) => a,
        Plan::Unsupported(why) => {
            report.note = Some(why.to_string());
            return Ok(report);
        }
        Plan::Irrelevant => {
            report.note = Some("goal not relevant for this attacker in this deployment".into());
            return Ok(report);
        }
    };
    report.method = Some(attack);
    let mut setup_rng = ChaCha20Rng::seed_from_u64(config.seed);
    let p = &config.params;
    match config.protocol {
        ProtocolId::Gm => {
            let proto = GmProtocol::setup(&p.gm(), &mut setup_rng)?;
            let sys = BlackboxSystem::new(proto, config.attacker.clone(), config.seed);
            finish(&mut report, sys, config, |sys| run_gm(sys, attack, config), verify_gm)?;
        }
        ProtocolId::Svm => {
            let proto = SvmProtocol::setup(&p.svm(), &mut setup_rng)?;
            let sys = BlackboxSystem::new(proto, config.attacker.clone(), config.seed);
            finish(&mut report, sys, config, |sys| run_svm(sys, attack, config), verify_svm)?;
        }
        ProtocolId::Stoianov => {
            let proto = StoProtocol::setup(p.linear_code()?, &p.sto(), &mut setup_rng)?;
            let sys = BlackboxSystem::new(proto, config.attacker.clone(), config.seed);
            finish(&mut report, sys, config, |sys| run_sto(sys, attack, config), verify_sto)?;
        }
    }
    report.wall_ms = started.elapsed().as_millis() as u64;
    Ok(report)
}

fn finish<P: Protocol>(
    report: &mut AttackReport,
    mut sys: BlackboxSystem<P>,
    config: &ScenarioConfig,
    run: impl FnOnce(&mut BlackboxSystem<P>) -> Result<Raw>,
    verify: impl FnOnce(&BlackboxSystem<P>, &Recovered, &ScenarioConfig) -> Result<bool>,
) -> Result<()> {
    sys.set_traffic_budget(config.params.traffic_ticks);
    let raw = match run(&mut sys) {
        Ok(raw) => raw,
        Err(Error::Attack(why)) => Raw { recovered: None, outcome: Some(Outcome::Fail), bound: None, note: Some(why) },
        Err(e) => return Err(e),
    };
    report.queries = query_counts(sys.attack_ledger());
    report.ticks_waited = sys.ticks();
    report.bound = raw.bound;
    report.note = raw.note;
    let spent = match report.method {
        Some(
            AttackId::GmMatcherSensor | AttackId::GmCenterSearch | AttackId::StoMatcherSensor | AttackId::StoCenterSearch,
        ) => report.queries_of("sensor"),
        _ => report.queries_of("matcher"),
    };
    report.bound_satisfied = raw.bound.map_or(true, |b| spent <= b);
    if let Some(outcome) = raw.outcome {
        report.outcome = outcome;
        return Ok(());
    }
    let recovered = raw.recovered.expect("either an outcome or a payload");
    report.recovered_digest = Some(hash_bytes(format!("{recovered:?}").as_bytes()).to_hex());
    report.success = verify(&sys, &recovered, config)?;
    if let Recovered::Linkage(t) = &recovered {
        report.note = Some(format!("advantage {:.3} over {} trials", t.advantage, t.trials));
    }
    report.outcome = if report.success && report.bound_satisfied { Outcome::Success } else { Outcome::Fail };
    Ok(())
}

/// Linkage counts as achieved at this advantage.
pub const TRACE_ADVANTAGE: f64 = 0.95;

fn sample_matches<P: Protocol>(sys: &BlackboxSystem<P>, seq: u64, bits: &BitString) -> bool {
    matches!(sys.presentation_before(seq), Some(Capture::Bits(b)) if b == bits)
}

fn verify_gm(sys: &BlackboxSystem<GmProtocol>, r: &Recovered, _: &ScenarioConfig) -> Result<bool> {
    Ok(match r {
        Recovered::Reference { user, bits } => sys.escrow().reference(*user)? == bits,
        Recovered::Sample { seq: f1_seq, bits } => sample_matches(sys, *f1_seq, bits),
        Recovered::Linkage(t) => t.advantage >= TRACE_ADVANTAGE,
        _ => false,
    })
}

fn verify_svm(sys: &BlackboxSystem<SvmProtocol>, r: &Recovered, _: &ScenarioConfig) -> Result<bool> {
    Ok(match r {
        Recovered::Coefficients(beta) => *beta == sys.escrow().beta(),
        Recovered::Features { seq, values } => matches!(
            sys.presentation_before(*seq),
            Some(Capture::Features(f)) if f.0.iter().map(|&x| BigUint::from(x)).eq(values.iter().cloned())
        ),
        Recovered::Linkage(t) => t.advantage >= TRACE_ADVANTAGE,
        _ => false,
    })
}

fn verify_sto(sys: &BlackboxSystem<StoProtocol>, r: &Recovered, _: &ScenarioConfig) -> Result<bool> {
    Ok(match r {
        Recovered::Reference { user, bits } => sys.escrow().reference(*user)? == bits,
        Recovered::Sample { seq: f1_seq, bits } => sample_matches(sys, *f1_seq, bits),
        Recovered::Linkage(t) => t.advantage >= TRACE_ADVANTAGE,
        _ => false,
    })
}

/// The corrupted sensor reads the capture it digitises.
fn sensor_disclosure<P: Protocol>(adv: &mut Adversary<'_, P>) -> Result<Option<(u64, Capture)>> {
    let Some(f1) = super::wait_for_flow(adv, Flow::F1, |_| true)? else { return Ok(None) };
    let capture = adv.observed().iter().rev().filter(|m| m.seq < f1.seq).find_map(|m| match &m.payload {
        Payload::Presentation { capture, .. } => Some(capture.clone()),
        _ => None,
    });
    Ok(capture.map(|c| (f1.seq, c)))
}

/// A genuine capture of `user` that the corrupted sensor saw accepted.
fn accepted_capture<P: Protocol>(sys: &mut BlackboxSystem<P>, user: usize) -> Result<Option<BitString>> {
    sys.set_traffic_user(Some(user));
    let mut adv = sys.adversary();
    loop {
        match adv.wait_for_traffic()? {
            None => return Ok(None),
            Some(d) if d.is_ok() => {
                let last = adv.observed().iter().rev().find(|m| m.flow == Flow::Capture);
                if let Some(Payload::Presentation { capture: Capture::Bits(b), .. }) = last.map(|m| &m.payload) {
                    return Ok(Some(b.clone()));
                }
            }
            Some(_) => {}
        }
    }
}

fn disclosed_bits<P: Protocol>(sys: &mut BlackboxSystem<P>) -> Result<Raw> {
    Ok(match sensor_disclosure(&mut sys.adversary())? {
        Some((f1_seq, Capture::Bits(bits))) => Raw::got(Recovered::Sample { seq: f1_seq, bits }, None),
        Some((f1_seq, Capture::Features(v))) => {
            Raw::got(Recovered::Features { seq: f1_seq, values: v.0.iter().map(|&x| BigUint::from(x)).collect() }, None)
        }
        None => Raw::waiting(),
    })
}

fn run_trace<P: Protocol>(
    sys: &mut BlackboxSystem<P>,
    config: &ScenarioConfig,
    stream: impl FnMut(&mut BlackboxSystem<P>, usize) -> Result<()>,
    fingerprint: impl FnMut(&Adversary<'_, P>, &[Message]) -> Result<Option<String>>,
) -> Result<Raw> {
    let mut rng = ChaCha20Rng::seed_from_u64(config.seed ^ 0x7472_6163_65);
    let out = trace::trace_experiment(sys, config.params.trace_trials, &mut rng, stream, fingerprint)?;
    Ok(Raw::got(Recovered::Linkage(out), None))
}

fn run_gm(sys: &mut BlackboxSystem<GmProtocol>, attack: AttackId, config: &ScenarioConfig) -> Result<Raw> {
    let p = &config.params;
    let user = p.target;
    let m = p.bits as u64;
    let reference = |bits| Recovered::Reference { user, bits };
    Ok(match attack {
        AttackId::GmBitwise => Raw::got(reference(gm::server_learns_reference(&mut sys.adversary(), user, p.disguise)?), Some(m)),
        AttackId::GmMatcherSensor => Raw::got(reference(gm::matcher_sensor_learns_reference(&mut sys.adversary(), user)?), Some(m)),
        AttackId::GmDecryptReference => Raw::got(reference(gm::matcher_decrypts_reference(&mut sys.adversary(), user)?), None),
        AttackId::GmCenterSearch => {
            let Some(start) = accepted_capture(sys, user)? else { return Ok(Raw::waiting()) };
            let mut adv = sys.adversary();
            let mut oracle = center::gm_sensor_oracle(&mut adv, user)?;
            let r = center::center_search(&mut oracle, &start, p.threshold)?;
            Raw::got(reference(r.reference), Some(center::bound(p.bits, p.threshold)))
        }
        AttackId::GmFarSubstitution => match far::server_far_attack(&mut sys.adversary())? {
            far::FarOutcome::Waiting => Raw::waiting(),
            far::FarOutcome::Recovered { user, result } => {
                let mut raw = Raw::got(Recovered::Reference { user, bits: result.reference }, Some(far::bound(p.bits, p.threshold)));
                raw.note = Some(format!("{} substitution queries", result.queries));
                raw
            }
        },
        AttackId::GmBitwiseSample => match gm::server_learns_sample(&mut sys.adversary(), p.disguise)? {
            Some((f1_seq, bits)) => Raw::got(Recovered::Sample { seq: f1_seq, bits }, Some(m)),
            None => Raw::waiting(),
        },
        AttackId::GmDecryptSample => match gm::matcher_decrypts_sample(&mut sys.adversary())? {
            Some((f1_seq, bits)) => Raw::got(Recovered::Sample { seq: f1_seq, bits }, None),
            None => Raw::waiting(),
        },
        AttackId::SensorDisclosure => disclosed_bits(sys)?,
        AttackId::SensorTrace => run_trace(sys, config, trace::honest_stream, trace::claim_fingerprint)?,
        AttackId::LookupTrace => run_trace(sys, config, trace::honest_stream, trace::lookup_fingerprint)?,
        other => return Err(Error::InvalidParams(format!("{other} does not apply to {}", config.protocol))),
    })
}

fn run_svm(sys: &mut BlackboxSystem<SvmProtocol>, attack: AttackId, config: &ScenarioConfig) -> Result<Raw> {
    let p = &config.params;
    let per_value = ceil_log2(&sys.escrow().public_key().n) + 1;
    Ok(match attack {
        AttackId::SvmBinarySearch => {
            let beta = svm::server_learns_coefficients(&mut sys.adversary())?;
            Raw::got(Recovered::Coefficients(beta), Some((p.classes * p.features) as u64 * per_value))
        }
        AttackId::SvmSampleSearch => match svm::server_learns_sample(&mut sys.adversary())? {
            Some((f1_seq, values)) => Raw::got(Recovered::Features { seq: f1_seq, values }, Some(p.features as u64 * per_value)),
            None => Raw::waiting(),
        },
        AttackId::SvmDecryptSample => match svm::matcher_decrypts_sample(&mut sys.adversary())? {
            Some((f1_seq, values)) => Raw::got(Recovered::Features { seq: f1_seq, values }, None),
            None => Raw::waiting(),
        },
        AttackId::SensorDisclosure => disclosed_bits(sys)?,
        AttackId::SvmOutcomeTrace => run_trace(sys, config, trace::honest_stream, trace::outcome_fingerprint)?,
        AttackId::SvmClassifyTrace => run_trace(sys, config, trace::honest_stream, svm::classify_fingerprint)?,
        AttackId::SensorTrace => run_trace(sys, config, trace::honest_stream, trace::claim_fingerprint)?,
        other => return Err(Error::InvalidParams(format!("{other} does not apply to {}", config.protocol))),
    })
}

fn collusion_raw(c: Collusion, goal: Goal, bound: Option<u64>) -> Raw {
    let recovered = match goal {
        Goal::LearnSample(_) => c.sample.map(|(f1_seq, bits)| Recovered::Sample { seq: f1_seq, bits }),
        _ => c.reference.map(|bits| Recovered::Reference { user: c.index, bits }),
    };
    match recovered {
        Some(r) => Raw::got(r, bound),
        None => Raw::waiting(),
    }
}

fn run_sto(sys: &mut BlackboxSystem<StoProtocol>, attack: AttackId, config: &ScenarioConfig) -> Result<Raw> {
    let p = &config.params;
    let user = p.target;
    sys.set_traffic_user(Some(user));
    let goal = config.goal;
    Ok(match attack {
        AttackId::StoMatcherSensor => collusion_raw(stoianov::matcher_sensor(&mut sys.adversary(), user, true)?, goal, Some(1)),
        AttackId::StoMatcherDatabase | AttackId::StoDatabaseSample => {
            collusion_raw(stoianov::matcher_database(&mut sys.adversary(), user, true)?, goal, None)
        }
        AttackId::StoMatcherServer => collusion_raw(stoianov::matcher_server(&mut sys.adversary(), user, true)?, goal, None),
        AttackId::StoServerSample => match stoianov::matcher_server_sample(&mut sys.adversary())? {
            Some((f1_seq, bits)) => Raw::got(Recovered::Sample { seq: f1_seq, bits }, None),
            None => Raw::waiting(),
        },
        AttackId::StoBlock => {
            let code = p.linear_code()?;
            let bound = stoianov::block_bound(code.length(), code.radius(), p.block_len);
            match stoianov::server_block_attack(&mut sys.adversary(), p.block_len)? {
                BlockOutcome::Waiting => Raw::waiting(),
                BlockOutcome::Ambiguous { block, queries } => Raw {
                    recovered: None,
                    outcome: Some(Outcome::Ambiguous),
                    bound: Some(bound),
                    note: Some(format!("block {block} stayed ambiguous after {queries} queries")),
                },
                BlockOutcome::Recovered(r) => match r.reference {
                    Some(bits) => Raw::got(Recovered::Reference { user: r.index, bits }, Some(bound)),
                    None => return Err(Error::Attack("no sensor capture to resolve b xor b'".into())),
                },
            }
        }
        AttackId::StoCenterSearch => {
            let Some(start) = accepted_capture(sys, user)? else { return Ok(Raw::waiting()) };
            let t = p.linear_code()?.radius();
            let mut adv = sys.adversary();
            let mut oracle = center::sto_sensor_oracle(&mut adv, user)?;
            let r = center::center_search(&mut oracle, &start, t)?;
            Raw::got(Recovered::Reference { user, bits: r.reference }, Some(center::bound(start.len(), t)))
        }
        AttackId::StoCodewordTrace => {
            sys.set_traffic_user(None);
            run_trace(sys, config, trace::accepted_stream, trace::codeword_fingerprint)?
        }
        AttackId::LookupTrace => run_trace(sys, config, trace::honest_stream, trace::lookup_fingerprint)?,
        AttackId::SensorDisclosure => disclosed_bits(sys)?,
        AttackId::SensorTrace => run_trace(sys, config, trace::honest_stream, trace::claim_fingerprint)?,
        other => return Err(Error::InvalidParams(format!("{other} does not apply to {}", config.protocol))),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entity::Level;

    fn set(s: &str) -> AttackerSet {
        s.parse().unwrap()
    }

    #[test]
    fn passive_database_has_no_attack() {
        let cells: Vec<_> = enumerate_scenarios(ProtocolId::Gm).into_iter().filter(|(a, _, _)| *a == set("db")).collect();
        assert_eq!(cells.len(), 4);
        assert!(cells.iter().all(|(_, _, p)| matches!(p, Plan::Unsupported(_))));
    }

    #[test]
    fn catalog_picks_the_named_attacks() {
        let lr = Goal::LearnReference(Level::Full);
        assert_eq!(plan(ProtocolId::Gm, &set("as"), lr, None), Plan::Attack(AttackId::GmBitwise));
        assert_eq!(plan(ProtocolId::Stoianov, &set("m+s"), lr, None), Plan::Attack(AttackId::StoMatcherSensor));
        assert_eq!(plan(ProtocolId::Svm, &set("db"), lr, None), Plan::Irrelevant);
        assert_eq!(plan(ProtocolId::Gm, &set("as"), Goal::TraceQueries, None), Plan::Irrelevant);
        assert!(matches!(plan(ProtocolId::Gm, &set("db"), lr, Some(AttackId::GmBitwise)), Plan::Unsupported(_)));
    }

    #[test]
    fn attack_ids_round_trip() {
        for id in AttackId::ALL {
            assert_eq!(id.name().parse::<AttackId>().unwrap(), id);
        }
    }

    #[test]
    fn small_gm_run_succeeds() {
        let mut c = ScenarioConfig::new(ProtocolId::Gm, set("as"), Goal::LearnReference(Level::Full), 2);
        c.params.bits = 24;
        c.params.threshold = 3;
        let r = run_scenario(&c).unwrap();
        assert_eq!(r.outcome, Outcome::Success);
        assert_eq!(r.queries_of("matcher"), 24);
    }

    #[test]
    fn far_attack_starves_without_traffic() {
        let mut c = ScenarioConfig::new(ProtocolId::Gm, set("as"), Goal::LearnReference(Level::Full), 3);
        c.method = Some(AttackId::GmFarSubstitution);
        c.params.traffic_ticks = 0;
        let r = run_scenario(&c).unwrap();
        assert_eq!(r.outcome, Outcome::Waiting);
        assert_eq!(r.queries_of("matcher"), 0);
    }

    #[test]
    fn validation_rejects_inconsistent_params() {
        let mut c = ScenarioConfig::new(ProtocolId::Gm, set("as"), Goal::TraceQueries, 1);
        c.params.threshold = c.params.bits;
        assert!(c.validate().is_err());
        c.params.threshold = 3;
        c.params.target = 99;
        assert!(c.validate().is_err());
    }
}
