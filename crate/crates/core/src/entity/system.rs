use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use super::{
    AttackerSet, Capture, Decision, Deployment, Flow, Ledger, Message, Payload, Rejection, Role,
    Transcript, TranscriptRecord,
};
use crate::error::{Error, Result};

/// Rejected submissions are free but bounded per system.
pub const REJECTION_CAP: u64 = 1_000_000;

/// Honest behaviour of every entity for one protocol.
///
/// The system routes messages between these handlers; corrupted entities run the
/// same code, their state is just also visible through [`Protocol::view`].
pub trait Protocol {
    type View: Serialize + Clone;

    fn name(&self) -> &'static str;
    fn deployment(&self) -> Deployment;
    fn users(&self) -> Vec<usize>;
    /// Structural well-formedness of a payload for a flow.
    fn validate(&self, flow: Flow, payload: &Payload) -> std::result::Result<(), String>;
    /// Fresh presentation by an honest user.
    fn capture(&self, user: usize, rng: &mut dyn RngCore) -> Result<Capture>;
    fn sensor_encode(&self, claimed: usize, capture: &Capture, rng: &mut dyn RngCore) -> Result<Payload>;
    /// The authentication server's lookup request for an incoming sample.
    fn lookup(&mut self, sample: &Payload) -> Result<Payload>;
    fn db_respond(&mut self, request: &Payload, rng: &mut dyn RngCore) -> Result<Payload>;
    /// The authentication server's matcher query for a sample and a database answer.
    fn combine(&mut self, sample: &Payload, record: &Payload, rng: &mut dyn RngCore) -> Result<Payload>;
    fn matcher_respond(&mut self, query: &Payload, rng: &mut dyn RngCore) -> Result<Payload>;
    /// Final authorization from the matcher's answer.
    fn conclude(&mut self, answer: &Payload) -> Result<Decision>;
    /// Internal state of the corrupted entities.
    fn view(&self, attacker: &AttackerSet) -> Self::View;
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Reply {
    Accepted(Payload),
    Rejected(Rejection),
}

impl Reply {
    pub fn accepted(self) -> Option<Payload> {
        match self {
            Reply::Accepted(p) => Some(p),
            Reply::Rejected(_) => None,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AttackerView<V> {
    pub attacker: AttackerSet,
    pub state: V,
    pub observed: Vec<Message>,
}

/// A protocol instance behind the blackbox boundary.
pub struct BlackboxSystem<P: Protocol> {
    protocol: P,
    attacker: AttackerSet,
    honest_rng: ChaCha20Rng,
    attacker_rng: ChaCha20Rng,
    ledger: Ledger,
    attack_ledger: Ledger,
    transcript: Transcript,
    observed: Vec<Message>,
    seq: u64,
    rejections: u64,
    fetched: bool,
    in_attack: bool,
    ticks: u64,
    traffic_budget: u64,
    traffic_user: Option<usize>,
    next_user: usize,
    presented: Vec<(u64, usize, Capture)>,
}

impl<P: Protocol> BlackboxSystem<P> {
    pub fn new(protocol: P, attacker: AttackerSet, seed: u64) -> Self {
        let mut root = ChaCha20Rng::seed_from_u64(seed);
        let honest_rng = ChaCha20Rng::seed_from_u64(root.gen());
        let attacker_rng = ChaCha20Rng::seed_from_u64(root.gen());
        BlackboxSystem {
            protocol,
            attacker,
            honest_rng,
            attacker_rng,
            ledger: Ledger::default(),
            attack_ledger: Ledger::default(),
            transcript: Transcript::default(),
            observed: Vec::new(),
            seq: 0,
            rejections: 0,
            fetched: false,
            in_attack: false,
            ticks: 0,
            traffic_budget: u64::MAX,
            traffic_user: None,
            next_user: 0,
            presented: Vec::new(),
        }
    }

    pub fn attacker(&self) -> &AttackerSet {
        &self.attacker
    }

    pub fn ledger(&self) -> &Ledger {
        &self.ledger
    }

    /// Messages caused by adversary submissions.
    pub fn attack_ledger(&self) -> &Ledger {
        &self.attack_ledger
    }

    pub fn transcript(&self) -> &Transcript {
        &self.transcript
    }

    pub fn rejections(&self) -> u64 {
        self.rejections
    }

    pub fn ticks(&self) -> u64 {
        self.ticks
    }

    /// Ground truth for test oracles. Never handed to attack code.
    pub fn escrow(&self) -> &P {
        &self.protocol
    }

    pub fn escrow_mut(&mut self) -> &mut P {
        &mut self.protocol
    }

    /// Presentations that went through the sensor, keyed by the sequence number of
    /// the sample message they produced.
    pub fn presented(&self) -> &[(u64, usize, Capture)] {
        &self.presented
    }

    pub fn presentation_for(&self, f1_seq: u64) -> Option<&Capture> {
        self.presented.iter().find(|(s, _, _)| *s == f1_seq).map(|(_, _, c)| c)
    }

    /// The presentation behind the authentication that message `seq` belongs to.
    pub fn presentation_before(&self, seq: u64) -> Option<&Capture> {
        self.presented.iter().rev().find(|(s, _, _)| *s <= seq).map(|(_, _, c)| c)
    }

    pub fn set_traffic_budget(&mut self, ticks: u64) {
        self.traffic_budget = ticks;
    }

    /// Restricts scripted genuine traffic to one user.
    pub fn set_traffic_user(&mut self, user: Option<usize>) {
        self.traffic_user = user;
    }

    pub fn adversary(&mut self) -> Adversary<'_, P> {
        Adversary { sys: self }
    }

    /// Flows (1)-(6) for an honest user with a fresh capture.
    pub fn run_honest_auth(&mut self, user: usize, claimed: usize) -> Result<Decision> {
        let capture = self.protocol.capture(user, &mut self.honest_rng)?;
        self.run_auth_with(claimed, capture)
    }

    /// Flows (1)-(6) for a given presentation, bypassing the adversary.
    pub fn run_auth_with(&mut self, claimed: usize, capture: Capture) -> Result<Decision> {
        let payload = Payload::Presentation { claimed, capture };
        self.protocol
            .validate(Flow::Capture, &payload)
            .map_err(Error::InvalidParams)?;
        self.record(Role::User, Role::Sensor, Flow::Capture, payload.clone());
        self.from_sensor(payload)
    }

    /// One tick of scripted genuine traffic.
    pub fn tick(&mut self) -> Result<Option<Decision>> {
        if self.ticks >= self.traffic_budget {
            return Ok(None);
        }
        self.ticks += 1;
        let user = match self.traffic_user {
            Some(u) => u,
            None => {
                let users = self.protocol.users();
                let u = users[self.next_user % users.len()];
                self.next_user += 1;
                u
            }
        };
        self.run_honest_auth(user, user).map(Some)
    }

    fn record(&mut self, from: Role, to: Role, flow: Flow, payload: Payload) -> Message {
        self.seq += 1;
        self.transcript.push(TranscriptRecord {
            seq: self.seq,
            from,
            to,
            kind: Some(flow),
            accepted: true,
            reason: None,
            digest: payload.digest().to_hex(),
        });
        let msg = Message { seq: self.seq, from, to, flow, payload };
        if flow != Flow::Feedback {
            self.ledger.record(from, to, flow);
            if self.in_attack {
                self.attack_ledger.record(from, to, flow);
            }
        }
        if self.attacker.contains(from) || self.attacker.contains(to) {
            self.observed.push(msg.clone());
        }
        msg
    }

    fn reject(&mut self, from: Role, to: Role, payload: &Payload, rejection: Rejection) -> Result<Reply> {
        self.rejections += 1;
        if self.rejections > REJECTION_CAP {
            return Err(Error::RejectionCap(REJECTION_CAP));
        }
        self.seq += 1;
        self.transcript.push(TranscriptRecord {
            seq: self.seq,
            from,
            to,
            kind: Flow::on_edge(from, to),
            accepted: false,
            reason: Some(rejection.reason),
            digest: payload.digest().to_hex(),
        });
        Ok(Reply::Rejected(rejection))
    }

    fn from_sensor(&mut self, presentation: Payload) -> Result<Decision> {
        let Payload::Presentation { claimed, capture } = &presentation else {
            return Err(Error::InvalidParams("expected a presentation".into()));
        };
        let sample = self.protocol.sensor_encode(*claimed, capture, &mut self.honest_rng)?;
        let f1 = self.record(Role::Sensor, Role::AuthServer, Flow::F1, sample.clone());
        self.presented.push((f1.seq, *claimed, capture.clone()));
        self.at_auth_server(sample)
    }

    fn at_auth_server(&mut self, sample: Payload) -> Result<Decision> {
        let request = self.protocol.lookup(&sample)?;
        let record = self.to_database(request)?;
        let query = self.protocol.combine(&sample, &record, &mut self.honest_rng)?;
        let answer = self.to_matcher(query)?;
        let decision = self.protocol.conclude(&answer)?;
        self.record(Role::AuthServer, Role::Sensor, Flow::Feedback, Payload::Feedback { decision });
        Ok(decision)
    }

    fn to_database(&mut self, request: Payload) -> Result<Payload> {
        self.record(Role::AuthServer, Role::Database, Flow::G2, request.clone());
        self.fetched = true;
        let record = self.protocol.db_respond(&request, &mut self.honest_rng)?;
        self.record(Role::Database, Role::AuthServer, Flow::F2, record.clone());
        Ok(record)
    }

    fn to_matcher(&mut self, query: Payload) -> Result<Payload> {
        self.record(Role::AuthServer, Role::Matcher, Flow::F3, query.clone());
        let answer = self.protocol.matcher_respond(&query, &mut self.honest_rng)?;
        self.record(Role::Matcher, Role::AuthServer, Flow::F4, answer.clone());
        Ok(answer)
    }

    fn submit(&mut self, from: Role, to: Role, payload: Payload) -> Result<Reply> {
        if !self.attacker.contains(from) {
            return Err(Error::NotControlled(format!("{from} is not attacker-controlled")));
        }
        let Some(flow) = Flow::on_edge(from, to) else {
            return self.reject(from, to, &payload, Rejection::malformed(format!("no channel {from}->{to}")));
        };
        if let Err(why) = self.protocol.validate(flow, &payload) {
            return self.reject(from, to, &payload, Rejection::malformed(why));
        }
        match flow {
            Flow::F2 | Flow::F4 => {
                return self.reject(from, to, &payload, Rejection::out_of_order("no pending request"));
            }
            Flow::F3 if !self.fetched => {
                return self.reject(from, to, &payload, Rejection::out_of_order("matcher query before any lookup"));
            }
            _ => {}
        }
        self.in_attack = true;
        let out = match flow {
            Flow::Capture => {
                self.record(from, to, flow, payload.clone());
                self.from_sensor(payload).map(|decision| Payload::Feedback { decision })
            }
            Flow::F1 => {
                self.record(from, to, flow, payload.clone());
                self.at_auth_server(payload).map(|decision| Payload::Feedback { decision })
            }
            Flow::G2 => self.to_database(payload),
            Flow::F3 => self.to_matcher(payload),
            Flow::F2 | Flow::F4 | Flow::Feedback => unreachable!("filtered above"),
        };
        self.in_attack = false;
        out.map(Reply::Accepted)
    }
}

/// What attack code gets: submissions from controlled entities, their state, and
/// the messages they saw. Honest secrets stay behind this type.
pub struct Adversary<'a, P: Protocol> {
    sys: &'a mut BlackboxSystem<P>,
}

impl<P: Protocol> Adversary<'_, P> {
    pub fn attacker(&self) -> &AttackerSet {
        &self.sys.attacker
    }

    pub fn controls(&self, role: Role) -> bool {
        self.sys.attacker.contains(role)
    }

    pub fn submit(&mut self, from: Role, to: Role, payload: Payload) -> Result<Reply> {
        self.sys.submit(from, to, payload)
    }

    pub fn state(&self) -> P::View {
        self.sys.protocol.view(&self.sys.attacker)
    }

    pub fn observed(&self) -> &[Message] {
        &self.sys.observed
    }

    pub fn view(&self) -> AttackerView<P::View> {
        AttackerView { attacker: self.sys.attacker.clone(), state: self.state(), observed: self.sys.observed.clone() }
    }

    /// Lets one tick of genuine traffic pass; `None` once the budget is spent.
    pub fn wait_for_traffic(&mut self) -> Result<Option<Decision>> {
        self.sys.tick()
    }

    pub fn ticks(&self) -> u64 {
        self.sys.ticks
    }

    pub fn rng(&mut self) -> &mut ChaCha20Rng {
        &mut self.sys.attacker_rng
    }

    pub fn attack_ledger(&self) -> &Ledger {
        &self.sys.attack_ledger
    }

    pub fn users(&self) -> Vec<usize> {
        self.sys.protocol.users()
    }
}
