//! Entities, attacker sets and the goal taxonomy.

mod ledger;
mod message;
mod system;
mod transcript;

pub use ledger::{ChannelKey, Ledger};
pub use message::{Capture, Decision, Message, Payload, RejectReason, Rejection};
pub use system::{Adversary, AttackerView, BlackboxSystem, Protocol, Reply, REJECTION_CAP};
pub use transcript::{Transcript, TranscriptRecord};

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Role {
    User,
    Sensor,
    AuthServer,
    Database,
    Matcher,
}

impl Role {
    pub const ALL: [Role; 5] = [Role::User, Role::Sensor, Role::AuthServer, Role::Database, Role::Matcher];

    pub fn short(self) -> &'static str {
        match self {
            Role::User => "u",
            Role::Sensor => "s",
            Role::AuthServer => "as",
            Role::Database => "db",
            Role::Matcher => "m",
        }
    }

    pub fn is_primary(self) -> bool {
        matches!(self, Role::AuthServer | Role::Database | Role::Matcher)
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.short().to_uppercase())
    }
}

impl FromStr for Role {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "u" | "user" => Ok(Role::User),
            "s" | "sensor" => Ok(Role::Sensor),
            "as" | "auth" | "auth-server" => Ok(Role::AuthServer),
            "db" | "database" => Ok(Role::Database),
            "m" | "matcher" => Ok(Role::Matcher),
            other => Err(Error::Parse(format!("unknown role {other:?}"))),
        }
    }
}

/// Message kinds on the six legal edges.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Flow {
    /// biometric presentation, user to sensor
    Capture,
    /// f1(b') together with g1(ID)
    F1,
    /// g2(b', i), the lookup request
    G2,
    /// f2({b_i})
    F2,
    /// f3(b', {b_i})
    F3,
    /// f4(d(b', {b_i}))
    F4,
    /// the dashed decision arrow back to the sensor; observable, never submittable
    Feedback,
}

impl Flow {
    pub fn name(self) -> &'static str {
        match self {
            Flow::Capture => "capture",
            Flow::F1 => "f1",
            Flow::G2 => "g2",
            Flow::F2 => "f2",
            Flow::F3 => "f3",
            Flow::F4 => "f4",
            Flow::Feedback => "feedback",
        }
    }

    /// The only edge each flow may travel on.
    pub fn edge(self) -> (Role, Role) {
        match self {
            Flow::Capture => (Role::User, Role::Sensor),
            Flow::F1 => (Role::Sensor, Role::AuthServer),
            Flow::G2 => (Role::AuthServer, Role::Database),
            Flow::F2 => (Role::Database, Role::AuthServer),
            Flow::F3 => (Role::AuthServer, Role::Matcher),
            Flow::F4 => (Role::Matcher, Role::AuthServer),
            Flow::Feedback => (Role::AuthServer, Role::Sensor),
        }
    }

    pub fn on_edge(from: Role, to: Role) -> Option<Flow> {
        [Flow::Capture, Flow::F1, Flow::G2, Flow::F2, Flow::F3, Flow::F4]
            .into_iter()
            .find(|f| f.edge() == (from, to))
    }
}

/// Controlled entities. Sensor and user only join a primary attack point.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<Role>", into = "Vec<Role>")]
pub struct AttackerSet(BTreeSet<Role>);

impl AttackerSet {
    pub fn new(roles: impl IntoIterator<Item = Role>) -> Result<Self> {
        let set: BTreeSet<Role> = roles.into_iter().collect();
        if set.is_empty() {
            return Err(Error::InvalidAttacker("attacker set is empty".into()));
        }
        if !set.iter().any(|r| r.is_primary()) {
            return Err(Error::InvalidAttacker(
                "sensor and user cannot attack without a server-side entity".into(),
            ));
        }
        Ok(AttackerSet(set))
    }

    pub fn single(role: Role) -> Result<Self> {
        Self::new([role])
    }

    pub fn contains(&self, role: Role) -> bool {
        self.0.contains(&role)
    }

    pub fn is_superset(&self, other: &AttackerSet) -> bool {
        self.0.is_superset(&other.0)
    }

    pub fn roles(&self) -> impl Iterator<Item = Role> + '_ {
        self.0.iter().copied()
    }

    pub fn primaries(&self) -> impl Iterator<Item = Role> + '_ {
        self.roles().filter(|r| r.is_primary())
    }

    /// Every valid set built from the primaries plus an optional sensor.
    pub fn catalog() -> Vec<AttackerSet> {
        let primaries = [Role::AuthServer, Role::Database, Role::Matcher];
        let mut out = Vec::new();
        for with_sensor in [false, true] {
            for mask in 1u8..8 {
                let mut roles: Vec<Role> =
                    (0..3).filter(|b| mask >> b & 1 == 1).map(|b| primaries[b]).collect();
                if with_sensor {
                    roles.push(Role::Sensor);
                }
                out.push(AttackerSet::new(roles).expect("has a primary"));
            }
        }
        out
    }
}

impl fmt::Display for AttackerSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<&str> = self.0.iter().map(|r| r.short()).collect();
        f.write_str(&parts.join("+"))
    }
}

impl FromStr for AttackerSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let roles = s
            .split(['+', ','])
            .filter(|p| !p.trim().is_empty())
            .map(str::parse)
            .collect::<Result<Vec<Role>>>()?;
        AttackerSet::new(roles)
    }
}

impl TryFrom<Vec<Role>> for AttackerSet {
    type Error = Error;

    fn try_from(v: Vec<Role>) -> Result<Self> {
        AttackerSet::new(v)
    }
}

impl From<AttackerSet> for Vec<Role> {
    fn from(a: AttackerSet) -> Self {
        a.0.into_iter().collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Minimum,
    Authorization,
    Full,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "goal", content = "level")]
pub enum Goal {
    LearnReference(Level),
    LearnSample(Level),
    TraceIdentities,
    TraceQueries,
}

impl Goal {
    /// Canonical goal order, learn goals at full leakage.
    pub const TABLE: [Goal; 4] = [
        Goal::LearnReference(Level::Full),
        Goal::LearnSample(Level::Full),
        Goal::TraceIdentities,
        Goal::TraceQueries,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Goal::LearnReference(_) => "learn-reference",
            Goal::LearnSample(_) => "learn-sample",
            Goal::TraceIdentities => "trace-identities",
            Goal::TraceQueries => "trace-queries",
        }
    }

    fn same_row(self, other: Goal) -> bool {
        self.name() == other.name()
    }
}

impl fmt::Display for Goal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Goal {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, level) = match s.split_once(':') {
            Some((n, l)) => (n, Some(l)),
            None => (s, None),
        };
        let level = match level.map(str::to_ascii_lowercase).as_deref() {
            None | Some("full") => Level::Full,
            Some("minimum") => Level::Minimum,
            Some("authorization") => Level::Authorization,
            Some(other) => return Err(Error::Parse(format!("unknown leakage level {other:?}"))),
        };
        match name.trim().to_ascii_lowercase().as_str() {
            "learn-reference" => Ok(Goal::LearnReference(level)),
            "learn-sample" => Ok(Goal::LearnSample(level)),
            "trace-identities" => Ok(Goal::TraceIdentities),
            "trace-queries" => Ok(Goal::TraceQueries),
            other => Err(Error::Parse(format!("unknown goal {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Verification,
    Identification,
}

/// Deployment facts that switch the footnoted cells of the relevance table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Deployment {
    pub mode: Mode,
    pub db_stores_plaintext: bool,
    pub identifiers_hidden: bool,
}

fn relevant_for(role: Role, goal: Goal, d: Deployment) -> bool {
    match (role, goal) {
        (Role::Matcher, _) => true,
        (Role::AuthServer, Goal::TraceQueries) => d.mode == Mode::Identification || d.identifiers_hidden,
        (Role::AuthServer, _) => true,
        (Role::Database, Goal::LearnReference(_) | Goal::TraceIdentities) => !d.db_stores_plaintext,
        (Role::Database, _) => true,
        _ => false,
    }
}

/// Goals relevant to every primary attacker in the set.
pub fn relevant_goals(attacker: &AttackerSet, d: Deployment) -> Vec<Goal> {
    Goal::TABLE
        .into_iter()
        .filter(|&g| attacker.primaries().all(|r| relevant_for(r, g, d)))
        .collect()
}

pub fn is_relevant(attacker: &AttackerSet, goal: Goal, d: Deployment) -> bool {
    relevant_goals(attacker, d).iter().any(|g| g.same_row(goal))
}
