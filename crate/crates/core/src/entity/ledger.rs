use std::collections::BTreeMap;
use std::fmt;

use serde::{Serialize, Serializer};

use super::{Flow, Role};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ChannelKey {
    pub from: Role,
    pub to: Role,
    pub flow: Flow,
}

impl fmt::Display for ChannelKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{}:{}", self.from.short(), self.to.short(), self.flow.name())
    }
}

/// Accepted-message counters per channel and kind.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Ledger {
    counts: BTreeMap<ChannelKey, u64>,
}

impl Ledger {
    pub fn record(&mut self, from: Role, to: Role, flow: Flow) {
        *self.counts.entry(ChannelKey { from, to, flow }).or_default() += 1;
    }

    pub fn get(&self, flow: Flow) -> u64 {
        self.counts.iter().filter(|(k, _)| k.flow == flow).map(|(_, v)| v).sum()
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.total() == 0
    }

    pub fn entries(&self) -> impl Iterator<Item = (ChannelKey, u64)> + '_ {
        self.counts.iter().map(|(k, v)| (*k, *v))
    }

    pub fn to_map(&self) -> BTreeMap<String, u64> {
        self.counts.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }
}

impl Serialize for Ledger {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_map().serialize(s)
    }
}
