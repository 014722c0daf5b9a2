//! The three analysed authentication protocols as blackbox engines.

pub mod gm;
pub mod stoianov;
pub mod svm;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use gm::{GmParams, GmProtocol, GmView};
pub use stoianov::{StoParams, StoProtocol, StoView};
pub use svm::{SvmParams, SvmProtocol, SvmReference, SvmView};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ProtocolId {
    #[serde(rename = "gm2007")]
    Gm,
    #[serde(rename = "svm2008")]
    Svm,
    #[serde(rename = "stoianov2010")]
    Stoianov,
}

impl ProtocolId {
    pub const ALL: [ProtocolId; 3] = [ProtocolId::Gm, ProtocolId::Svm, ProtocolId::Stoianov];

    pub fn name(self) -> &'static str {
        match self {
            ProtocolId::Gm => "gm2007",
            ProtocolId::Svm => "svm2008",
            ProtocolId::Stoianov => "stoianov2010",
        }
    }
}

impl fmt::Display for ProtocolId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProtocolId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gm2007" | "gm" => Ok(ProtocolId::Gm),
            "svm2008" | "svm" => Ok(ProtocolId::Svm),
            "stoianov2010" | "stoianov" => Ok(ProtocolId::Stoianov),
            other => Err(Error::Parse(format!("unknown protocol {other:?}"))),
        }
    }
}

fn expect_len(what: &str, actual: usize, expected: usize) -> std::result::Result<(), String> {
    if actual == expected {
        Ok(())
    } else {
        Err(format!("{what}: expected {expected} elements, got {actual}"))
    }
}

fn unexpected(flow: crate::entity::Flow) -> String {
    format!("payload does not belong on flow {}", flow.name())
}

fn internal(what: &str) -> Error {
    Error::InvalidParams(format!("unexpected payload for {what}"))
}
