use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use super::{Flow, Role};
use crate::biometric::FeatureVector;
use crate::bits::BitString;
use crate::numtheory::{hash_bytes, Digest, GmCiphertext, PaillierCiphertext};

/// A raw biometric presentation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Capture {
    Bits(BitString),
    Features(FeatureVector),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Ok,
    Nok,
    /// identification result: the enrolled user the class maps to
    Identified(usize),
}

impl Decision {
    pub fn is_ok(self) -> bool {
        !matches!(self, Decision::Nok)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Payload {
    Presentation { claimed: usize, capture: Capture },
    GmSample { id: usize, cts: Vec<GmCiphertext> },
    Lookup { index: usize },
    GmReference { cts: Vec<GmCiphertext> },
    GmCombined { cts: Vec<GmCiphertext> },
    Verdict { ok: bool },
    SvmAuth { cts: Vec<PaillierCiphertext> },
    SvmQuery { cts: Vec<PaillierCiphertext> },
    SvmScores { cts: Vec<PaillierCiphertext> },
    SvmClass { index: usize },
    StoSample {
        id: usize,
        masked: BitString,
        #[serde(with = "crate::numtheory::decimal")]
        state: BigUint,
    },
    StoRecord { masked: BitString },
    StoMerged {
        index: usize,
        masked: BitString,
        #[serde(with = "crate::numtheory::decimal")]
        state: BigUint,
    },
    Feedback { decision: Decision },
}

impl Payload {
    pub fn digest(&self) -> Digest {
        hash_bytes(&serde_json::to_vec(self).expect("payloads serialize"))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub seq: u64,
    pub from: Role,
    pub to: Role,
    pub flow: Flow,
    pub payload: Payload,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RejectReason {
    Malformed,
    OutOfOrder,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    pub reason: RejectReason,
    pub detail: String,
}

impl Rejection {
    pub fn malformed(detail: impl Into<String>) -> Self {
        Rejection { reason: RejectReason::Malformed, detail: detail.into() }
    }

    pub fn out_of_order(detail: impl Into<String>) -> Self {
        Rejection { reason: RejectReason::OutOfOrder, detail: detail.into() }
    }
}
