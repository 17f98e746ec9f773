//! Key agreement for correlated observations.
//!
//! [`almost`] covers sources where `X = Y` with probability `p`: Alice sends
//! a hash of `x`, and if Bob's hash matches the parties run the common scheme
//! on `X` given `X = Y` and the hash value. [`pipeline`] puts a reconciliation
//! stage in front, turning a general `(X, Y)` into such a source.

pub mod almost;
pub mod hash;
pub mod pipeline;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use almost::{
    almost_common_bounds, almost_common_exact, almost_common_keygen, epsilon_substitution,
    AlmostCommonBounds, AlmostCommonExact, AlmostCommonProtocol, AlmostCommonRun, LengthForm,
};
pub use hash::{collision_error, derandomize_hash, HashFamily, HashFunction, HashProvenance};
pub use pipeline::{
    correlated_keygen, kappa_actual, reference_length_bound, Constant, CorrelatedExact, CorrelatedProtocol,
    CorrelatedRun, HashMapReconciler, Identity, Reconciler, Reconciliation, TranscriptLaw,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Party {
    Alice,
    Bob,
}

/// Content of a public message.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Payload {
    /// Round index of the common scheme, `w=3`.
    Round(u32),
    /// Hash value, `h=2`.
    Hash(u32),
    /// Hash mismatch, `e`.
    Error,
    /// Reconciler token, `t=5`.
    Token(u64),
}

impl fmt::Display for Payload {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Payload::Round(w) => write!(f, "w={w}"),
            Payload::Hash(h) => write!(f, "h={h}"),
            Payload::Error => f.write_str("e"),
            Payload::Token(t) => write!(f, "t={t}"),
        }
    }
}

impl FromStr for Payload {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("bad payload {s:?}"));
        if s == "e" {
            return Ok(Payload::Error);
        }
        let (tag, value) = s.split_once('=').ok_or_else(bad)?;
        if value.is_empty() || !value.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        match tag {
            "w" => value.parse().map(Payload::Round).map_err(|_| bad()),
            "h" => value.parse().map(Payload::Hash).map_err(|_| bad()),
            "t" => value.parse().map(Payload::Token).map_err(|_| bad()),
            _ => Err(bad()),
        }
    }
}

impl Serialize for Payload {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Payload {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One public message.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Message {
    pub sender: Party,
    pub payload: Payload,
}

impl Message {
    pub fn alice(payload: Payload) -> Self {
        Self { sender: Party::Alice, payload }
    }

    pub fn bob(payload: Payload) -> Self {
        Self { sender: Party::Bob, payload }
    }
}

impl fmt::Display for Message {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let who = match self.sender {
            Party::Alice => "A",
            Party::Bob => "B",
        };
        write!(f, "{who}:{}", self.payload)
    }
}

/// Renders a transcript as `A:h=1 B:w=2`, or `-` when empty.
pub fn transcript_text(messages: &[Message]) -> String {
    if messages.is_empty() {
        return "-".to_string();
    }
    messages.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ")
}
