//! What a passive listener sees: the public messages of each run.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use stopkey::reconciled::{Message, Party, Payload};
use stopkey::BitString;

use crate::error::{HarnessError, Result};
use crate::fairness::{self, FairnessReport};

/// A logged message. The payload is kept as text so that a corrupted log can
/// be inspected rather than rejected at load time.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoggedMessage {
    pub sender: Party,
    pub payload: String,
}

impl From<&Message> for LoggedMessage {
    fn from(m: &Message) -> Self {
        Self { sender: m.sender, payload: m.payload.to_string() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogRecord {
    pub trial: u64,
    pub messages: Vec<LoggedMessage>,
    pub key_a: String,
    pub key_b: String,
    pub ideal: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptLog {
    pub protocol: String,
    pub records: Vec<LogRecord>,
}

impl TranscriptLog {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| HarnessError::MalformedLog(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EavesdropperSummary {
    pub records: usize,
    /// Message layout with values elided (`A:w`, `A:h B:e`), with counts.
    pub shapes: BTreeMap<String, u64>,
    /// Distinct full transcripts, with counts.
    pub transcripts: BTreeMap<String, u64>,
    pub fairness: FairnessReport,
}

fn shape(messages: &[Message]) -> String {
    if messages.is_empty() {
        return "-".into();
    }
    messages
        .iter()
        .map(|m| {
            let who = if m.sender == Party::Alice { "A" } else { "B" };
            let what = match m.payload {
                Payload::Round(_) => "w",
                Payload::Hash(_) => "h",
                Payload::Error => "e",
                Payload::Token(_) => "t",
            };
            format!("{who}:{what}")
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Extracts the public transcript of every record, rejects payloads that
/// carry anything beyond the message grammar, and runs the fairness test on
/// the ideal keys grouped by transcript.
pub fn eavesdropper_view(log: &TranscriptLog) -> Result<EavesdropperSummary> {
    let mut shapes = BTreeMap::new();
    let mut transcripts = BTreeMap::new();
    let mut samples: Vec<(String, BitString)> = Vec::with_capacity(log.records.len());
    for (i, r) in log.records.iter().enumerate() {
        let keys = [&r.key_a, &r.key_b, &r.ideal];
        for k in keys {
            k.parse::<BitString>()
                .map_err(|_| HarnessError::MalformedLog(format!("record {i}: bad key {k:?}")))?;
        }
        let mut messages = Vec::with_capacity(r.messages.len());
        for m in &r.messages {
            match m.payload.parse::<Payload>() {
                Ok(payload) => messages.push(Message { sender: m.sender, payload }),
                Err(_) => {
                    let leaked = keys
                        .iter()
                        .filter(|k| !k.is_empty() && k.as_str() != "ε")
                        .any(|k| m.payload.contains(k.as_str()));
                    return Err(if leaked {
                        HarnessError::KeyLeak { record: i, payload: m.payload.clone() }
                    } else {
                        HarnessError::MalformedLog(format!("record {i}: bad payload {:?}", m.payload))
                    });
                }
            }
        }
        *shapes.entry(shape(&messages)).or_insert(0) += 1;
        let text = stopkey::reconciled::transcript_text(&messages);
        *transcripts.entry(text.clone()).or_insert(0) += 1;
        samples.push((text, r.ideal.parse().expect("checked above")));
    }
    let fairness = fairness::fairness_test(samples.iter().map(|(t, k)| (t.as_str(), k)));
    Ok(EavesdropperSummary { records: log.records.len(), shapes, transcripts, fairness })
}

pub fn render_summary(s: &EavesdropperSummary) -> String {
    let mut out = format!("records: {}\n\nmessage layouts:\n", s.records);
    for (k, v) in &s.shapes {
        out.push_str(&format!("  {k:<16} {v}\n"));
    }
    out.push_str(&format!("\ndistinct transcripts: {}\n", s.transcripts.len()));
    out.push_str(&format!(
        "fairness: {} tests at alpha {} (Bonferroni), {} flagged{}\n",
        s.fairness.tests,
        s.fairness.alpha,
        s.fairness.flagged,
        if s.fairness.vacuous { ", vacuous" } else { "" }
    ));
    out
}
