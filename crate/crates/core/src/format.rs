//! JSON documents shared by the library and the command-line tool.
//!
//! Rationals are written as `"n/d"` strings. On input, JSON numbers and
//! decimal strings are also accepted and converted exactly (`0.1` is `1/10`).

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::dyadic::DyadicDecomposition;
use crate::prob::{JointPmf, Pmf};
use crate::reconciled::HashFunction;
use crate::scalar::{parse_exact, ExactScalar};
use crate::stopped_seq::{BitString, KeyLaw};
use crate::{Error, Result};

fn number<Q: ExactScalar>(v: &Value) -> Result<Q> {
    let text = match v {
        Value::String(s) => s.clone(),
        Value::Number(n) => n.to_string(),
        other => return Err(Error::Parse(format!("expected a rational, found {other}"))),
    };
    parse_exact(&text).map_err(Error::Parse)
}

fn numbers<Q: ExactScalar>(vs: &[Value]) -> Result<Vec<Q>> {
    vs.iter().map(number).collect()
}

fn json_error(e: serde_json::Error) -> Error {
    Error::Parse(e.to_string())
}

/// Either kind of distribution file, as written on disk.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistributionDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alphabet: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pmf: Option<Vec<Value>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_labels: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y_labels: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub joint: Option<Vec<Vec<Value>>>,
}

/// A parsed distribution file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Distribution<Q> {
    Single(Pmf<Q>),
    Joint(JointPmf<Q>),
}

impl<Q: ExactScalar> Distribution<Q> {
    /// A joint view: a single pmf becomes `X = Y`.
    pub fn into_joint(self) -> JointPmf<Q> {
        match self {
            Distribution::Single(p) => JointPmf::diagonal(&p),
            Distribution::Joint(j) => j,
        }
    }
}

pub fn parse_distribution<Q: ExactScalar>(text: &str) -> Result<Distribution<Q>> {
    let doc: DistributionDoc = serde_json::from_str(text).map_err(json_error)?;
    match (&doc.pmf, &doc.joint) {
        (Some(pmf), None) => {
            if doc.x_labels.is_some() || doc.y_labels.is_some() {
                return Err(Error::Parse("x_labels/y_labels belong to a joint file".into()));
            }
            let mass = numbers(pmf)?;
            let p = match doc.alphabet {
                Some(labels) => Pmf::with_labels(labels, mass)?,
                None => Pmf::new(mass)?,
            };
            Ok(Distribution::Single(p))
        }
        (None, Some(rows)) => {
            if doc.alphabet.is_some() {
                return Err(Error::Parse("alphabet belongs to a single-pmf file".into()));
            }
            let rows = rows.iter().map(|r| numbers(r)).collect::<Result<Vec<Vec<Q>>>>()?;
            let default = |n: usize| (0..n).map(|i| i.to_string()).collect::<Vec<_>>();
            let xl = doc.x_labels.unwrap_or_else(|| default(rows.len()));
            let yl = doc.y_labels.unwrap_or_else(|| default(rows.first().map_or(0, Vec::len)));
            Ok(Distribution::Joint(JointPmf::new(xl, yl, rows)?))
        }
        (Some(_), Some(_)) => Err(Error::Parse("file has both pmf and joint".into())),
        (None, None) => Err(Error::Parse("file has neither pmf nor joint".into())),
    }
}

pub fn parse_pmf<Q: ExactScalar>(text: &str) -> Result<Pmf<Q>> {
    match parse_distribution(text)? {
        Distribution::Single(p) => Ok(p),
        Distribution::Joint(_) => Err(Error::Parse("expected a single pmf, found a joint".into())),
    }
}

/// Accepts a joint file, or a single pmf read as `X = Y`.
pub fn parse_joint<Q: ExactScalar>(text: &str) -> Result<JointPmf<Q>> {
    parse_distribution(text).map(Distribution::into_joint)
}

pub fn pmf_doc<Q: ExactScalar>(p: &Pmf<Q>) -> DistributionDoc {
    DistributionDoc {
        alphabet: Some(p.labels().to_vec()),
        pmf: Some(p.masses().iter().map(|m| Value::String(m.to_string())).collect()),
        ..Default::default()
    }
}

pub fn joint_doc<Q: ExactScalar>(j: &JointPmf<Q>) -> DistributionDoc {
    let rows = (0..j.x_len())
        .map(|x| (0..j.y_len()).map(|y| Value::String(j.get(x, y).to_string())).collect())
        .collect();
    DistributionDoc {
        x_labels: Some(j.x_labels().to_vec()),
        y_labels: Some(j.y_labels().to_vec()),
        joint: Some(rows),
        ..Default::default()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyAtomDoc {
    pub key: String,
    pub mass: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyLawDoc {
    pub atoms: Vec<KeyAtomDoc>,
    #[serde(default = "zero_text")]
    pub tail: String,
}

fn zero_text() -> String {
    "0".to_string()
}

impl KeyLawDoc {
    pub fn from_law<Q: ExactScalar>(law: &KeyLaw<Q>) -> Self {
        let atoms = law
            .atoms()
            .iter()
            .map(|(k, m)| KeyAtomDoc { key: k.to_bits_string(), mass: m.to_string() })
            .collect();
        Self { atoms, tail: law.tail().to_string() }
    }

    pub fn to_law<Q: ExactScalar>(&self) -> Result<KeyLaw<Q>> {
        let atoms = self
            .atoms
            .iter()
            .map(|a| {
                let k: BitString = a.key.parse()?;
                let m: Q = parse_exact(&a.mass).map_err(Error::Parse)?;
                Ok((k, m))
            })
            .collect::<Result<Vec<_>>>()?;
        let tail = parse_exact(&self.tail).map_err(Error::Parse)?;
        KeyLaw::new(atoms, tail)
    }
}

pub fn parse_key_law<Q: ExactScalar>(text: &str) -> Result<KeyLaw<Q>> {
    serde_json::from_str::<KeyLawDoc>(text).map_err(json_error)?.to_law()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundEntryDoc {
    pub symbol: String,
    pub conditional: String,
    pub codeword: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundDoc {
    pub w: u32,
    pub weight: String,
    pub entries: Vec<RoundEntryDoc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecompositionDoc {
    pub alphabet: Vec<String>,
    pub rounds: Vec<RoundDoc>,
    /// Source mass not yet assigned to a listed round.
    pub tail: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period: Option<PeriodDoc>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodDoc {
    pub start: u32,
    pub len: u32,
}

/// Dumps rounds `1..=w_max` (fewer if the decomposition holds fewer).
pub fn decomposition_doc<Q: ExactScalar>(d: &DyadicDecomposition<Q>, w_max: u32) -> DecompositionDoc {
    let src = d.source();
    let rounds: Vec<RoundDoc> = d
        .rounds()
        .iter()
        .take(w_max as usize)
        .map(|r| RoundDoc {
            w: r.w,
            weight: format!("1/2^{}", r.w),
            entries: r
                .entries()
                .iter()
                .map(|e| RoundEntryDoc {
                    symbol: src.label(e.symbol).to_string(),
                    conditional: e.conditional.to_string(),
                    codeword: e.codeword.to_bits_string(),
                })
                .collect(),
        })
        .collect();
    let shown = rounds.len() as u32;
    let tail = if shown == 0 {
        Q::one()
    } else if d.settled_symbol().is_some() && shown >= d.materialized() {
        d.tail()
    } else {
        Q::pow2_neg(shown)
    };
    DecompositionDoc {
        alphabet: src.labels().to_vec(),
        rounds,
        tail: tail.to_string(),
        period: d.period().map(|(start, len)| PeriodDoc { start, len }),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HashEntryDoc {
    pub symbol: String,
    pub value: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HashDoc {
    pub m: u32,
    pub table: Vec<HashEntryDoc>,
}

impl HashDoc {
    /// Entries keyed by the union labels of `j`.
    pub fn from_hash<Q: ExactScalar>(h: &HashFunction, j: &JointPmf<Q>) -> Self {
        let table = j
            .union_labels()
            .iter()
            .zip(h.table())
            .map(|(l, &v)| HashEntryDoc { symbol: l.clone(), value: v })
            .collect();
        Self { m: h.m(), table }
    }

    /// Every union symbol of `j` must appear exactly once.
    pub fn to_hash<Q: ExactScalar>(&self, j: &JointPmf<Q>) -> Result<HashFunction> {
        let labels = j.union_labels();
        let mut table = vec![0u32; labels.len()];
        for e in &self.table {
            let i = labels
                .iter()
                .position(|l| *l == e.symbol)
                .ok_or_else(|| Error::UnknownSymbol(e.symbol.clone()))?;
            if table[i] != 0 {
                return Err(Error::InvalidHash(format!("symbol {} listed twice", e.symbol)));
            }
            if e.value == 0 {
                return Err(Error::InvalidHash(format!("value 0 for {}", e.symbol)));
            }
            table[i] = e.value;
        }
        if let Some(i) = table.iter().position(|&v| v == 0) {
            return Err(Error::InvalidHash(format!("no value for symbol {}", labels[i])));
        }
        HashFunction::new(table, self.m)
    }
}

pub fn parse_hash<Q: ExactScalar>(text: &str, j: &JointPmf<Q>) -> Result<HashFunction> {
    serde_json::from_str::<HashDoc>(text).map_err(json_error)?.to_hash(j)
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("documents serialize");
    s.push('\n');
    s
}
