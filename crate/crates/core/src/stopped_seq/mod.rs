//! Randomly-stopped bit sequences: key laws, the exact verifier, prefix
//! codebooks, concatenation, stopping rules and error-length bookkeeping.

mod bounds;
mod codebook;
mod stopping;
mod verify;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::scalar::ExactScalar;
use crate::{Error, Result};

pub use bounds::{
    compose_error_length, compose_intervals, converse_bound, converse_bound_interval,
    expected_agreed_length, ErrorLengthPair, Interval, RunOutcome,
};
pub use codebook::{law_from_codebook, PrefixCodebook};
pub use stopping::{stopping_rule_of, StoppingRule};
pub use verify::{pointwise_mass_bound, verify_rsbs, PointwiseVerdict, RsbsVerdict, VerifyOptions};

/// A finite binary string; the empty string prints as `ε`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitString(Vec<bool>);

impl BitString {
    pub fn new(bits: Vec<bool>) -> Self {
        Self(bits)
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn push(&mut self, b: bool) {
        self.0.push(b);
    }

    /// The first `n` bits.
    pub fn prefix(&self, n: usize) -> BitString {
        Self(self.0[..n].to_vec())
    }

    pub fn is_prefix_of(&self, other: &BitString) -> bool {
        other.0.starts_with(&self.0)
    }

    pub fn concat(&self, other: &BitString) -> BitString {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Self(v)
    }

    pub fn with(&self, b: bool) -> BitString {
        let mut v = self.0.clone();
        v.push(b);
        Self(v)
    }

    /// `0`/`1` characters, empty for ε.
    pub fn to_bits_string(&self) -> String {
        self.0.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            f.write_str("ε")
        } else {
            f.write_str(&self.to_bits_string())
        }
    }
}

impl FromStr for BitString {
    type Err = Error;

    /// Accepts `""`, `"ε"` or a string of `0`/`1`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() || s == "ε" {
            return Ok(Self::empty());
        }
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(Error::Parse(format!("not a bit string: {s:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Self)
    }
}

impl From<&str> for BitString {
    /// Panics on characters other than `0`, `1`, `ε`; meant for literals.
    fn from(s: &str) -> Self {
        s.parse().expect("bit string literal")
    }
}

/// Exact law of a random bit string, with an explicit unenumerated `tail`.
///
/// `sum(atoms) + tail = 1` holds exactly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyLaw<Q> {
    atoms: BTreeMap<BitString, Q>,
    tail: Q,
}

impl<Q: ExactScalar> KeyLaw<Q> {
    /// Zero masses are dropped.
    pub fn new(atoms: impl IntoIterator<Item = (BitString, Q)>, tail: Q) -> Result<Self> {
        let mut map: BTreeMap<BitString, Q> = BTreeMap::new();
        for (k, m) in atoms {
            if m.is_negative() {
                return Err(Error::IllFormedLaw(format!("negative mass {m} at {k}")));
            }
            if m.is_zero() {
                continue;
            }
            let slot = map.entry(k).or_insert_with(Q::zero);
            *slot = slot.clone() + m;
        }
        if tail.is_negative() {
            return Err(Error::IllFormedLaw(format!("negative tail {tail}")));
        }
        let total = map.values().fold(tail.clone(), |a, m| a + m.clone());
        if !total.is_one() {
            return Err(Error::IllFormedLaw(format!("masses plus tail sum to {total}, not 1")));
        }
        Ok(Self { atoms: map, tail })
    }

    pub fn exact(atoms: impl IntoIterator<Item = (BitString, Q)>) -> Result<Self> {
        Self::new(atoms, Q::zero())
    }

    /// The law of the constant key `k`.
    pub fn point(k: BitString) -> Self {
        Self { atoms: BTreeMap::from([(k, Q::one())]), tail: Q::zero() }
    }

    /// Builds from unnormalized weights, dividing by their sum.
    pub fn normalized(atoms: impl IntoIterator<Item = (BitString, Q)>) -> Result<Self> {
        let items: Vec<(BitString, Q)> = atoms.into_iter().collect();
        let total = items.iter().fold(Q::zero(), |a, (_, m)| a + m.clone());
        if !total.is_positive() {
            return Err(Error::ZeroMass);
        }
        Self::exact(items.into_iter().map(|(k, m)| (k, m / total.clone())))
    }

    pub fn atoms(&self) -> &BTreeMap<BitString, Q> {
        &self.atoms
    }

    pub fn tail(&self) -> &Q {
        &self.tail
    }

    pub fn mass(&self, k: &BitString) -> Q {
        self.atoms.get(k).cloned().unwrap_or_else(Q::zero)
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// `E[|K|]` over the enumerated atoms.
    pub fn expected_length(&self) -> Q {
        self.atoms.iter().fold(Q::zero(), |a, (k, m)| {
            a + m.clone() * Q::from_ratio(k.len() as i64, 1)
        })
    }

    pub fn max_len(&self) -> usize {
        self.atoms.keys().map(BitString::len).max().unwrap_or(0)
    }
}

/// Law of `J || K` for independent `J ~ a`, `K ~ b`.
///
/// The tail of the result is `ta + tb - ta*tb`, the mass of outcomes where
/// either part is unenumerated.
pub fn concat_laws<Q: ExactScalar>(a: &KeyLaw<Q>, b: &KeyLaw<Q>) -> KeyLaw<Q> {
    let mut atoms: BTreeMap<BitString, Q> = BTreeMap::new();
    for (u, pu) in &a.atoms {
        for (v, pv) in &b.atoms {
            let slot = atoms.entry(u.concat(v)).or_insert_with(Q::zero);
            *slot = slot.clone() + pu.clone() * pv.clone();
        }
    }
    let tail = a.tail.clone() + b.tail.clone() - a.tail.clone() * b.tail.clone();
    KeyLaw { atoms, tail }
}
