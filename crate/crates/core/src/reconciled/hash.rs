use serde::{Deserialize, Serialize};

use crate::prob::JointPmf;
use crate::rng::RandomSource;
use crate::scalar::ExactScalar;
use crate::{Error, Result};

/// Where a hash table came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HashProvenance {
    Fixed,
    Random { seed: u64 },
    Derandomized,
}

/// A total map from the union alphabet to `{1, ..., m}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HashFunction {
    table: Vec<u32>,
    m: u32,
    provenance: HashProvenance,
}

impl HashFunction {
    pub fn new(table: Vec<u32>, m: u32) -> Result<Self> {
        Self::with_provenance(table, m, HashProvenance::Fixed)
    }

    pub fn with_provenance(table: Vec<u32>, m: u32, provenance: HashProvenance) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidHash("m must be at least 1".into()));
        }
        if let Some(v) = table.iter().find(|&&v| v == 0 || v > m) {
            return Err(Error::InvalidHash(format!("value {v} outside 1..={m}")));
        }
        Ok(Self { table, m, provenance })
    }

    /// Every symbol to bucket 1.
    pub fn constant(n: usize, m: u32) -> Self {
        Self { table: vec![1; n], m: m.max(1), provenance: HashProvenance::Fixed }
    }

    /// A uniformly random table drawn from `seed`.
    pub fn random(n: usize, m: u32, seed: u64) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidHash("m must be at least 1".into()));
        }
        let mut src = RandomSource::new(seed);
        let table = (0..n).map(|_| src.below(u64::from(m)) as u32 + 1).collect();
        Ok(Self { table, m, provenance: HashProvenance::Random { seed } })
    }

    /// Table number `index` in base-`m` order (symbol 0 is the lowest digit).
    pub fn enumerated(n: usize, m: u32, mut index: u64) -> Self {
        let table = (0..n)
            .map(|_| {
                let v = (index % u64::from(m)) as u32 + 1;
                index /= u64::from(m);
                v
            })
            .collect();
        Self { table, m, provenance: HashProvenance::Fixed }
    }

    /// `m^n`, if it fits.
    pub fn table_count(n: usize, m: u32) -> Option<u64> {
        u64::from(m).checked_pow(u32::try_from(n).ok()?)
    }

    pub fn value(&self, union_symbol: usize) -> u32 {
        self.table[union_symbol]
    }

    pub fn table(&self) -> &[u32] {
        &self.table
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn provenance(&self) -> HashProvenance {
        self.provenance
    }

    pub(crate) fn mark(mut self, provenance: HashProvenance) -> Self {
        self.provenance = provenance;
        self
    }
}

/// `P(h(X) = h(Y), X != Y)`, exact.
pub fn collision_error<Q: ExactScalar>(j: &JointPmf<Q>, h: &HashFunction) -> Result<Q> {
    if h.len() != j.union_len() {
        return Err(Error::InvalidHash(format!(
            "table covers {} symbols, union alphabet has {}",
            h.len(),
            j.union_len()
        )));
    }
    Ok(j.cells()
        .filter(|&(x, y, _)| !j.same_symbol(x, y) && h.value(j.x_union(x)) == h.value(j.y_union(y)))
        .fold(Q::zero(), |a, (_, _, m)| a + m.clone()))
}

/// Candidate tables for [`derandomize_hash`].
#[derive(Debug, Clone)]
pub enum HashFamily {
    /// All `m^|union|` tables; allowed up to `2^20` of them.
    Exhaustive,
    Candidates(Vec<HashFunction>),
}

pub const EXHAUSTIVE_LIMIT: u64 = 1 << 20;

/// Picks the table with the smallest collision error (first on ties) and
/// checks it against `(1 - p) / m`, the average over all tables.
pub fn derandomize_hash<Q: ExactScalar>(
    j: &JointPmf<Q>,
    m: u32,
    family: &HashFamily,
) -> Result<(HashFunction, Q)> {
    if m == 0 {
        return Err(Error::InvalidParameter("m must be at least 1".into()));
    }
    let n = j.union_len();
    let p = crate::prob::agreement_stats(j).p;
    let bound = (Q::one() - p) / Q::from_ratio(i64::from(m), 1);
    let mut best: Option<(HashFunction, Q)> = None;
    let mut consider = |h: HashFunction| -> Result<()> {
        let e = collision_error(j, &h)?;
        if best.as_ref().is_none_or(|(_, b)| e < *b) {
            best = Some((h, e));
        }
        Ok(())
    };
    match family {
        HashFamily::Exhaustive => {
            let count = HashFunction::table_count(n, m)
                .filter(|&c| c <= EXHAUSTIVE_LIMIT)
                .ok_or_else(|| Error::InvalidParameter(format!("{m}^{n} tables exceed the exhaustive limit")))?;
            for i in 0..count {
                consider(HashFunction::enumerated(n, m, i))?;
            }
        }
        HashFamily::Candidates(list) => {
            for h in list {
                if h.m() != m {
                    return Err(Error::InvalidHash(format!("candidate has m = {}, expected {m}", h.m())));
                }
                consider(h.clone())?;
            }
        }
    }
    let (h, e) = best.ok_or_else(|| Error::InvalidParameter("empty candidate family".into()))?;
    if e > bound {
        return Err(Error::NoHashMeetsBound { best: e.to_string(), bound: bound.to_string() });
    }
    Ok((h.mark(HashProvenance::Derandomized), e))
}
