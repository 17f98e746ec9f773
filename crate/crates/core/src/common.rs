//! Zero-error key agreement when both parties observe the same `X`.
//!
//! Alice draws the round `W` from `P(W = w | X = x) = removed_w(x) / p(x)`,
//! announces it, and both parties output the round-`w` codeword of `x`. Given
//! `W = w` the key is the codeword of a dyadic pmf under a full prefix code,
//! hence a randomly-stopped bit sequence independent of the announcement.

use std::collections::BTreeMap;
use std::sync::RwLock;

use crate::dyadic::DyadicDecomposition;
use crate::prob::{ceil_neg_log2, sorted_support_of, Pmf};
use crate::rng::{BitSource, LazyUniform};
use crate::scalar::ExactScalar;
use crate::stopped_seq::{BitString, KeyLaw};
use crate::{Error, Result};

/// Live runs stop with an error past this round; reaching it has probability
/// about `2^-ROUND_LIMIT`.
pub const ROUND_LIMIT: u32 = 4096;

/// Alice's side of one run: the source symbol, the announced round and the key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommonRun {
    pub x: usize,
    pub w: u32,
    pub key: BitString,
}

/// The common scheme for one source pmf, caching rounds as they are needed.
///
/// Reads of materialized rounds proceed concurrently; extending the
/// decomposition takes the write lock.
#[derive(Debug)]
pub struct CommonScheme<Q> {
    decomposition: RwLock<DyadicDecomposition<Q>>,
}

impl<Q: ExactScalar> CommonScheme<Q> {
    pub fn new(p: Pmf<Q>) -> Self {
        Self { decomposition: RwLock::new(DyadicDecomposition::new(p)) }
    }

    pub fn source(&self) -> Pmf<Q> {
        self.read().source().clone()
    }

    fn read(&self) -> std::sync::RwLockReadGuard<'_, DyadicDecomposition<Q>> {
        self.decomposition.read().unwrap_or_else(|e| e.into_inner())
    }

    fn ensure(&self, w: u32) -> Result<()> {
        if self.read().materialized() >= w {
            return Ok(());
        }
        let mut d = self.decomposition.write().unwrap_or_else(|e| e.into_inner());
        d.extend_to(w)
    }

    /// Copy of the decomposition materialized through `w_max`.
    pub fn decomposition(&self, w_max: u32) -> Result<DyadicDecomposition<Q>> {
        self.ensure(w_max)?;
        Ok(self.read().clone())
    }

    /// Runs `f` on round `w`, materializing it first.
    fn with_round<T>(&self, w: u32, f: impl FnOnce(&crate::dyadic::DyadicRound<Q>) -> T) -> Result<T> {
        self.ensure(w)?;
        let d = self.read();
        Ok(f(d.round(w).expect("materialized")))
    }

    /// Alice: samples `W` given `X = x` by inverse CDF over rounds and returns
    /// the round-`W` codeword.
    ///
    /// The uniform is compared with `F(w) = sum_{v <= w} removed_v(x) / p(x)`
    /// only in rounds that serve `x`.
    pub fn alice<B: BitSource + ?Sized>(&self, x: usize, src: &mut B) -> Result<CommonRun> {
        let px = {
            let d = self.read();
            let p = d.source();
            if x >= p.len() {
                return Err(Error::UnknownSymbol(x.to_string()));
            }
            p.mass(x).clone()
        };
        if !px.is_positive() {
            return Err(Error::ZeroProbability(x));
        }
        let mut u = LazyUniform::new();
        let mut cumulative = Q::zero();
        for w in 1..=ROUND_LIMIT {
            let hit = self.with_round(w, |r| r.entry(x).map(|e| (e.removed.clone(), e.codeword.clone())))?;
            if let Some((removed, codeword)) = hit {
                cumulative = cumulative + removed / px.clone();
                if u.lt(&cumulative, src)? {
                    return Ok(CommonRun { x, w, key: codeword });
                }
            }
        }
        Err(Error::RoundLimit(ROUND_LIMIT))
    }

    /// Bob: the round-`w` codeword of `y`.
    pub fn bob(&self, y: usize, w: u32) -> Result<BitString> {
        if w == 0 {
            return Err(Error::Unreachable { symbol: y, w });
        }
        {
            let d = self.read();
            if y >= d.source().len() {
                return Err(Error::UnknownSymbol(y.to_string()));
            }
        }
        self.with_round(w, |r| r.entry(y).map(|e| e.codeword.clone()))?
            .ok_or(Error::Unreachable { symbol: y, w })
    }

    /// Whether round `w` serves `y`.
    pub fn reachable(&self, y: usize, w: u32) -> Result<bool> {
        if w == 0 {
            return Ok(false);
        }
        self.with_round(w, |r| r.entry(y).is_some())
    }
}

/// One-shot Alice role; see [`CommonScheme::alice`].
pub fn alice_keygen<Q: ExactScalar, B: BitSource + ?Sized>(
    p: &Pmf<Q>,
    x: usize,
    src: &mut B,
) -> Result<(BitString, u32)> {
    let run = CommonScheme::new(p.clone()).alice(x, src)?;
    Ok((run.key, run.w))
}

/// One-shot Bob role; see [`CommonScheme::bob`].
pub fn bob_keygen<Q: ExactScalar>(p: &Pmf<Q>, y: usize, w: u32) -> Result<BitString> {
    CommonScheme::new(p.clone()).bob(y, w)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    /// Alice draws `g ~ Unif[0, p(x)]` from the source.
    Alice,
    /// Bob replays rounds up to the announced one.
    Bob { w: u32 },
}

/// Line-by-line execution of the key agreement pseudocode, with exact
/// rationals in place of floats.
///
/// Per round `w'`: budget `q = 2^-w'`, accumulator `k = 0`, residual sorted
/// by descending mass (ties by index, zeros skipped). Each symbol asks for
/// `2^-alpha`, `alpha = max(ceil(-log2 r(y)), w')`; the scan stops at the
/// first request over budget. Alice stops once `g >= r(x)` after the
/// decrement, that is when `g` falls in `[r_after, r_before)`; Bob stops in
/// round `w`. The output is the first `alpha - w'` digits of `k`.
///
/// Alice's `g = p(x) U` reads `U` lazily from `src`. Fed the complement of
/// the stream given to [`CommonScheme::alice`], it makes the same decisions
/// at the same bit positions, so both return the same `(key, w)`.
pub fn keyagree_literal<Q: ExactScalar, B: BitSource + ?Sized>(
    role: Role,
    p: &Pmf<Q>,
    x: usize,
    src: &mut B,
) -> Result<(BitString, u32)> {
    if x >= p.len() {
        return Err(Error::UnknownSymbol(x.to_string()));
    }
    if !p.mass(x).is_positive() {
        return Err(Error::ZeroProbability(x));
    }
    let px = p.mass(x).clone();
    let mut residual = p.masses().to_vec();
    let mut g = LazyUniform::new();
    for w in 1..=ROUND_LIMIT {
        let mut q = Q::pow2_neg(w);
        // binary digits of k
        let mut k: Vec<bool> = Vec::new();
        for y in sorted_support_of(&residual) {
            let alpha = ceil_neg_log2(&residual[y])?.max(w);
            let request = Q::pow2_neg(alpha);
            if request > q {
                break;
            }
            q = q - request.clone();
            residual[y] = residual[y].clone() - request;
            let digits = (alpha - w) as usize;
            k.resize(digits, false);
            if y == x {
                let key = BitString::new(k.clone());
                let done = match role {
                    // g >= r(x)  <=>  U >= r(x) / p(x)
                    Role::Alice => !g.lt(&(residual[y].clone() / px.clone()), src)?,
                    Role::Bob { w: announced } => announced == w,
                };
                if done {
                    return Ok((key, w));
                }
            }
            increment(&mut k);
        }
        if let Role::Bob { w: announced } = role {
            if announced == w {
                return Err(Error::Unreachable { symbol: x, w });
            }
        }
    }
    Err(Error::RoundLimit(ROUND_LIMIT))
}

/// `k += 2^-len(k)` on a binary fraction held as its digits.
fn increment(k: &mut [bool]) {
    for b in k.iter_mut().rev() {
        *b = !*b;
        if *b {
            return;
        }
    }
}

/// One atom of the joint law of `(X, W, K)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommonAtom<Q> {
    pub x: usize,
    pub w: u32,
    pub key: BitString,
    pub mass: Q,
}

/// Exact law of the common scheme through round `w_max`.
#[derive(Debug, Clone)]
pub struct CommonLaw<Q> {
    /// `(w, law of K given W = w)`.
    pub per_round: Vec<(u32, KeyLaw<Q>)>,
    pub joint: Vec<CommonAtom<Q>>,
    /// `P(W > w_max) = 2^-w_max`.
    pub tail: Q,
    /// `E[|K|]` summed over the joint atoms.
    pub expected_length: Q,
    /// `sum_{w <= w_max} 2^-w H(X | W = w)` from the round conditionals.
    pub conditional_entropy: Q,
    /// Exact `H(X | W)` over all rounds when the residual recurs.
    pub conditional_entropy_exact: Option<Q>,
}

/// Enumerates the joint law of `(X, W, K)` for `W <= w_max`.
pub fn exact_common_law<Q: ExactScalar>(p: &Pmf<Q>, w_max: u32) -> Result<CommonLaw<Q>> {
    let d = DyadicDecomposition::decompose(p.clone(), w_max)?;
    let mut per_round = Vec::new();
    let mut joint = Vec::new();
    for r in d.rounds() {
        per_round.push((r.w, r.key_law()?));
        for e in r.entries() {
            joint.push(CommonAtom { x: e.symbol, w: r.w, key: e.codeword.clone(), mass: e.removed.clone() });
        }
    }
    let expected_length = joint.iter().fold(Q::zero(), |a, t| {
        a + t.mass.clone() * Q::from_ratio(t.key.len() as i64, 1)
    });
    // a longer decomposition detects recurrence without changing the law
    let mut closed = d.clone();
    if closed.period().is_none() {
        closed.extend_to(w_max.max(64))?;
    }
    Ok(CommonLaw {
        per_round,
        joint,
        tail: d.tail(),
        expected_length,
        conditional_entropy: d.enumerated_conditional_entropy(),
        conditional_entropy_exact: closed.exact_conditional_entropy(),
    })
}

impl<Q: ExactScalar> CommonLaw<Q> {
    /// `P(W = w)` for every enumerated round.
    pub fn round_marginal(&self) -> BTreeMap<u32, Q> {
        let mut out = BTreeMap::new();
        for a in &self.joint {
            let slot = out.entry(a.w).or_insert_with(Q::zero);
            *slot = slot.clone() + a.mass.clone();
        }
        out
    }

    /// `P(X = x)` accumulated over the enumerated rounds.
    pub fn symbol_marginal(&self, n: usize) -> Vec<Q> {
        let mut out = vec![Q::zero(); n];
        for a in &self.joint {
            out[a.x] = out[a.x].clone() + a.mass.clone();
        }
        out
    }
}
