//! Decomposition of a pmf into a `Geom(1/2)` mixture of dyadic pmfs.
//!
//! Round `w` removes total mass `2^-w` from the residual. Within a round the
//! residual is scanned by descending mass (ties by ascending index); symbol
//! `y` asks for `2^-alpha` with `alpha = max(ceil(-log2 r(y)), w)` and is
//! served while the round budget lasts. The budget is always used up exactly,
//! so `X` given `W = w` is dyadic and has a full prefix code.

mod knuth_yao;

use std::collections::{BTreeMap, HashMap};

use crate::prob::{ceil_neg_log2, dyadic_entropy, sorted_support_of, Pmf, SubPmf};
use crate::scalar::ExactScalar;
use crate::stopped_seq::{BitString, KeyLaw, PrefixCodebook};
use crate::{Error, Result};

pub use knuth_yao::{knuth_yao_sample, KnuthYao};

/// One greedy half split of a sub-pmf.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HalfSplit<Q> {
    /// Mass moved into the split event, per symbol.
    pub removed: Vec<Q>,
    /// `2 removed / total`, dyadic.
    pub conditional: Pmf<Q>,
    pub residual: SubPmf<Q>,
    /// Selected symbols in greedy order.
    pub order: Vec<usize>,
    /// `alpha` of each selected symbol, relative to the normalized input.
    pub exponents: Vec<u32>,
}

/// Splits off exactly half of the total mass as a dyadic conditional.
///
/// With `alpha_x = max(ceil(-log2(p(x)/T)), 1)` on the descending order,
/// takes the longest prefix with `sum 2^-alpha <= 1/2`. That sum is always
/// exactly 1/2; anything else is reported as an error rather than assumed.
pub fn half_split<Q: ExactScalar>(p: &SubPmf<Q>) -> Result<HalfSplit<Q>> {
    let total = p.total();
    if !total.is_positive() {
        return Err(Error::ZeroMass);
    }
    let half = Q::from_ratio(1, 2);
    let mut budget = half.clone();
    let mut removed = vec![Q::zero(); p.len()];
    let mut order = Vec::new();
    let mut exponents = Vec::new();
    for y in p.sorted_support() {
        let alpha = ceil_neg_log2(&(p.mass(y).clone() / total.clone()))?.max(1);
        let share = Q::pow2_neg(alpha);
        if share > budget {
            break;
        }
        budget = budget - share.clone();
        removed[y] = share * total.clone();
        order.push(y);
        exponents.push(alpha);
    }
    if !budget.is_zero() {
        return Err(Error::HalfSplitInvariant { sum: (half - budget).to_string() });
    }
    let mut conditional = vec![Q::zero(); p.len()];
    for (&y, &a) in order.iter().zip(&exponents) {
        conditional[y] = Q::pow2_neg(a - 1);
    }
    let residual: Vec<Q> = p
        .masses()
        .iter()
        .zip(&removed)
        .map(|(m, r)| m.clone() - r.clone())
        .collect();
    let deficiency = p.deficiency().clone() + total.mul_pow2(-1);
    Ok(HalfSplit {
        removed,
        conditional: Pmf::new(conditional)?,
        residual: SubPmf::from_parts(residual, deficiency),
        order,
        exponents,
    })
}

/// The canonical code of a dyadic pmf: walking `order` (nonincreasing mass),
/// each codeword is the binary expansion of the mass accumulated before it,
/// cut to `-log2 p(x)` digits.
pub fn assign_codewords<Q: ExactScalar>(
    conditional: &Pmf<Q>,
    order: &[usize],
) -> Result<BTreeMap<usize, BitString>> {
    let expected = conditional.support().count();
    let mut seen = vec![false; conditional.len()];
    let mut lengths = Vec::with_capacity(order.len());
    for &x in order {
        if x >= conditional.len() || seen[x] || !conditional.mass(x).is_positive() {
            return Err(Error::BadSymbolOrder);
        }
        seen[x] = true;
        let e = conditional.mass(x).dyadic_exponent().ok_or_else(|| Error::NotDyadic {
            symbol: x,
            mass: conditional.mass(x).to_string(),
        })?;
        lengths.push((-e) as usize);
    }
    if order.len() != expected || lengths.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::BadSymbolOrder);
    }
    let mut out = BTreeMap::new();
    let mut prev: Option<BitString> = None;
    for (&x, &len) in order.iter().zip(&lengths) {
        let word = next_canonical(prev.as_ref(), len);
        out.insert(x, word.clone());
        prev = Some(word);
    }
    Ok(out)
}

/// Successor in a canonical code: add one to `prev`, then pad with zeros.
fn next_canonical(prev: Option<&BitString>, len: usize) -> BitString {
    let mut bits = match prev {
        None => Vec::new(),
        Some(p) => {
            let mut bits = p.bits().to_vec();
            let mut i = bits.len();
            loop {
                assert!(i > 0, "canonical code overflow");
                i -= 1;
                if bits[i] {
                    bits[i] = false;
                } else {
                    bits[i] = true;
                    break;
                }
            }
            bits
        }
    };
    debug_assert!(bits.len() <= len);
    bits.resize(len, false);
    BitString::new(bits)
}

/// A symbol served in some round.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundEntry<Q> {
    pub symbol: usize,
    /// Absolute mass removed from the source, `2^-w conditional`.
    pub removed: Q,
    /// `P(X = symbol | W = w)`.
    pub conditional: Q,
    pub codeword: BitString,
}

/// Round `w` of a decomposition, entries in emission order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DyadicRound<Q> {
    pub w: u32,
    entries: Vec<RoundEntry<Q>>,
    index: HashMap<usize, usize>,
}

impl<Q: ExactScalar> DyadicRound<Q> {
    fn new(w: u32, entries: Vec<RoundEntry<Q>>) -> Self {
        let index = entries.iter().enumerate().map(|(i, e)| (e.symbol, i)).collect();
        Self { w, entries, index }
    }

    fn relabel(&self, w: u32) -> Self {
        let shift = i64::from(self.w) - i64::from(w);
        let entries = self
            .entries
            .iter()
            .map(|e| RoundEntry { removed: e.removed.mul_pow2(shift), ..e.clone() })
            .collect();
        Self { w, entries, index: self.index.clone() }
    }

    pub fn entries(&self) -> &[RoundEntry<Q>] {
        &self.entries
    }

    pub fn entry(&self, symbol: usize) -> Option<&RoundEntry<Q>> {
        self.index.get(&symbol).map(|&i| &self.entries[i])
    }

    /// `P(W = w) = 2^-w`.
    pub fn weight(&self) -> Q {
        Q::pow2_neg(self.w)
    }

    pub fn conditional_pmf(&self, n: usize) -> Result<Pmf<Q>> {
        let mut mass = vec![Q::zero(); n];
        for e in &self.entries {
            mass[e.symbol] = e.conditional.clone();
        }
        Pmf::new(mass)
    }

    pub fn codebook(&self) -> Result<PrefixCodebook> {
        PrefixCodebook::new(self.entries.iter().map(|e| e.codeword.clone()))
    }

    /// Law of the key given `W = w`.
    pub fn key_law(&self) -> Result<KeyLaw<Q>> {
        KeyLaw::exact(self.entries.iter().map(|e| (e.codeword.clone(), e.conditional.clone())))
    }

    /// `H(X | W = w) = E[|K| | W = w]`, exact because the round is dyadic.
    pub fn entropy(&self) -> Q {
        let masses: Vec<Q> = self.entries.iter().map(|e| e.conditional.clone()).collect();
        dyadic_entropy(&masses).expect("round conditionals are dyadic")
    }
}

/// Residual history is kept for eventual-period detection up to this support.
const PERIOD_SUPPORT_LIMIT: usize = 256;

/// Lazily materialized decomposition `p = sum_w 2^-w p_{X|W=w}`.
#[derive(Debug, Clone)]
pub struct DyadicDecomposition<Q> {
    source: Pmf<Q>,
    rounds: Vec<DyadicRound<Q>>,
    /// Unnormalized residual after the last materialized round; total `2^-w`.
    residual: Vec<Q>,
    /// Normalized residual -> round after which it was seen.
    history: Option<HashMap<Vec<Q>, u32>>,
    /// `(start, len)`: rounds after `start` repeat with period `len`.
    period: Option<(u32, u32)>,
}

impl<Q: ExactScalar> DyadicDecomposition<Q> {
    pub fn new(source: Pmf<Q>) -> Self {
        let residual = source.masses().to_vec();
        let history = (source.support().count() <= PERIOD_SUPPORT_LIMIT)
            .then(|| HashMap::from([(residual.clone(), 0u32)]));
        Self { source, rounds: Vec::new(), residual, history, period: None }
    }

    /// Decomposition materialized through round `w_max`.
    pub fn decompose(source: Pmf<Q>, w_max: u32) -> Result<Self> {
        let mut d = Self::new(source);
        d.extend_to(w_max)?;
        Ok(d)
    }

    pub fn source(&self) -> &Pmf<Q> {
        &self.source
    }

    pub fn materialized(&self) -> u32 {
        self.rounds.len() as u32
    }

    pub fn rounds(&self) -> &[DyadicRound<Q>] {
        &self.rounds
    }

    /// Round `w >= 1`, if materialized.
    pub fn round(&self, w: u32) -> Option<&DyadicRound<Q>> {
        w.checked_sub(1).and_then(|i| self.rounds.get(i as usize))
    }

    /// Residual masses after the last materialized round.
    pub fn residual(&self) -> &[Q] {
        &self.residual
    }

    /// Unassigned mass, `2^-w_max`.
    pub fn tail(&self) -> Q {
        Q::pow2_neg(self.materialized())
    }

    /// `(start, len)` once the normalized residual has repeated.
    pub fn period(&self) -> Option<(u32, u32)> {
        self.period
    }

    /// The single symbol carrying all residual mass, if it has come to that.
    pub fn settled_symbol(&self) -> Option<usize> {
        let mut support = self.residual.iter().enumerate().filter(|(_, m)| m.is_positive());
        let first = support.next()?.0;
        support.next().is_none().then_some(first)
    }

    pub fn extend_to(&mut self, w_max: u32) -> Result<()> {
        while self.materialized() < w_max {
            self.step()?;
        }
        Ok(())
    }

    fn step(&mut self) -> Result<()> {
        let w = self.materialized() + 1;
        if let Some((start, len)) = self.period {
            // the residual recurs, so the round does too
            let src = &self.rounds[(start + (w - start - 1) % len) as usize];
            let round = src.relabel(w);
            for e in round.entries() {
                self.residual[e.symbol] = self.residual[e.symbol].clone() - e.removed.clone();
            }
            self.rounds.push(round);
            return Ok(());
        }
        let round = greedy_round(&mut self.residual, w)?;
        self.rounds.push(round);
        if let Some(history) = &mut self.history {
            let normalized: Vec<Q> = self.residual.iter().map(|m| m.mul_pow2(i64::from(w))).collect();
            match history.get(&normalized) {
                Some(&start) => {
                    self.period = Some((start, w - start));
                    self.history = None;
                }
                None => {
                    history.insert(normalized, w);
                }
            }
        }
        Ok(())
    }

    /// `sum_{w <= w_max} 2^-w p_{X|W=w}(x) + residual(x)` for every symbol,
    /// rebuilt from the rounds' conditionals.
    pub fn reconstruct(&self) -> Vec<Q> {
        let mut out = self.residual.clone();
        for r in &self.rounds {
            let weight = r.weight();
            for e in r.entries() {
                out[e.symbol] = out[e.symbol].clone() + weight.clone() * e.conditional.clone();
            }
        }
        out
    }

    /// `sum_{w <= w_max} 2^-w H(X | W = w)` over materialized rounds; equals
    /// the enumerated `E[|K|]`.
    pub fn enumerated_conditional_entropy(&self) -> Q {
        self.rounds
            .iter()
            .fold(Q::zero(), |a, r| a + r.weight() * r.entropy())
    }

    /// Exact `H(X | W)` over all rounds, available once the residual has
    /// become periodic: the periodic part is a geometric series.
    pub fn exact_conditional_entropy(&self) -> Option<Q> {
        let (start, len) = self.period?;
        let mut pre = Q::zero();
        let mut cycle = Q::zero();
        for r in &self.rounds[..(start + len) as usize] {
            let term = r.weight() * r.entropy();
            if r.w <= start {
                pre = pre + term;
            } else {
                cycle = cycle + term;
            }
        }
        let ratio = Q::one() - Q::pow2_neg(len);
        Some(pre + cycle / ratio)
    }
}

/// One round on the unnormalized residual (total `2^-(w-1)`), following the
/// pseudocode: `alpha = max(ceil(-log2 r(y)), w)`, stop at the first symbol
/// whose request exceeds the remaining budget.
fn greedy_round<Q: ExactScalar>(residual: &mut [Q], w: u32) -> Result<DyadicRound<Q>> {
    let mut budget = Q::pow2_neg(w);
    let mut entries = Vec::new();
    let mut prev: Option<BitString> = None;
    for y in sorted_support_of(residual) {
        let alpha = ceil_neg_log2(&residual[y])?.max(w);
        let share = Q::pow2_neg(alpha);
        if share > budget {
            break;
        }
        budget = budget - share.clone();
        residual[y] = residual[y].clone() - share.clone();
        let codeword = next_canonical(prev.as_ref(), (alpha - w) as usize);
        prev = Some(codeword.clone());
        entries.push(RoundEntry {
            symbol: y,
            conditional: share.mul_pow2(i64::from(w)),
            removed: share,
            codeword,
        });
        if budget.is_zero() {
            break;
        }
    }
    if !budget.is_zero() {
        let spent = Q::pow2_neg(w) - budget;
        return Err(Error::HalfSplitInvariant { sum: spent.mul_pow2(i64::from(w) - 1).to_string() });
    }
    Ok(DyadicRound::new(w, entries))
}

/// Exact partial sum `sum_{w <= n} w 2^-w` of the `Geom(1/2)` entropy and its
/// closed-form remainder `(n + 2) 2^-n`; the two always add to 2.
pub fn geometric_entropy_split<Q: ExactScalar>(n: u32) -> (Q, Q) {
    let partial = (1..=n).fold(Q::zero(), |a, w| {
        a + Q::from_ratio(i64::from(w), 1) * Q::pow2_neg(w)
    });
    let rest = Q::from_ratio(i64::from(n + 2), 1) * Q::pow2_neg(n);
    (partial, rest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::is_dyadic;
    use crate::{DyadicDecomposition, Pmf, Rational, SubPmf};

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    fn pmf(v: &[(i64, i64)]) -> Pmf {
        Pmf::new(v.iter().map(|&(n, d)| q(n, d)).collect()).unwrap()
    }

    fn point_symbol(r: &DyadicRound<Rational>) -> usize {
        assert_eq!(r.entries().len(), 1, "round {} not a point mass", r.w);
        r.entries()[0].symbol
    }

    #[test]
    fn half_split_examples() {
        let s = half_split(&SubPmf::from(pmf(&[(1, 2), (1, 4), (1, 4)]))).unwrap();
        assert_eq!(s.removed, vec![q(1, 2), q(0, 1), q(0, 1)]);
        assert_eq!(s.conditional, Pmf::point(3, 0));
        assert_eq!(s.residual.masses(), &[q(0, 1), q(1, 4), q(1, 4)]);

        let s = half_split(&SubPmf::from(Pmf::point(2, 0))).unwrap();
        assert_eq!(s.conditional, Pmf::point(2, 0));
        assert_eq!(s.residual.masses(), &[q(1, 2), q(0, 1)]);

        let s = half_split(&SubPmf::from(pmf(&[(2, 3), (1, 3)]))).unwrap();
        assert_eq!(s.exponents, vec![1]);
        assert_eq!(s.removed, vec![q(1, 2), q(0, 1)]);
        assert_eq!(s.conditional, Pmf::point(2, 0));
        assert_eq!(s.residual.masses(), &[q(1, 6), q(1, 3)]);
        assert_eq!(s.residual.deficiency(), &q(1, 2));

        assert_eq!(half_split(&SubPmf::new(vec![q(0, 1)]).unwrap()), Err(Error::ZeroMass));
    }

    #[test]
    fn decompose_examples() {
        let d = DyadicDecomposition::decompose(pmf(&[(1, 2), (1, 4), (1, 4)]), 4).unwrap();
        let syms: Vec<usize> = d.rounds().iter().map(point_symbol).collect();
        assert_eq!(syms, vec![0, 1, 2, 2]);
        assert_eq!(d.residual(), &[q(0, 1), q(0, 1), q(1, 16)]);
        assert_eq!(d.settled_symbol(), Some(2));

        let d = DyadicDecomposition::decompose(Pmf::uniform(2), 6).unwrap();
        let syms: Vec<usize> = d.rounds().iter().map(point_symbol).collect();
        assert_eq!(syms, vec![0, 1, 1, 1, 1, 1]);

        let d = DyadicDecomposition::decompose(pmf(&[(2, 3), (1, 3)]), 12).unwrap();
        assert_eq!(point_symbol(&d.rounds()[0]), 0);
        // normalized residual after round 1 is (1/3, 2/3)
        let r1: Vec<Rational> = {
            let one = DyadicDecomposition::decompose(pmf(&[(2, 3), (1, 3)]), 1).unwrap();
            one.residual().iter().map(|m| m.mul_pow2(1)).collect()
        };
        assert_eq!(r1, vec![q(1, 3), q(2, 3)]);
        assert_eq!(d.reconstruct(), vec![q(2, 3), q(1, 3)]);
    }

    #[test]
    fn pseudocode_rounds_for_four_symbols() {
        let d = DyadicDecomposition::decompose(pmf(&[(2, 5), (3, 10), (1, 5), (1, 10)]), 2).unwrap();
        let round = |w: u32| -> Vec<(usize, Rational, String)> {
            d.round(w)
                .unwrap()
                .entries()
                .iter()
                .map(|e| (e.symbol, e.removed.clone(), e.codeword.to_string()))
                .collect()
        };
        assert_eq!(round(1), vec![(0, q(1, 4), "0".into()), (1, q(1, 4), "1".into())]);
        assert_eq!(round(2), vec![(2, q(1, 8), "0".into()), (0, q(1, 8), "1".into())]);
    }

    #[test]
    fn greedy_round_matches_half_split_of_residual() {
        let p = pmf(&[(2, 7), (1, 7), (3, 14), (5, 14)]);
        let mut d = DyadicDecomposition::new(p.clone());
        let mut sub = SubPmf::from(p);
        for w in 1..=12u32 {
            d.extend_to(w).unwrap();
            let split = half_split(&sub).unwrap();
            let round = d.round(w).unwrap();
            assert_eq!(round.conditional_pmf(4).unwrap(), split.conditional);
            let order: Vec<usize> = round.entries().iter().map(|e| e.symbol).collect();
            assert_eq!(order, split.order);
            sub = split.residual;
            assert_eq!(d.residual(), sub.masses());
        }
    }

    #[test]
    fn codeword_examples() {
        let c = assign_codewords(&Pmf::uniform(2), &[0, 1]).unwrap();
        assert_eq!(c[&0].to_string(), "0");
        assert_eq!(c[&1].to_string(), "1");
        let c = assign_codewords(&pmf(&[(1, 2), (1, 4), (1, 4)]), &[0, 1, 2]).unwrap();
        let words: Vec<String> = c.values().map(|w| w.to_string()).collect();
        assert_eq!(words, ["0", "10", "11"]);
        let c = assign_codewords(&pmf(&[(1, 2), (1, 8), (1, 8), (1, 8), (1, 8)]), &[0, 1, 2, 3, 4]).unwrap();
        let words: Vec<String> = c.values().map(|w| w.to_string()).collect();
        assert_eq!(words, ["0", "100", "101", "110", "111"]);
        assert!(PrefixCodebook::new(c.values().cloned()).unwrap().is_full());

        assert!(matches!(assign_codewords(&pmf(&[(1, 3), (2, 3)]), &[1, 0]), Err(Error::NotDyadic { .. })));
        assert_eq!(assign_codewords(&pmf(&[(1, 4), (1, 2), (1, 4)]), &[0, 1, 2]), Err(Error::BadSymbolOrder));
        assert_eq!(assign_codewords(&pmf(&[(1, 2), (1, 2)]), &[0]), Err(Error::BadSymbolOrder));
    }

    #[test]
    fn rounds_are_dyadic_with_full_codes() {
        let d = DyadicDecomposition::decompose(pmf(&[(2, 5), (3, 10), (1, 5), (1, 10)]), 20).unwrap();
        for r in d.rounds() {
            let c = r.conditional_pmf(4).unwrap();
            assert!(is_dyadic(&c));
            assert!(r.codebook().unwrap().is_full());
            let order: Vec<usize> = r.entries().iter().map(|e| e.symbol).collect();
            let words = assign_codewords(&c, &order).unwrap();
            for e in r.entries() {
                assert_eq!(words[&e.symbol], e.codeword);
            }
        }
    }

    #[test]
    fn period_detection_closes_the_entropy() {
        let mut d = DyadicDecomposition::new(pmf(&[(2, 3), (1, 3)]));
        d.extend_to(40).unwrap();
        let (start, len) = d.period().expect("rational source recurs");
        assert!(start + len <= 40);
        let exact = d.exact_conditional_entropy().unwrap();
        let partial = d.enumerated_conditional_entropy();
        assert!(partial <= exact);
        // the rounds after 40 hold at most 2^-40 mass, each contributing at most log2|X| = 1 bit
        assert!(exact - partial <= Rational::pow2_neg(40));

        let mut fresh = DyadicDecomposition::new(pmf(&[(2, 3), (1, 3)]));
        fresh.history = None;
        fresh.extend_to(40).unwrap();
        assert_eq!(fresh.rounds(), d.rounds());
        assert_eq!(fresh.residual(), d.residual());
    }

    #[test]
    fn geometric_weights_have_two_bits() {
        for n in [0u32, 1, 5, 30] {
            let (a, b) = geometric_entropy_split::<Rational>(n);
            assert_eq!(a + b, q(2, 1));
        }
    }
}
