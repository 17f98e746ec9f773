use std::collections::BTreeMap;

use super::verify::Trie;
use super::{verify_rsbs, BitString, KeyLaw, VerifyOptions};
use crate::rng::{BitSource, LazyUniform};
use crate::scalar::ExactScalar;
use crate::{Error, Result};

/// A randomized stopping time for fair bits.
///
/// After reading `b^n`, the sequence continues with probability `rho(b^n)`:
/// with fresh uniforms `G_n`, the stopping index is
/// `M = min{n : G_n >= rho(B^n)}`. `rho` is defined on reachable prefixes only.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StoppingRule<Q> {
    rho: BTreeMap<BitString, Q>,
}

impl<Q: ExactScalar> StoppingRule<Q> {
    pub fn new(rho: BTreeMap<BitString, Q>) -> Result<Self> {
        for (b, r) in &rho {
            if r.is_negative() || *r > Q::one() {
                return Err(Error::InvalidParameter(format!("rho({b}) = {r} outside [0, 1]")));
            }
        }
        Ok(Self { rho })
    }

    pub fn rho(&self, b: &BitString) -> Option<&Q> {
        self.rho.get(b)
    }

    pub fn entries(&self) -> &BTreeMap<BitString, Q> {
        &self.rho
    }

    /// The law of `B^M`, enumerated breadth-first to `max_depth`; mass still
    /// continuing past that depth becomes the tail.
    pub fn induced_law(&self, max_depth: usize) -> Result<KeyLaw<Q>> {
        let half = Q::from_ratio(1, 2);
        let mut atoms = Vec::new();
        let mut tail = Q::zero();
        let mut frontier = vec![(BitString::empty(), Q::one())];
        while !frontier.is_empty() {
            let mut next = Vec::new();
            for (b, reach) in frontier {
                let rho = self
                    .rho
                    .get(&b)
                    .ok_or_else(|| Error::MissingContinuation(b.to_string()))?;
                let stop = reach.clone() * (Q::one() - rho.clone());
                atoms.push((b.clone(), stop));
                let go = reach * rho.clone();
                if go.is_zero() {
                    continue;
                }
                if b.len() >= max_depth {
                    tail = tail + go;
                    continue;
                }
                let each = go * half.clone();
                next.push((b.with(false), each.clone()));
                next.push((b.with(true), each));
            }
            frontier = next;
        }
        KeyLaw::new(atoms, tail)
    }

    /// Draws fair bits from `src` until the rule stops; the uniforms `G_n`
    /// come from the same source.
    pub fn sample<B: BitSource + ?Sized>(&self, src: &mut B) -> Result<BitString> {
        let mut b = BitString::empty();
        loop {
            let rho = self
                .rho
                .get(&b)
                .ok_or_else(|| Error::MissingContinuation(b.to_string()))?;
            if LazyUniform::new().ge(rho, src)? {
                return Ok(b);
            }
            b.push(src.next_bit()?);
        }
    }
}

/// Continuation probabilities `rho(b^n) = P(|K| >= n+1 | |K| >= n, K^n = b^n)`
/// of an exact RSBS law, on every prefix the law reaches.
pub fn stopping_rule_of<Q: ExactScalar>(law: &KeyLaw<Q>) -> Result<StoppingRule<Q>> {
    if law.tail().is_positive() {
        return Err(Error::TailNotAccepted(law.tail().to_string()));
    }
    let opts = VerifyOptions { max_depth: usize::MAX, accept_tail: false };
    let verdict = verify_rsbs(law, opts)?;
    if !verdict.is_valid() {
        return Err(Error::NotRandomlyStopped(format!("{verdict:?}")));
    }
    let trie = Trie::build(law, usize::MAX)?;
    let mut rho = BTreeMap::new();
    for (prefix, c0, c1) in trie.bfs() {
        let on = law.mass(&prefix);
        let go = c0.clone() + c1.clone();
        let reach = on + go.clone();
        if reach.is_positive() {
            rho.insert(prefix, go / reach);
        }
    }
    // leaves of the trie are atoms; their rho is 0 and was set above
    Ok(StoppingRule { rho })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RandomSource;
    use crate::{KeyLaw, Rational, StoppingRule};

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    #[test]
    fn rho_of_small_laws() {
        let r = stopping_rule_of(&KeyLaw::point(BitString::empty())).unwrap();
        assert_eq!(r.rho(&BitString::empty()), Some(&q(0, 1)));

        let l = KeyLaw::exact([
            ("0".into(), q(1, 2)),
            ("10".into(), q(1, 4)),
            ("11".into(), q(1, 4)),
        ])
        .unwrap();
        let r = stopping_rule_of(&l).unwrap();
        let expect: BTreeMap<BitString, Rational> = [
            ("ε", q(1, 1)),
            ("0", q(0, 1)),
            ("1", q(1, 1)),
            ("10", q(0, 1)),
            ("11", q(0, 1)),
        ]
        .into_iter()
        .map(|(k, v)| (BitString::from(k), v))
        .collect();
        assert_eq!(r.entries(), &expect);
        assert_eq!(r.induced_law(64).unwrap(), l);
    }

    #[test]
    fn two_stage_experiment() {
        let rule = StoppingRule::new(BTreeMap::from([
            (BitString::empty(), q(1, 2)),
            ("0".into(), q(0, 1)),
            ("1".into(), q(0, 1)),
        ]))
        .unwrap();
        let law = rule.induced_law(64).unwrap();
        let expect = KeyLaw::exact([
            (BitString::empty(), q(1, 2)),
            ("0".into(), q(1, 4)),
            ("1".into(), q(1, 4)),
        ])
        .unwrap();
        assert_eq!(law, expect);
        assert_eq!(stopping_rule_of(&law).unwrap(), rule);
    }

    #[test]
    fn rejects_non_rsbs_and_missing_prefixes() {
        assert!(matches!(
            stopping_rule_of(&KeyLaw::point("0".into())),
            Err(Error::NotRandomlyStopped(_))
        ));
        let rule = StoppingRule::new(BTreeMap::from([(BitString::empty(), q(1, 1))])).unwrap();
        assert_eq!(rule.induced_law(8), Err(Error::MissingContinuation("0".into())));
        assert!(StoppingRule::new(BTreeMap::from([(BitString::empty(), q(3, 2))])).is_err());
    }

    #[test]
    fn truncation_moves_mass_to_tail() {
        // continue forever: everything ends up in the tail at depth 3
        let mut rho = BTreeMap::new();
        for len in 0..=3usize {
            for v in 0..(1u32 << len) {
                let bits = (0..len).map(|i| (v >> (len - 1 - i)) & 1 == 1).collect();
                rho.insert(BitString::new(bits), q(1, 1));
            }
        }
        let law = StoppingRule::new(rho).unwrap().induced_law(3).unwrap();
        assert!(law.is_empty());
        assert_eq!(law.tail(), &q(1, 1));
    }

    #[test]
    fn sampling_follows_the_rule() {
        let rule = StoppingRule::new(BTreeMap::from([
            (BitString::empty(), q(1, 2)),
            ("0".into(), q(0, 1)),
            ("1".into(), q(0, 1)),
        ]))
        .unwrap();
        let mut src = RandomSource::new(5);
        let n = 40_000;
        let empty = (0..n).filter(|_| rule.sample(&mut src).unwrap().is_empty()).count() as f64;
        assert!((empty / n as f64 - 0.5).abs() < 4.0 * (0.25 / n as f64).sqrt());
    }
}
