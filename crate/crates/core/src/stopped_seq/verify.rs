use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::{BitString, KeyLaw};
use crate::scalar::ExactScalar;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VerifyOptions {
    /// Keys longer than this are rejected.
    pub max_depth: usize,
    /// Allow a law with positive tail; each split may then differ by up to
    /// the tail mass, which the verdict reports.
    pub accept_tail: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { max_depth: 64, accept_tail: false }
    }
}

/// Outcome of [`verify_rsbs`]. Exact quantities are rendered as rationals.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum RsbsVerdict {
    /// Every reachable split is fair (up to `tail`, which is `"0"` for exact laws).
    Valid { tail: String, prefixes_checked: usize },
    /// First unfair split in breadth-first order: bit `n` after `prefix`.
    Violation {
        n: usize,
        prefix: String,
        /// `P(K_n = 0 | |K| >= n, K^{n-1} = prefix)`.
        conditional_zero: String,
        mass_zero: String,
        mass_one: String,
        tail: String,
    },
}

impl RsbsVerdict {
    pub fn is_valid(&self) -> bool {
        matches!(self, RsbsVerdict::Valid { .. })
    }
}

struct Node<Q> {
    child: [Option<usize>; 2],
    /// Mass of atoms passing through this node's 0/1 edge.
    through: [Q; 2],
}

/// Prefix trie with the mass flowing through each edge.
pub(super) struct Trie<Q> {
    nodes: Vec<Node<Q>>,
}

impl<Q: ExactScalar> Trie<Q> {
    pub(super) fn build(law: &KeyLaw<Q>, max_depth: usize) -> Result<Self> {
        let mut nodes = vec![Node { child: [None, None], through: [Q::zero(), Q::zero()] }];
        for (k, m) in law.atoms() {
            if k.len() > max_depth {
                return Err(Error::DepthExceeded(max_depth));
            }
            let mut at = 0;
            for &b in k.bits() {
                let i = usize::from(b);
                nodes[at].through[i] = nodes[at].through[i].clone() + m.clone();
                at = match nodes[at].child[i] {
                    Some(c) => c,
                    None => {
                        nodes.push(Node { child: [None, None], through: [Q::zero(), Q::zero()] });
                        let c = nodes.len() - 1;
                        nodes[at].child[i] = Some(c);
                        c
                    }
                };
            }
        }
        Ok(Self { nodes })
    }

    /// Nodes in breadth-first order (depth, then lexicographic), with their
    /// prefix and the masses through their two outgoing edges.
    pub(super) fn bfs(&self) -> Vec<(BitString, &Q, &Q)> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut queue = VecDeque::from([(0usize, BitString::empty())]);
        while let Some((at, prefix)) = queue.pop_front() {
            let node = &self.nodes[at];
            for b in [false, true] {
                if let Some(c) = node.child[usize::from(b)] {
                    queue.push_back((c, prefix.with(b)));
                }
            }
            out.push((prefix, &node.through[0], &node.through[1]));
        }
        out
    }
}

/// Checks exactly that every reachable bit is a fair coin flip given that it
/// exists and given the bits before it.
///
/// For each prefix `k^{n-1}` with positive continuation mass, compares the
/// masses `c0`, `c1` of keys continuing with 0 and with 1: the conditional
/// probability is 1/2 iff `c0 = c1`. With an accepted tail the check becomes
/// `|c0 - c1| <= tail`.
pub fn verify_rsbs<Q: ExactScalar>(law: &KeyLaw<Q>, opts: VerifyOptions) -> Result<RsbsVerdict> {
    let tail = law.tail().clone();
    if tail.is_positive() && !opts.accept_tail {
        return Err(Error::TailNotAccepted(tail.to_string()));
    }
    let trie = Trie::build(law, opts.max_depth)?;
    let mut checked = 0;
    for (prefix, c0, c1) in trie.bfs() {
        let total = c0.clone() + c1.clone();
        if total.is_zero() {
            continue;
        }
        checked += 1;
        let gap = (c0.clone() - c1.clone()).abs();
        if gap > tail {
            return Ok(RsbsVerdict::Violation {
                n: prefix.len() + 1,
                prefix: prefix.to_bits_string(),
                conditional_zero: (c0.clone() / total).to_string(),
                mass_zero: c0.to_string(),
                mass_one: c1.to_string(),
                tail: tail.to_string(),
            });
        }
    }
    Ok(RsbsVerdict::Valid { tail: tail.to_string(), prefixes_checked: checked })
}

/// Outcome of [`pointwise_mass_bound`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum PointwiseVerdict {
    Pass,
    Fail { key: String, mass: String, bound: String },
}

impl PointwiseVerdict {
    pub fn passed(&self) -> bool {
        matches!(self, PointwiseVerdict::Pass)
    }
}

/// Checks `P(K = k) <= 2^-|k|` for every atom; reports the first failure.
pub fn pointwise_mass_bound<Q: ExactScalar>(law: &KeyLaw<Q>) -> PointwiseVerdict {
    for (k, m) in law.atoms() {
        let bound = Q::one().mul_pow2(-(k.len() as i64));
        if m.cmp_value(&bound).is_gt() {
            return PointwiseVerdict::Fail {
                key: k.to_bits_string(),
                mass: m.to_string(),
                bound: bound.to_string(),
            };
        }
    }
    PointwiseVerdict::Pass
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{KeyLaw, Rational};

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    fn law(items: &[(&str, (i64, i64))]) -> KeyLaw {
        KeyLaw::exact(items.iter().map(|&(k, (n, d))| (BitString::from(k), q(n, d)))).unwrap()
    }

    #[test]
    fn small_examples() {
        let v = verify_rsbs(&law(&[("0", (1, 2)), ("10", (1, 4)), ("11", (1, 4))]), VerifyOptions::default()).unwrap();
        assert!(v.is_valid());
        assert!(verify_rsbs(&law(&[("ε", (1, 1))]), VerifyOptions::default()).unwrap().is_valid());
        match verify_rsbs(&law(&[("0", (1, 1))]), VerifyOptions::default()).unwrap() {
            RsbsVerdict::Violation { n, prefix, conditional_zero, .. } => {
                assert_eq!(n, 1);
                assert_eq!(prefix, "");
                assert_eq!(conditional_zero, "1");
            }
            v => panic!("{v:?}"),
        }
    }

    #[test]
    fn violation_is_first_in_breadth_first_order() {
        // fair at ε; unfair after "0" (3/8 vs 1/8) and after "1" (1/8 vs 3/8)
        let l = law(&[("00", (3, 8)), ("01", (1, 8)), ("10", (1, 8)), ("11", (3, 8))]);
        match verify_rsbs(&l, VerifyOptions::default()).unwrap() {
            RsbsVerdict::Violation { n, prefix, conditional_zero, .. } => {
                assert_eq!((n, prefix.as_str(), conditional_zero.as_str()), (2, "0", "3/4"));
            }
            v => panic!("{v:?}"),
        }
    }

    #[test]
    fn tail_needs_consent_and_bounds_the_gap() {
        let l = KeyLaw::new([(BitString::from("0"), q(1, 2)), (BitString::from("1"), q(1, 4))], q(1, 4)).unwrap();
        assert!(matches!(verify_rsbs(&l, VerifyOptions::default()), Err(Error::TailNotAccepted(_))));
        let v = verify_rsbs(&l, VerifyOptions { accept_tail: true, ..Default::default() }).unwrap();
        assert_eq!(v, RsbsVerdict::Valid { tail: "1/4".into(), prefixes_checked: 1 });
    }

    #[test]
    fn depth_guard() {
        let l = law(&[("0000", (1, 2)), ("1", (1, 2))]);
        let opts = VerifyOptions { max_depth: 3, ..Default::default() };
        assert_eq!(verify_rsbs(&l, opts), Err(Error::DepthExceeded(3)));
    }

    #[test]
    fn pointwise_examples() {
        assert!(pointwise_mass_bound(&law(&[("0", (1, 2)), ("10", (1, 4)), ("11", (1, 4))])).passed());
        assert!(pointwise_mass_bound(&law(&[("ε", (1, 2)), ("0", (1, 4)), ("1", (1, 4))])).passed());
        assert_eq!(
            pointwise_mass_bound(&law(&[("0", (1, 1))])),
            PointwiseVerdict::Fail { key: "0".into(), mass: "1".into(), bound: "1/2".into() }
        );
    }
}
