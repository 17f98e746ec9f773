use std::collections::BTreeSet;

use super::{BitString, KeyLaw};
use crate::scalar::ExactScalar;
use crate::{Error, Result, Rational};

/// A prefix-free set of codewords.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrefixCodebook {
    words: BTreeSet<BitString>,
}

impl PrefixCodebook {
    /// Rejects duplicates and the first prefix pair found.
    pub fn new(words: impl IntoIterator<Item = BitString>) -> Result<Self> {
        let mut set = BTreeSet::new();
        for w in words {
            let text = w.to_string();
            if !set.insert(w) {
                return Err(Error::DuplicateCodeword(text));
            }
        }
        // in lexicographic order a word's extensions follow it directly
        let sorted: Vec<&BitString> = set.iter().collect();
        for pair in sorted.windows(2) {
            if pair[0].is_prefix_of(pair[1]) {
                return Err(Error::NotPrefixFree {
                    prefix: pair[0].to_string(),
                    word: pair[1].to_string(),
                });
            }
        }
        Ok(Self { words: set })
    }

    pub fn words(&self) -> impl Iterator<Item = &BitString> {
        self.words.iter()
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// `sum 2^-|k|`, exact.
    pub fn kraft_sum(&self) -> Rational {
        self.words
            .iter()
            .fold(Rational::from_integer(0.into()), |a, w| a + Rational::pow2_neg(w.len() as u32))
    }

    pub fn is_full(&self) -> bool {
        self.kraft_sum() == Rational::from_integer(1.into())
    }
}

/// The law `p(k) = 2^-|k|` of a full prefix-free codebook.
pub fn law_from_codebook<Q: ExactScalar>(c: &PrefixCodebook) -> Result<KeyLaw<Q>> {
    let sum = c.kraft_sum();
    if !c.is_full() {
        let deficit = Rational::from_integer(1.into()) - &sum;
        return Err(Error::NotFull { sum: sum.to_string(), deficit: deficit.to_string() });
    }
    KeyLaw::exact(c.words().map(|w| (w.clone(), Q::one().mul_pow2(-(w.len() as i64)))))
}
