use num_rational::BigRational;
use num_traits::One;

use crate::prob::Pmf;
use crate::rng::BitSource;
use crate::scalar::ExactScalar;
use crate::Result;

/// Knuth–Yao sampler: walks the discrete distribution generating tree whose
/// level-`i` leaves are the symbols with a 1 in the `i`-th binary digit of
/// their mass.
#[derive(Debug, Clone)]
pub struct KnuthYao {
    symbols: Vec<usize>,
    /// Fractional remainders `frac(p(x) 2^i)` at the deepest computed level.
    remainders: Vec<BigRational>,
    /// `digits[i][j]`: digit `i + 1` of symbol `symbols[j]`.
    digits: Vec<Vec<bool>>,
    certain: Option<usize>,
}

impl KnuthYao {
    pub fn new<Q: ExactScalar>(p: &Pmf<Q>) -> Self {
        let certain = p.support().find(|&x| p.mass(x).is_one());
        let symbols: Vec<usize> = p.support().collect();
        let remainders = symbols.iter().map(|&x| p.mass(x).to_rational()).collect();
        Self { symbols, remainders, digits: Vec::new(), certain }
    }

    fn level(&mut self, i: usize) -> &[bool] {
        while self.digits.len() <= i {
            let one = BigRational::one();
            let row = self
                .remainders
                .iter_mut()
                .map(|r| {
                    *r = &*r * BigRational::from_integer(2.into());
                    let d = *r >= one;
                    if d {
                        *r -= &one;
                    }
                    d
                })
                .collect();
            self.digits.push(row);
        }
        &self.digits[i]
    }

    /// Draws one symbol and reports the number of fair bits consumed.
    pub fn sample<B: BitSource + ?Sized>(&mut self, src: &mut B) -> Result<(usize, u64)> {
        if let Some(x) = self.certain {
            return Ok((x, 0));
        }
        // d counts the internal nodes left of the current one at this level
        let mut d: i64 = 0;
        let mut i = 0usize;
        loop {
            d = 2 * d + i64::from(src.next_bit()?);
            self.level(i);
            let row = &self.digits[i];
            for (j, &x) in self.symbols.iter().enumerate() {
                if row[j] {
                    d -= 1;
                    if d < 0 {
                        return Ok((x, i as u64 + 1));
                    }
                }
            }
            i += 1;
        }
    }
}

/// One Knuth–Yao draw from `p`: `(symbol, bits consumed)`.
pub fn knuth_yao_sample<Q: ExactScalar, B: BitSource + ?Sized>(p: &Pmf<Q>, src: &mut B) -> Result<(usize, u64)> {
    KnuthYao::new(p).sample(src)
}
