//! Fair-bit sources and exact lazy uniforms.
//!
//! Every random decision in the protocols reduces to comparing a uniform
//! `U in [0, 1)` with an exact rational threshold. [`LazyUniform`] reveals the
//! binary expansion of `U` only as far as needed to decide each comparison,
//! so all draws are exact.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::prob::Pmf;
use crate::scalar::ExactScalar;
use crate::{Error, Result};

/// A stream of fair bits.
pub trait BitSource {
    fn next_bit(&mut self) -> Result<bool>;

    /// Next `k <= 64` bits, most significant first.
    fn next_bits(&mut self, k: u32) -> Result<u64> {
        debug_assert!(k <= 64);
        let mut v = 0u64;
        for _ in 0..k {
            v = (v << 1) | u64::from(self.next_bit()?);
        }
        Ok(v)
    }
}

impl<B: BitSource + ?Sized> BitSource for &mut B {
    fn next_bit(&mut self) -> Result<bool> {
        (**self).next_bit()
    }

    fn next_bits(&mut self, k: u32) -> Result<u64> {
        (**self).next_bits(k)
    }
}

/// Seeded deterministic bit stream.
///
/// `substream(seed, index)` selects an independent ChaCha stream per trial
/// index, so results do not depend on how trials are spread over workers.
#[derive(Debug, Clone)]
pub struct RandomSource {
    rng: ChaCha8Rng,
    buf: u64,
    left: u32,
    consumed: u64,
}

impl RandomSource {
    pub fn new(seed: u64) -> Self {
        Self::from_rng(ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn substream(seed: u64, index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        Self::from_rng(rng)
    }

    fn from_rng(rng: ChaCha8Rng) -> Self {
        Self { rng, buf: 0, left: 0, consumed: 0 }
    }

    /// Bits handed out so far.
    pub fn consumed(&self) -> u64 {
        self.consumed
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform integer in `0..n` by rejection.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0);
        let zone = u64::MAX - u64::MAX % n;
        loop {
            let v = self.rng.next_u64();
            if v < zone {
                return v % n;
            }
        }
    }
}

impl BitSource for RandomSource {
    fn next_bit(&mut self) -> Result<bool> {
        if self.left == 0 {
            self.buf = self.rng.next_u64();
            self.left = 64;
        }
        self.left -= 1;
        self.consumed += 1;
        Ok((self.buf >> self.left) & 1 == 1)
    }

    fn next_bits(&mut self, k: u32) -> Result<u64> {
        if k == 0 {
            return Ok(0);
        }
        if k <= self.left {
            self.left -= k;
            self.consumed += u64::from(k);
            let mask = if k == 64 { u64::MAX } else { (1u64 << k) - 1 };
            return Ok((self.buf >> self.left) & mask);
        }
        let mut v = 0u64;
        for _ in 0..k {
            v = (v << 1) | u64::from(self.next_bit()?);
        }
        Ok(v)
    }
}

/// A finite, caller-supplied bit sequence; fails once exhausted.
#[derive(Debug, Clone)]
pub struct FixedBits {
    bits: Vec<bool>,
    pos: usize,
}

impl FixedBits {
    pub fn new(bits: Vec<bool>) -> Self {
        Self { bits, pos: 0 }
    }

    /// Parses a string of `0`/`1` characters; other characters are ignored.
    pub fn parse(text: &str) -> Self {
        Self::new(text.chars().filter_map(|c| match c {
            '0' => Some(false),
            '1' => Some(true),
            _ => None,
        }).collect())
    }

    pub fn consumed(&self) -> usize {
        self.pos
    }
}

impl BitSource for FixedBits {
    fn next_bit(&mut self) -> Result<bool> {
        let b = *self.bits.get(self.pos).ok_or(Error::BitsExhausted)?;
        self.pos += 1;
        Ok(b)
    }
}

/// Flips every bit of the inner source, turning `U` into `1 - U`.
#[derive(Debug, Clone)]
pub struct Complemented<B>(pub B);

impl<B: BitSource> BitSource for Complemented<B> {
    fn next_bit(&mut self) -> Result<bool> {
        self.0.next_bit().map(|b| !b)
    }
}

/// Counts the bits drawn through it.
#[derive(Debug)]
pub struct Counting<B> {
    pub inner: B,
    pub count: u64,
}

impl<B: BitSource> Counting<B> {
    pub fn new(inner: B) -> Self {
        Self { inner, count: 0 }
    }
}

impl<B: BitSource> BitSource for Counting<B> {
    fn next_bit(&mut self) -> Result<bool> {
        self.count += 1;
        self.inner.next_bit()
    }
}

/// A uniform on `[0, 1)` known to lie in `[lo / 2^n, (lo + 1) / 2^n)`.
///
/// Comparisons against rationals refine the interval bit by bit until they are
/// decided; boundaries follow half-open conventions, so `U >= t` and `U < t`
/// always exhaust each other.
#[derive(Debug, Clone)]
pub struct LazyUniform {
    lo: BigInt,
    n: u64,
}

impl Default for LazyUniform {
    fn default() -> Self {
        Self::new()
    }
}

impl LazyUniform {
    pub fn new() -> Self {
        Self { lo: BigInt::zero(), n: 0 }
    }

    pub fn bits_revealed(&self) -> u64 {
        self.n
    }

    /// `U < t`, drawing bits from `src` as needed.
    pub fn lt<Q: ExactScalar, B: BitSource + ?Sized>(&mut self, t: &Q, src: &mut B) -> Result<bool> {
        self.lt_rational(&t.to_rational(), src)
    }

    /// `U >= t`.
    pub fn ge<Q: ExactScalar, B: BitSource + ?Sized>(&mut self, t: &Q, src: &mut B) -> Result<bool> {
        self.lt(t, src).map(|b| !b)
    }

    pub fn lt_rational<B: BitSource + ?Sized>(&mut self, t: &BigRational, src: &mut B) -> Result<bool> {
        let (a, b) = (t.numer(), t.denom());
        if a <= &BigInt::zero() {
            return Ok(false);
        }
        if a >= b {
            return Ok(true);
        }
        loop {
            // U < t certainly iff (lo + 1) * b <= a * 2^n
            let scaled_a = a << self.n;
            let lo_b = &self.lo * b;
            if &lo_b + b <= scaled_a {
                return Ok(true);
            }
            // U >= t certainly iff lo * b >= a * 2^n
            if lo_b >= scaled_a {
                return Ok(false);
            }
            let bit = src.next_bit()?;
            self.lo = (&self.lo << 1u32) + if bit { BigInt::one() } else { BigInt::zero() };
            self.n += 1;
        }
    }
}

/// Exact inverse-CDF sampler for a fixed pmf.
#[derive(Debug, Clone)]
pub struct PmfSampler {
    cdf: Vec<BigRational>,
    symbols: Vec<usize>,
}

impl PmfSampler {
    pub fn new<Q: ExactScalar>(p: &Pmf<Q>) -> Self {
        let mut cdf = Vec::new();
        let mut symbols = Vec::new();
        let mut acc = BigRational::zero();
        for s in p.support() {
            acc += p.mass(s).to_rational();
            cdf.push(acc.clone());
            symbols.push(s);
        }
        Self { cdf, symbols }
    }

    /// The symbol `s` with `F(s-) <= U < F(s)`.
    pub fn sample<B: BitSource + ?Sized>(&self, src: &mut B) -> Result<usize> {
        let mut u = LazyUniform::new();
        let (mut lo, mut hi) = (0usize, self.cdf.len() - 1);
        while lo < hi {
            let mid = (lo + hi) / 2;
            if u.lt_rational(&self.cdf[mid], src)? {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        Ok(self.symbols[lo])
    }
}
