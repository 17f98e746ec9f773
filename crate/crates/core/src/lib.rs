//! Variable-length secret key agreement with randomly-stopped bit sequences.
//!
//! A randomly-stopped bit sequence (RSBS) is a random binary string in which
//! every bit, given that it exists and given all earlier bits, is a fair coin
//! flip. This crate provides:
//!
//! * [`prob`]: exact rational pmfs, joint pmfs and information measures;
//! * [`stopped_seq`]: bit strings, key laws and the RSBS verifier, prefix
//!   codebooks, concatenation, stopping rules and error-length bookkeeping;
//! * [`dyadic`]: decomposition of any pmf into a `Geom(1/2)` mixture of
//!   dyadic pmfs, canonical codeword assignment and a Knuth–Yao sampler;
//! * [`common`]: zero-error key agreement when both parties see the same `X`;
//! * [`reconciled`]: hash-checked agreement for `X ≈ Y` and the two-stage
//!   pipeline for general correlated sources.
//!
//! Probabilities are generic over [`ExactScalar`]; the crate-root aliases pick
//! the arbitrary-precision backend. Real-valued reports (entropies, bounds)
//! are generic over `num_traits::Float`.

pub mod common;
pub mod dyadic;
pub mod error;
pub mod format;
pub mod prob;
pub mod reconciled;
pub mod rng;
pub mod scalar;
pub mod stats;
pub mod stopped_seq;

pub use error::{Error, Result};
pub use scalar::{ExactInt, ExactScalar};

/// Arbitrary-precision exact rational, the default probability scalar.
pub type Rational = num_rational::BigRational;
/// Fixed-width exact rational; faster, panics on overflow.
pub type Rational128 = num_rational::Ratio<i128>;

pub type Pmf = prob::Pmf<Rational>;
pub type SubPmf = prob::SubPmf<Rational>;
pub type JointPmf = prob::JointPmf<Rational>;
pub type KeyLaw = stopped_seq::KeyLaw<Rational>;
pub type StoppingRule = stopped_seq::StoppingRule<Rational>;
pub type DyadicDecomposition = dyadic::DyadicDecomposition<Rational>;
pub type CommonScheme = common::CommonScheme<Rational>;

pub type Pmf128 = prob::Pmf<Rational128>;
pub type JointPmf128 = prob::JointPmf<Rational128>;

pub use stopped_seq::BitString;
