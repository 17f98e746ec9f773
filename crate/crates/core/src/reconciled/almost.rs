use std::collections::BTreeMap;

use num_integer::Integer;
use num_traits::{Float, ToPrimitive};

use super::hash::{collision_error, HashFunction};
use super::{Message, Payload};
use crate::common::CommonScheme;
use crate::prob::{agreement_stats, entropy, entropy_bounds, ExactInterval, JointPmf, Pmf};
use crate::rng::BitSource;
use crate::scalar::ExactScalar;
use crate::stopped_seq::{BitString, KeyLaw};
use crate::{Error, Rational, Result};

/// The common scheme on `X` given `X = Y` and `h(X) = b`.
#[derive(Debug)]
struct Bucket<Q> {
    /// `P(X = Y, h(X) = b)`.
    mass: Q,
    conditional: Pmf<Q>,
    /// Highest-mass symbol of the conditional; Bob's fallback.
    fallback: usize,
    scheme: CommonScheme<Q>,
}

/// The hash-check scheme for one joint pmf and one hash table.
///
/// Alice sends `w1 = h(x)`. If `h(y) = w1`, Bob plays Alice's role of the
/// common scheme on `p_{X | X=Y, h(X)=w1}` and announces the round `w2`;
/// Alice answers with her codeword for that round. Otherwise Bob sends `e`
/// and both keys are empty.
///
/// Off the agreement event Bob's `y` may fall outside the conditional's
/// support; he then uses the conditional's highest-mass symbol. Alice, if her
/// `x` is not served in round `w2`, outputs the empty key. Both cases are
/// already counted as errors.
#[derive(Debug)]
pub struct AlmostCommonProtocol<Q> {
    joint: JointPmf<Q>,
    hash: HashFunction,
    p: Q,
    buckets: BTreeMap<u32, Bucket<Q>>,
}

/// One run of [`AlmostCommonProtocol`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlmostCommonRun {
    pub w1: u32,
    /// `None` is the error symbol `e`.
    pub w2: Option<u32>,
    pub key_a: BitString,
    pub key_b: BitString,
    /// `key_a` when `X = Y`, else empty.
    pub ideal: BitString,
    pub messages: Vec<Message>,
}

impl AlmostCommonRun {
    pub fn agreed(&self) -> bool {
        self.key_a == self.ideal && self.key_b == self.ideal
    }
}

impl<Q: ExactScalar> AlmostCommonProtocol<Q> {
    /// Allows `P(X = Y) = 0`, in which case every run ends with `e`.
    pub fn new(joint: JointPmf<Q>, hash: HashFunction) -> Result<Self> {
        if hash.len() != joint.union_len() {
            return Err(Error::InvalidHash(format!(
                "table covers {} symbols, union alphabet has {}",
                hash.len(),
                joint.union_len()
            )));
        }
        let stats = agreement_stats(&joint);
        let mut diag: BTreeMap<u32, Vec<Q>> = BTreeMap::new();
        for y in 0..joint.y_len() {
            if let Some(x) = joint.y_as_x(y) {
                let m = joint.get(x, y);
                if m.is_positive() {
                    let row = diag
                        .entry(hash.value(joint.x_union(x)))
                        .or_insert_with(|| vec![Q::zero(); joint.x_len()]);
                    row[x] = m.clone();
                }
            }
        }
        let mut buckets = BTreeMap::new();
        for (b, row) in diag {
            let mass = row.iter().fold(Q::zero(), |a, m| a + m.clone());
            let normalized = row.into_iter().map(|m| m / mass.clone()).collect();
            let conditional = Pmf::with_labels(joint.x_labels().to_vec(), normalized)?;
            let fallback = conditional.sorted_support()[0];
            let scheme = CommonScheme::new(conditional.clone());
            buckets.insert(b, Bucket { mass, conditional, fallback, scheme });
        }
        Ok(Self { joint, hash, p: stats.p, buckets })
    }

    pub fn joint(&self) -> &JointPmf<Q> {
        &self.joint
    }

    pub fn hash(&self) -> &HashFunction {
        &self.hash
    }

    /// `P(X = Y)`.
    pub fn p(&self) -> &Q {
        &self.p
    }

    /// `p_{X | X=Y, h(X)=b}`, if that event has positive probability.
    pub fn bucket_conditional(&self, b: u32) -> Option<&Pmf<Q>> {
        self.buckets.get(&b).map(|k| &k.conditional)
    }

    /// `(b, P(X = Y, h(X) = b))` for every nonempty bucket.
    pub fn bucket_masses(&self) -> impl Iterator<Item = (u32, &Q)> {
        self.buckets.iter().map(|(b, k)| (*b, &k.mass))
    }

    /// Bob's symbol in the bucket's conditional: `y` itself when it has
    /// positive conditional mass, else the fallback.
    fn bob_symbol(&self, bucket: &Bucket<Q>, y: usize) -> usize {
        match self.joint.y_as_x(y) {
            Some(x) if bucket.conditional.mass(x).is_positive() => x,
            _ => bucket.fallback,
        }
    }

    pub fn run<B: BitSource + ?Sized>(&self, x: usize, y: usize, src: &mut B) -> Result<AlmostCommonRun> {
        if x >= self.joint.x_len() {
            return Err(Error::UnknownSymbol(x.to_string()));
        }
        if y >= self.joint.y_len() {
            return Err(Error::UnknownSymbol(y.to_string()));
        }
        let w1 = self.hash.value(self.joint.x_union(x));
        let mut messages = vec![Message::alice(Payload::Hash(w1))];
        let same = self.joint.same_symbol(x, y);
        let bucket = self
            .buckets
            .get(&w1)
            .filter(|_| self.hash.value(self.joint.y_union(y)) == w1);
        let Some(bucket) = bucket else {
            messages.push(Message::bob(Payload::Error));
            return Ok(AlmostCommonRun {
                w1,
                w2: None,
                key_a: BitString::empty(),
                key_b: BitString::empty(),
                ideal: BitString::empty(),
                messages,
            });
        };
        let bob = bucket.scheme.alice(self.bob_symbol(bucket, y), src)?;
        messages.push(Message::bob(Payload::Round(bob.w)));
        let key_a = if bucket.conditional.mass(x).is_positive() && bucket.scheme.reachable(x, bob.w)? {
            bucket.scheme.bob(x, bob.w)?
        } else {
            BitString::empty()
        };
        let ideal = if same { key_a.clone() } else { BitString::empty() };
        Ok(AlmostCommonRun { w1, w2: Some(bob.w), key_a, key_b: bob.key, ideal, messages })
    }
}

/// One run with a freshly built protocol; requires `P(X = Y) > 0`.
pub fn almost_common_keygen<Q: ExactScalar, B: BitSource + ?Sized>(
    j: &JointPmf<Q>,
    x: usize,
    y: usize,
    h: &HashFunction,
    src: &mut B,
) -> Result<AlmostCommonRun> {
    let proto = AlmostCommonProtocol::new(j.clone(), h.clone())?;
    if proto.p.is_zero() {
        return Err(Error::NoAgreement);
    }
    proto.run(x, y, src)
}

/// Exact behaviour of one protocol instance, rounds enumerated to `w_max`.
#[derive(Debug, Clone)]
pub struct AlmostCommonExact<Q> {
    pub p: Q,
    /// `P(h(X) = h(Y), X != Y)`; failures can only happen inside this event.
    pub collision: Q,
    /// Failure probability over enumerated rounds.
    pub failure_lower: Q,
    /// `failure_lower` plus the unenumerated collision mass.
    pub failure_upper: Q,
    /// `E[|K| 1{K_A = K_B = K}]` over enumerated rounds.
    pub agreed_length: Q,
    /// Mass not enumerated (rounds past `w_max`).
    pub tail: Q,
    /// Law of the ideal key given each enumerated transcript `(w1, w2)`.
    pub transcript_laws: BTreeMap<(u32, Option<u32>), KeyLaw<Q>>,
    /// Probability of each enumerated transcript.
    pub transcript_mass: BTreeMap<(u32, Option<u32>), Q>,
}

/// Enumerates every `(x, y)` cell and every round `w2 <= w_max`.
pub fn almost_common_exact<Q: ExactScalar>(
    proto: &AlmostCommonProtocol<Q>,
    w_max: u32,
) -> Result<AlmostCommonExact<Q>> {
    let j = &proto.joint;
    let mut failure = Q::zero();
    let mut unenumerated_failure = Q::zero();
    let mut agreed_length = Q::zero();
    let mut tail = Q::zero();
    let mut atoms: BTreeMap<(u32, Option<u32>), BTreeMap<BitString, Q>> = BTreeMap::new();
    let decompositions: BTreeMap<u32, _> = proto
        .buckets
        .iter()
        .map(|(b, k)| k.scheme.decomposition(w_max).map(|d| (*b, d)))
        .collect::<Result<_>>()?;
    let mut add = |t: (u32, Option<u32>), k: &BitString, m: Q| {
        let slot = atoms.entry(t).or_default().entry(k.clone()).or_insert_with(Q::zero);
        *slot = slot.clone() + m;
    };
    for (x, y, m) in j.cells() {
        let w1 = proto.hash.value(j.x_union(x));
        let same = j.same_symbol(x, y);
        let bucket = proto.buckets.get(&w1).filter(|_| proto.hash.value(j.y_union(y)) == w1);
        let Some(bucket) = bucket else {
            add((w1, None), &BitString::empty(), m.clone());
            continue;
        };
        let d = &decompositions[&w1];
        let sb = proto.bob_symbol(bucket, y);
        let pb = bucket.conditional.mass(sb).clone();
        let mut enumerated = Q::zero();
        for r in d.rounds().iter().take(w_max as usize) {
            let Some(e) = r.entry(sb) else { continue };
            let pw = m.clone() * e.removed.clone() / pb.clone();
            enumerated = enumerated + pw.clone();
            let key_b = &e.codeword;
            let key_a = r.entry(x).map(|ea| ea.codeword.clone()).unwrap_or_default();
            let ideal = if same { key_a.clone() } else { BitString::empty() };
            if key_a == ideal && *key_b == ideal {
                agreed_length = agreed_length + pw.clone() * Q::from_ratio(ideal.len() as i64, 1);
            } else {
                failure = failure + pw.clone();
            }
            add((w1, Some(r.w)), &ideal, pw);
        }
        let rest = m.clone() - enumerated;
        if !same {
            unenumerated_failure = unenumerated_failure + rest.clone();
        }
        tail = tail + rest;
    }
    let mut transcript_laws = BTreeMap::new();
    let mut transcript_mass = BTreeMap::new();
    for (t, law) in atoms {
        let total = law.values().fold(Q::zero(), |a, m| a + m.clone());
        transcript_laws.insert(t, KeyLaw::normalized(law)?);
        transcript_mass.insert(t, total);
    }
    Ok(AlmostCommonExact {
        p: proto.p.clone(),
        collision: collision_error(j, &proto.hash)?,
        failure_upper: failure.clone() + unenumerated_failure,
        failure_lower: failure,
        agreed_length,
        tail,
        transcript_laws,
        transcript_mass,
    })
}

/// Guaranteed pair for the hash-check scheme with `m` buckets.
#[derive(Debug, Clone, PartialEq)]
pub struct AlmostCommonBounds<F> {
    pub p: Rational,
    /// `(1 - p) / m`.
    pub epsilon: Rational,
    /// `H(X | X = Y)`.
    pub conditional_entropy: F,
    /// `p (H(X | X = Y) - log2 m - 2)`, possibly negative.
    pub ell_raw: F,
    /// `ell_raw` floored at 0.
    pub ell: F,
    /// Rigorous interval for `ell_raw`.
    pub ell_interval: ExactInterval,
}

impl<F: Float> AlmostCommonBounds<F> {
    /// The length guarantee says nothing when its formula is not positive.
    pub fn vacuous(&self) -> bool {
        self.ell_raw <= F::zero()
    }
}

/// `((1 - p)/m, p (H(X | X = Y) - log2 m - 2))`.
pub fn almost_common_bounds<F: Float, Q: ExactScalar>(j: &JointPmf<Q>, m: u32) -> Result<AlmostCommonBounds<F>> {
    if m == 0 {
        return Err(Error::InvalidParameter("m must be at least 1".into()));
    }
    let stats = agreement_stats(j);
    let p = stats.p.to_rational();
    let epsilon = (Rational::from_integer(1.into()) - &p) / Rational::from_integer(m.into());
    let (h, h_iv) = match &stats.conditional {
        Some(c) => (entropy::<F, Q>(c), entropy_bounds(c)),
        None => (F::zero(), ExactInterval { lower: Rational::from_integer(0.into()), upper: Rational::from_integer(0.into()) }),
    };
    let pf = F::from(p.to_f64().unwrap_or(f64::NAN)).expect("float");
    let log_m = F::from(m).expect("float").log2();
    let two = F::from(2.0).expect("float");
    let ell_raw = pf * (h - log_m - two);
    let lm = crate::prob::log2_bounds(&Rational::from_integer(m.into()), crate::prob::INTERVAL_BITS);
    let two_q = Rational::from_integer(2.into());
    let ell_interval = ExactInterval {
        lower: &p * (&h_iv.lower - &lm.upper - &two_q),
        upper: &p * (&h_iv.upper - &lm.lower - &two_q),
    };
    Ok(AlmostCommonBounds {
        p,
        epsilon,
        conditional_entropy: h,
        ell_raw,
        ell: ell_raw.max(F::zero()),
        ell_interval,
    })
}

/// `ell = a kappa + b log2 m + c` with exact coefficients.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LengthForm {
    pub kappa: Rational,
    pub log_m: Rational,
    pub constant: Rational,
    pub m: u64,
}

/// Length form of the hash-check guarantee with `m = ceil(1/epsilon)`.
///
/// With `p = 1` this is `kappa - log2 ceil(1/epsilon) - 2`, the common
/// randomness trade-off between error and length.
pub fn epsilon_substitution(p: &Rational, epsilon: &Rational) -> Result<LengthForm> {
    if *epsilon <= Rational::from_integer(0.into()) || *epsilon > Rational::from_integer(1.into()) {
        return Err(Error::OutsideUnitInterval(epsilon.to_string()));
    }
    let inv = epsilon.recip();
    let m = Integer::div_ceil(inv.numer(), inv.denom());
    let m = m.to_u64().ok_or_else(|| Error::InvalidParameter("1/epsilon too large".into()))?;
    Ok(LengthForm {
        kappa: p.clone(),
        log_m: -p.clone(),
        constant: -p.clone() * Rational::from_integer(2.into()),
        m,
    })
}
