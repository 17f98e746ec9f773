use std::collections::HashMap;
use std::fmt::Debug;

use num_traits::Float;

use super::almost::{almost_common_exact, AlmostCommonProtocol, AlmostCommonRun};
use super::hash::{derandomize_hash, HashFamily, HashFunction, EXHAUSTIVE_LIMIT};
use super::{Message, Payload};
use crate::prob::{agreement_stats, entropy, entropy_bounds, ExactInterval, JointPmf};
use crate::rng::BitSource;
use crate::scalar::ExactScalar;
use crate::stopped_seq::BitString;
use crate::{Error, Rational, Result};

/// Stage-1 output for one realized `(x, y)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reconciliation {
    /// The transcript as Alice records it.
    pub alice_transcript: Vec<Message>,
    /// The transcript as Bob records it; must equal Alice's.
    pub bob_transcript: Vec<Message>,
    /// Index into the transcript law's `X` alphabet.
    pub m_a: usize,
    /// Index into the transcript law's `Y` alphabet.
    pub m_b: usize,
}

/// A transcript value, its probability and the exact law of `(M_A, M_B)`
/// given it.
#[derive(Debug, Clone)]
pub struct TranscriptLaw<Q> {
    pub transcript: Vec<Message>,
    pub probability: Q,
    pub law: JointPmf<Q>,
}

/// A reconciliation stage turning `(x, y)` into `(M_A, M_B)` over a public
/// transcript. Implementations are stateless across runs.
pub trait Reconciler<Q: ExactScalar>: Debug + Send + Sync {
    fn name(&self) -> String;

    fn reconcile(&self, j: &JointPmf<Q>, x: usize, y: usize, src: &mut dyn BitSource) -> Result<Reconciliation>;

    /// Every transcript value with positive probability.
    fn transcript_laws(&self, j: &JointPmf<Q>) -> Result<Vec<TranscriptLaw<Q>>>;
}

/// `M_A = x`, `M_B = y`, no messages.
#[derive(Debug, Clone, Copy, Default)]
pub struct Identity;

impl<Q: ExactScalar> Reconciler<Q> for Identity {
    fn name(&self) -> String {
        "identity".into()
    }

    fn reconcile(&self, _j: &JointPmf<Q>, x: usize, y: usize, _src: &mut dyn BitSource) -> Result<Reconciliation> {
        Ok(Reconciliation { alice_transcript: vec![], bob_transcript: vec![], m_a: x, m_b: y })
    }

    fn transcript_laws(&self, j: &JointPmf<Q>) -> Result<Vec<TranscriptLaw<Q>>> {
        Ok(vec![TranscriptLaw { transcript: vec![], probability: Q::one(), law: j.clone() }])
    }
}

/// Both sides output one fixed symbol; no messages.
#[derive(Debug, Clone, Copy, Default)]
pub struct Constant;

impl<Q: ExactScalar> Reconciler<Q> for Constant {
    fn name(&self) -> String {
        "constant".into()
    }

    fn reconcile(&self, _j: &JointPmf<Q>, _x: usize, _y: usize, _src: &mut dyn BitSource) -> Result<Reconciliation> {
        Ok(Reconciliation { alice_transcript: vec![], bob_transcript: vec![], m_a: 0, m_b: 0 })
    }

    fn transcript_laws(&self, _j: &JointPmf<Q>) -> Result<Vec<TranscriptLaw<Q>>> {
        let c = vec!["c".to_string()];
        let law = JointPmf::new(c.clone(), c, vec![vec![Q::one()]])?;
        Ok(vec![TranscriptLaw { transcript: vec![], probability: Q::one(), law }])
    }
}

/// Alice sends `t = g(x) = x mod 2^bits`; Bob outputs the `x'` with
/// `g(x') = t` maximizing `P(X = x', Y = y)` (lowest index on ties).
/// `M_A = x`; both live in the `X` alphabet.
#[derive(Debug, Clone, Copy)]
pub struct HashMapReconciler {
    pub bits: u32,
}

impl HashMapReconciler {
    pub fn new(bits: u32) -> Result<Self> {
        if bits > 32 {
            return Err(Error::InvalidParameter(format!("hashmap reconciler with {bits} bits")));
        }
        Ok(Self { bits })
    }

    fn token(&self, x: usize) -> u64 {
        (x as u64) & ((1u64 << self.bits) - 1)
    }

    fn guess<Q: ExactScalar>(&self, j: &JointPmf<Q>, y: usize, t: u64) -> usize {
        let mut best: Option<usize> = None;
        for x in (0..j.x_len()).filter(|&x| self.token(x) == t) {
            if best.is_none_or(|b| j.get(x, y).cmp_value(j.get(b, y)).is_gt()) {
                best = Some(x);
            }
        }
        best.expect("the token came from some symbol")
    }
}

impl<Q: ExactScalar> Reconciler<Q> for HashMapReconciler {
    fn name(&self) -> String {
        format!("hashmap:{}", self.bits)
    }

    fn reconcile(&self, j: &JointPmf<Q>, x: usize, y: usize, _src: &mut dyn BitSource) -> Result<Reconciliation> {
        let t = self.token(x);
        let msg = vec![Message::alice(Payload::Token(t))];
        Ok(Reconciliation { alice_transcript: msg.clone(), bob_transcript: msg, m_a: x, m_b: self.guess(j, y, t) })
    }

    fn transcript_laws(&self, j: &JointPmf<Q>) -> Result<Vec<TranscriptLaw<Q>>> {
        let n = j.x_len();
        let mut by_token: std::collections::BTreeMap<u64, Vec<Vec<Q>>> = Default::default();
        for (x, y, m) in j.cells() {
            let t = self.token(x);
            let rows = by_token.entry(t).or_insert_with(|| vec![vec![Q::zero(); n]; n]);
            let b = self.guess(j, y, t);
            rows[x][b] = rows[x][b].clone() + m.clone();
        }
        by_token
            .into_iter()
            .map(|(t, rows)| {
                let probability = rows.iter().flatten().fold(Q::zero(), |a, m| a + m.clone());
                let rows = rows
                    .into_iter()
                    .map(|r| r.into_iter().map(|m| m / probability.clone()).collect())
                    .collect();
                let law = JointPmf::new(j.x_labels().to_vec(), j.x_labels().to_vec(), rows)?;
                Ok(TranscriptLaw { transcript: vec![Message::alice(Payload::Token(t))], probability, law })
            })
            .collect()
    }
}

/// One run of the two-stage pipeline.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorrelatedRun {
    pub stage1: Vec<Message>,
    pub stage2: AlmostCommonRun,
    pub m_a: usize,
    pub m_b: usize,
}

impl CorrelatedRun {
    /// Full public transcript: stage 1 then stage 2.
    pub fn messages(&self) -> Vec<Message> {
        let mut out = self.stage1.clone();
        out.extend(self.stage2.messages.iter().copied());
        out
    }

    pub fn key_a(&self) -> &BitString {
        &self.stage2.key_a
    }

    pub fn key_b(&self) -> &BitString {
        &self.stage2.key_b
    }

    pub fn ideal(&self) -> &BitString {
        &self.stage2.ideal
    }

    pub fn agreed(&self) -> bool {
        self.stage2.agreed()
    }
}

struct Stage2<Q> {
    probability: Q,
    protocol: AlmostCommonProtocol<Q>,
}

/// Reconciler followed by the hash-check scheme on `p_{M_A, M_B | t}` for
/// each transcript value `t`, with a derandomized hash per transcript.
pub struct CorrelatedProtocol<Q> {
    joint: JointPmf<Q>,
    reconciler: Box<dyn Reconciler<Q>>,
    m: u32,
    stages: HashMap<Vec<Message>, Stage2<Q>>,
}

impl<Q: ExactScalar> Debug for CorrelatedProtocol<Q> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CorrelatedProtocol")
            .field("reconciler", &self.reconciler.name())
            .field("m", &self.m)
            .field("transcripts", &self.stages.len())
            .finish()
    }
}

/// Number of seeded tables tried when exhaustive search is too large.
const SEEDED_CANDIDATES: u64 = 256;

fn stage2_hash<Q: ExactScalar>(law: &JointPmf<Q>, m: u32, seed: u64) -> Result<HashFunction> {
    let n = law.union_len();
    if agreement_stats(law).p.is_zero() {
        return Ok(HashFunction::constant(n, m));
    }
    let family = match HashFunction::table_count(n, m) {
        Some(c) if c <= EXHAUSTIVE_LIMIT => HashFamily::Exhaustive,
        _ => HashFamily::Candidates(
            (0..SEEDED_CANDIDATES)
                .map(|i| HashFunction::random(n, m, seed.wrapping_add(i)))
                .collect::<Result<_>>()?,
        ),
    };
    Ok(derandomize_hash(law, m, &family)?.0)
}

impl<Q: ExactScalar> CorrelatedProtocol<Q> {
    pub fn new(joint: JointPmf<Q>, reconciler: Box<dyn Reconciler<Q>>, m: u32) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParameter("m must be at least 1".into()));
        }
        let mut stages = HashMap::new();
        for (i, t) in reconciler.transcript_laws(&joint)?.into_iter().enumerate() {
            let hash = stage2_hash(&t.law, m, i as u64)?;
            let protocol = AlmostCommonProtocol::new(t.law, hash)?;
            if stages.insert(t.transcript.clone(), Stage2 { probability: t.probability, protocol }).is_some() {
                return Err(Error::ReconcilerContract("transcript listed twice".into()));
            }
        }
        Ok(Self { joint, reconciler, m, stages })
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn reconciler_name(&self) -> String {
        self.reconciler.name()
    }

    pub fn joint(&self) -> &JointPmf<Q> {
        &self.joint
    }

    /// `(t, P(t), stage-2 protocol)` for every transcript value, sorted by `t`.
    pub fn stages(&self) -> Vec<(&[Message], &Q, &AlmostCommonProtocol<Q>)> {
        let mut v: Vec<_> = self
            .stages
            .iter()
            .map(|(t, s)| (t.as_slice(), &s.probability, &s.protocol))
            .collect();
        v.sort_by(|a, b| a.0.cmp(b.0));
        v
    }

    pub fn run<B: BitSource>(&self, x: usize, y: usize, src: &mut B) -> Result<CorrelatedRun> {
        let r = self.reconciler.reconcile(&self.joint, x, y, src)?;
        if r.alice_transcript != r.bob_transcript {
            return Err(Error::ReconcilerContract(format!(
                "parties disagree on the transcript: {} vs {}",
                super::transcript_text(&r.alice_transcript),
                super::transcript_text(&r.bob_transcript)
            )));
        }
        let stage = self.stages.get(&r.alice_transcript).ok_or_else(|| {
            Error::ReconcilerContract(format!(
                "transcript {} has no conditional law",
                super::transcript_text(&r.alice_transcript)
            ))
        })?;
        let stage2 = stage.protocol.run(r.m_a, r.m_b, src)?;
        Ok(CorrelatedRun { stage1: r.alice_transcript, stage2, m_a: r.m_a, m_b: r.m_b })
    }

    /// Exact error and agreed length of the whole pipeline, averaging the
    /// stage-2 enumeration over transcripts.
    pub fn exact(&self, w_max: u32) -> Result<CorrelatedExact<Q>> {
        let mut out = CorrelatedExact {
            failure_lower: Q::zero(),
            failure_upper: Q::zero(),
            collision: Q::zero(),
            agreed_length: Q::zero(),
            reconciler_agreement: Q::zero(),
            tail: Q::zero(),
        };
        for (_, pt, proto) in self.stages() {
            let e = almost_common_exact(proto, w_max)?;
            out.failure_lower = out.failure_lower + pt.clone() * e.failure_lower;
            out.failure_upper = out.failure_upper + pt.clone() * e.failure_upper;
            out.collision = out.collision + pt.clone() * e.collision;
            out.agreed_length = out.agreed_length + pt.clone() * e.agreed_length;
            out.reconciler_agreement = out.reconciler_agreement + pt.clone() * e.p;
            out.tail = out.tail + pt.clone() * e.tail;
        }
        Ok(out)
    }
}

/// Exact pipeline figures, averaged over stage-1 transcripts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorrelatedExact<Q> {
    pub failure_lower: Q,
    pub failure_upper: Q,
    pub collision: Q,
    pub agreed_length: Q,
    /// `P(M_A = M_B)`.
    pub reconciler_agreement: Q,
    /// Mass of runs past `w_max`.
    pub tail: Q,
}

/// One pipeline run with a freshly built protocol.
pub fn correlated_keygen<Q: ExactScalar, B: BitSource>(
    j: &JointPmf<Q>,
    reconciler: Box<dyn Reconciler<Q>>,
    m: u32,
    x: usize,
    y: usize,
    src: &mut B,
) -> Result<CorrelatedRun> {
    CorrelatedProtocol::new(j.clone(), reconciler, m)?.run(x, y, src)
}

/// `sum_t P(t) P(M_A = M_B | t) H(M_A | t, M_A = M_B)`, in float and as a
/// rigorous interval.
pub fn kappa_actual<F: Float, Q: ExactScalar>(proto: &CorrelatedProtocol<Q>) -> (F, ExactInterval) {
    let mut value = F::zero();
    let mut lower = Rational::from_integer(0.into());
    let mut upper = Rational::from_integer(0.into());
    for (_, pt, stage) in proto.stages() {
        let stats = agreement_stats(stage.joint());
        let Some(c) = stats.conditional else { continue };
        let weight = pt.clone() * stats.p;
        let wf = F::from(weight.to_f64().unwrap_or(f64::NAN)).expect("float");
        value = value + wf * entropy::<F, Q>(&c);
        let iv = entropy_bounds(&c);
        let wr = weight.to_rational();
        lower += &wr * iv.lower;
        upper += &wr * iv.upper;
    }
    (value, ExactInterval { lower, upper })
}

/// `I - 2 log2(I + 1) - log2 m - 9.04`, a reference line only: it presumes
/// a reconciler with `kappa >= I - 2 log2(I + 1) - 7.04`, which is not part
/// of this crate.
pub fn reference_length_bound<F: Float>(mutual_information: F, m: u32) -> F {
    let one = F::one();
    let two = F::from(2.0).expect("float");
    let c = F::from(9.04).expect("float");
    mutual_information - two * (mutual_information + one).log2() - F::from(m).expect("float").log2() - c
}
