//! Seeded Monte Carlo runs with exact oracles alongside.

use num_traits::ToPrimitive;
use rayon::prelude::*;
use stopkey::common::{exact_common_law, CommonScheme};
use stopkey::format::{parse_distribution, parse_hash, Distribution};
use stopkey::prob::{agreement_stats, entropy, mutual_information};
use stopkey::reconciled::{
    almost_common_bounds, almost_common_exact, derandomize_hash, kappa_actual, reference_length_bound,
    transcript_text, AlmostCommonProtocol, CorrelatedProtocol, HashFamily, HashFunction, Message, Payload,
};
use stopkey::reconciled::hash::EXHAUSTIVE_LIMIT;
use stopkey::rng::{PmfSampler, RandomSource};
use stopkey::stats::{wilson, Welford};
use stopkey::stopped_seq::{converse_bound, verify_rsbs, VerifyOptions};
use stopkey::{BitString, JointPmf, Pmf, Rational};

use crate::config::{ExperimentConfig, HashSpec, Protocol};
use crate::dashboard::bounds_dashboard;
use crate::eavesdropper::{LogRecord, LoggedMessage, TranscriptLog};
use crate::error::{HarnessError, Result};
use crate::fairness::{self, FairnessCounts};
use crate::report::{
    BoundCheck, Direction, Estimate, ExactFigures, Quantity, Report, TranscriptVerdict, CONFIDENCE, METHODOLOGY,
};

/// Trials per work unit. Fixed, so merging order never depends on threads.
const BLOCK: u64 = 2048;

/// One protocol run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trial {
    pub messages: Vec<Message>,
    pub key_a: BitString,
    pub key_b: BitString,
    pub ideal: BitString,
}

impl Trial {
    pub fn agreed(&self) -> bool {
        self.key_a == self.ideal && self.key_b == self.ideal
    }

    /// `|K| 1{K_A = K_B = K}`.
    pub fn agreed_length(&self) -> usize {
        if self.agreed() {
            self.ideal.len()
        } else {
            0
        }
    }
}

/// A protocol instance ready to run trials.
#[derive(Debug)]
pub enum Runner {
    Common { scheme: CommonScheme<Rational>, sampler: PmfSampler },
    AlmostCommon { protocol: AlmostCommonProtocol<Rational>, cells: PmfSampler },
    Correlated { protocol: CorrelatedProtocol<Rational>, cells: PmfSampler },
}

fn cell_sampler(j: &JointPmf) -> PmfSampler {
    PmfSampler::new(&j.cell_pmf())
}

/// The table a config asks for. Derandomized tables come from the exhaustive
/// family when it has at most `2^20` members, otherwise from 256 seeded ones.
pub fn choose_hash(cfg: &ExperimentConfig, j: &JointPmf) -> Result<HashFunction> {
    let n = j.union_len();
    Ok(match &cfg.hash {
        HashSpec::Fixed(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
            let h = parse_hash(&text, j)?;
            if h.m() != cfg.m {
                return Err(HarnessError::Input(format!("hash file has m = {}, config has m = {}", h.m(), cfg.m)));
            }
            h
        }
        HashSpec::Random(seed) => HashFunction::random(n, cfg.m, *seed)?,
        HashSpec::Derandomized => {
            if num_traits::Zero::is_zero(&agreement_stats(j).p) {
                HashFunction::constant(n, cfg.m)
            } else {
                let family = match HashFunction::table_count(n, cfg.m) {
                    Some(c) if c <= EXHAUSTIVE_LIMIT => HashFamily::Exhaustive,
                    _ => HashFamily::Candidates(
                        (0..256).map(|i| HashFunction::random(n, cfg.m, cfg.seed.wrapping_add(i))).collect::<Result<_, _>>()?,
                    ),
                };
                derandomize_hash(j, cfg.m, &family)?.0
            }
        }
    })
}

impl Runner {
    pub fn build(cfg: &ExperimentConfig, dist: &Distribution<Rational>) -> Result<Self> {
        if cfg.m == 0 {
            return Err(HarnessError::Input("m must be at least 1".into()));
        }
        Ok(match cfg.protocol {
            Protocol::Common => {
                let p = common_source(dist);
                Runner::Common { sampler: PmfSampler::new(&p), scheme: CommonScheme::new(p) }
            }
            Protocol::AlmostCommon => {
                let j = dist.clone().into_joint();
                let hash = choose_hash(cfg, &j)?;
                Runner::AlmostCommon { cells: cell_sampler(&j), protocol: AlmostCommonProtocol::new(j, hash)? }
            }
            Protocol::Correlated => {
                let j = dist.clone().into_joint();
                let protocol = CorrelatedProtocol::new(j, cfg.reconciler.build()?, cfg.m)?;
                Runner::Correlated { cells: cell_sampler(protocol.joint()), protocol }
            }
        })
    }

    pub fn trial(&self, src: &mut RandomSource) -> Result<Trial> {
        Ok(match self {
            Runner::Common { scheme, sampler } => {
                let x = sampler.sample(src)?;
                let run = scheme.alice(x, src)?;
                let key_b = scheme.bob(x, run.w)?;
                Trial {
                    messages: vec![Message::alice(Payload::Round(run.w))],
                    ideal: run.key.clone(),
                    key_a: run.key,
                    key_b,
                }
            }
            Runner::AlmostCommon { protocol, cells } => {
                let (x, y) = protocol.joint().cell(cells.sample(src)?);
                let run = protocol.run(x, y, src)?;
                Trial { messages: run.messages, key_a: run.key_a, key_b: run.key_b, ideal: run.ideal }
            }
            Runner::Correlated { protocol, cells } => {
                let (x, y) = protocol.joint().cell(cells.sample(src)?);
                let run = protocol.run(x, y, src)?;
                Trial {
                    messages: run.messages(),
                    key_a: run.stage2.key_a,
                    key_b: run.stage2.key_b,
                    ideal: run.stage2.ideal,
                }
            }
        })
    }
}

/// The pmf the common scheme runs on: the file's pmf, or the `X` marginal
/// of a joint.
pub fn common_source(dist: &Distribution<Rational>) -> Pmf {
    match dist {
        Distribution::Single(p) => p.clone(),
        Distribution::Joint(j) => j.marginal_x(),
    }
}

/// Aggregates over a range of trials.
#[derive(Debug, Clone, Default)]
pub struct TrialStats {
    pub trials: u64,
    pub failures: u64,
    pub length: Welford,
    pub fairness: FairnessCounts,
    pub log: Vec<LogRecord>,
}

impl TrialStats {
    fn absorb(&mut self, other: TrialStats) {
        self.trials += other.trials;
        self.failures += other.failures;
        self.length.merge(&other.length);
        self.fairness.merge(&other.fairness);
        self.log.extend(other.log);
    }

    pub fn estimate(&self) -> Estimate {
        let (lo, hi) = wilson(self.failures, self.trials, CONFIDENCE);
        let (llo, lhi) = self.length.interval(CONFIDENCE);
        Estimate {
            trials: self.trials,
            failures: self.failures,
            epsilon: self.failures as f64 / self.trials as f64,
            epsilon_interval: [lo, hi],
            ell: self.length.mean,
            ell_sd: self.length.variance().sqrt(),
            ell_interval: [llo, lhi],
        }
    }
}

/// Runs trials `0..trials`; trial `i` uses stream `i` of `seed`.
pub fn run_trials(runner: &Runner, seed: u64, trials: u64, keep_log: bool) -> Result<TrialStats> {
    let blocks = trials.div_ceil(BLOCK);
    let parts: Vec<Result<TrialStats>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut st = TrialStats::default();
            for i in b * BLOCK..((b + 1) * BLOCK).min(trials) {
                let mut src = RandomSource::substream(seed, i);
                let t = runner.trial(&mut src)?;
                st.trials += 1;
                if !t.agreed() {
                    st.failures += 1;
                }
                st.length.push(t.agreed_length() as f64);
                st.fairness.add(&transcript_text(&t.messages), &t.ideal);
                if keep_log {
                    st.log.push(LogRecord {
                        trial: i,
                        messages: t.messages.iter().map(LoggedMessage::from).collect(),
                        key_a: t.key_a.to_bits_string(),
                        key_b: t.key_b.to_bits_string(),
                        ideal: t.ideal.to_bits_string(),
                    });
                }
            }
            Ok(st)
        })
        .collect();
    let mut total = TrialStats::default();
    for p in parts {
        total.absorb(p?);
    }
    Ok(total)
}

/// Report plus the transcript log when one was requested.
#[derive(Debug, Clone)]
pub struct SimulationOutput {
    pub report: Report,
    pub log: Option<TranscriptLog>,
}

pub fn load_distribution(path: &std::path::Path) -> Result<Distribution<Rational>> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    Ok(parse_distribution(&text)?)
}

/// Reads the distribution file named by the config and simulates.
pub fn run_simulation(cfg: &ExperimentConfig) -> Result<Report> {
    let dist = load_distribution(&cfg.dist)?;
    Ok(simulate(cfg, &dist)?.report)
}

fn f(q: &Rational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

/// Largest alphabet for which exact enumeration is attempted.
const EXACT_LIMIT: usize = 4096;

pub fn simulate(cfg: &ExperimentConfig, dist: &Distribution<Rational>) -> Result<SimulationOutput> {
    let joint = match cfg.protocol {
        Protocol::Common => JointPmf::diagonal(&common_source(dist)),
        _ => dist.clone().into_joint(),
    };
    let dashboard = bounds_dashboard(&joint, cfg.m);
    let mut report = Report {
        config: cfg.clone(),
        methodology: METHODOLOGY.to_string(),
        bounds: dashboard,
        estimate: None,
        exact: None,
        checks: Vec::new(),
        rsbs: Vec::new(),
        fairness: None,
        notes: Vec::new(),
    };
    if matches!(dist, Distribution::Joint(_)) && cfg.protocol == Protocol::Common {
        report.notes.push("common scheme run on the X marginal of the joint".into());
    }
    if cfg.trials == 0 {
        return Ok(SimulationOutput { report, log: None });
    }
    let runner = Runner::build(cfg, dist)?;
    let stats = run_trials(&runner, cfg.seed, cfg.trials, cfg.transcript_log.is_some())?;
    let est = stats.estimate();
    let converse: f64 = converse_bound(&joint);
    match &runner {
        Runner::Common { scheme, .. } => {
            let p = scheme.source();
            let h: f64 = entropy(&p);
            let mut exact_ell = None;
            if p.len() <= EXACT_LIMIT {
                let law = exact_common_law(&p, cfg.w_max)?;
                let tail = law.tail.clone();
                let full = law.conditional_entropy_exact.clone();
                exact_ell = full.as_ref().map(f);
                report.exact = Some(ExactFigures {
                    w_max: cfg.w_max,
                    epsilon_lower: "0".into(),
                    epsilon_upper: "0".into(),
                    ell_enumerated: law.expected_length.to_string(),
                    ell: full.as_ref().map(ToString::to_string),
                    tail: tail.to_string(),
                    epsilon_upper_f64: 0.0,
                    ell_f64: exact_ell.unwrap_or_else(|| f(&law.expected_length)),
                });
                for (w, l) in &law.per_round {
                    report.rsbs.push(TranscriptVerdict {
                        transcript: transcript_text(&[Message::alice(Payload::Round(*w))]),
                        probability: <Rational as stopkey::ExactScalar>::pow2_neg(*w).to_string(),
                        verdict: verify_rsbs::<Rational>(l, VerifyOptions::default())?,
                    });
                }
            }
            report.checks.push(
                BoundCheck::decide("zero error", Quantity::Epsilon, Direction::AtMost, 0.0, Some((&est, Quantity::Epsilon)), Some(0.0), false)
                    .with_exact_bound("0".into()),
            );
            report.checks.push(
                BoundCheck::decide("common source H(X) - 2", Quantity::Ell, Direction::AtLeast, h - 2.0, Some((&est, Quantity::Ell)), exact_ell, false),
            );
            report.checks.push(BoundCheck::decide(
                "converse I + log2 3 + 1",
                Quantity::Ell,
                Direction::AtMost,
                converse,
                Some((&est, Quantity::Ell)),
                exact_ell,
                false,
            ));
        }
        Runner::AlmostCommon { protocol, .. } => {
            let bounds = almost_common_bounds::<f64, Rational>(&joint, cfg.m)?;
            let mut exact_eps = None;
            if joint.union_len() <= EXACT_LIMIT {
                let ex = almost_common_exact(protocol, cfg.w_max)?;
                exact_eps = Some(f(&ex.failure_upper));
                report.exact = Some(ExactFigures {
                    w_max: cfg.w_max,
                    epsilon_lower: ex.failure_lower.to_string(),
                    epsilon_upper: ex.failure_upper.to_string(),
                    ell_enumerated: ex.agreed_length.to_string(),
                    ell: None,
                    tail: ex.tail.to_string(),
                    epsilon_upper_f64: f(&ex.failure_upper),
                    ell_f64: f(&ex.agreed_length),
                });
                for ((w1, w2), law) in &ex.transcript_laws {
                    let mut msgs = vec![Message::alice(Payload::Hash(*w1))];
                    msgs.push(Message::bob(w2.map_or(Payload::Error, Payload::Round)));
                    report.rsbs.push(TranscriptVerdict {
                        transcript: transcript_text(&msgs),
                        probability: ex.transcript_mass[&(*w1, *w2)].to_string(),
                        verdict: verify_rsbs(law, VerifyOptions::default())?,
                    });
                }
            }
            let random_table = matches!(cfg.hash, HashSpec::Random(_));
            let mut eps = BoundCheck::decide(
                "hash check (1 - p)/m",
                Quantity::Epsilon,
                Direction::AtMost,
                f(&bounds.epsilon),
                Some((&est, Quantity::Epsilon)),
                exact_eps.filter(|_| !random_table),
                random_table,
            )
            .with_exact_bound(bounds.epsilon.to_string());
            if random_table {
                eps = eps.with_note("a single random table meets (1 - p)/m only on average over tables");
            }
            report.checks.push(eps);
            report.checks.push(BoundCheck::decide(
                "hash check p(H(X|X=Y) - log m - 2)",
                Quantity::Ell,
                Direction::AtLeast,
                bounds.ell_raw,
                Some((&est, Quantity::Ell)),
                None,
                random_table,
            ));
            report.checks.push(BoundCheck::decide(
                "converse I + log2 3 + 1",
                Quantity::Ell,
                Direction::AtMost,
                converse,
                Some((&est, Quantity::Ell)),
                None,
                false,
            ));
        }
        Runner::Correlated { protocol, .. } => {
            let (kappa, kappa_iv) = kappa_actual::<f64, Rational>(protocol);
            let log_m = f64::from(cfg.m).log2();
            let mut exact_eps = None;
            if joint.x_len() * joint.y_len() <= EXACT_LIMIT {
                let ex = protocol.exact(cfg.w_max)?;
                report.exact = Some(ExactFigures {
                    w_max: cfg.w_max,
                    epsilon_lower: ex.failure_lower.to_string(),
                    epsilon_upper: ex.failure_upper.to_string(),
                    ell_enumerated: ex.agreed_length.to_string(),
                    ell: None,
                    tail: ex.tail.to_string(),
                    epsilon_upper_f64: f(&ex.failure_upper),
                    ell_f64: f(&ex.agreed_length),
                });
                for (t, pt, stage) in protocol.stages() {
                    let ex2 = almost_common_exact(stage, cfg.w_max)?;
                    for ((w1, w2), law) in &ex2.transcript_laws {
                        let mut msgs = t.to_vec();
                        msgs.push(Message::alice(Payload::Hash(*w1)));
                        msgs.push(Message::bob(w2.map_or(Payload::Error, Payload::Round)));
                        report.rsbs.push(TranscriptVerdict {
                            transcript: transcript_text(&msgs),
                            probability: (pt.clone() * ex2.transcript_mass[&(*w1, *w2)].clone()).to_string(),
                            verdict: verify_rsbs(law, VerifyOptions::default())?,
                        });
                    }
                }
                exact_eps = Some(f(&ex.failure_upper));
            }
            report.checks.push(
                BoundCheck::decide(
                    "pipeline 1/m",
                    Quantity::Epsilon,
                    Direction::AtMost,
                    1.0 / f64::from(cfg.m),
                    Some((&est, Quantity::Epsilon)),
                    exact_eps,
                    false,
                )
                .with_exact_bound(format!("1/{}", cfg.m)),
            );
            report.checks.push(
                BoundCheck::decide(
                    "composition kappa - log m - 2",
                    Quantity::Ell,
                    Direction::AtLeast,
                    kappa - log_m - 2.0,
                    Some((&est, Quantity::Ell)),
                    None,
                    false,
                )
                .with_note(&format!(
                    "kappa = P(M_A=M_B) H(M_A | transcript, M_A=M_B) = {kappa:.6} in [{:.6}, {:.6}], measured on reconciler {}",
                    kappa_iv.lower_f64(),
                    kappa_iv.upper_f64(),
                    protocol.reconciler_name()
                )),
            );
            let i: f64 = mutual_information(&joint);
            report.checks.push(
                BoundCheck::decide(
                    "reference I - 2log(I+1) - log m - 9.04",
                    Quantity::Ell,
                    Direction::AtLeast,
                    reference_length_bound(i, cfg.m),
                    Some((&est, Quantity::Ell)),
                    None,
                    true,
                )
                .with_note("assumes a reconciler that is not part of this tool; never asserted"),
            );
            report.checks.push(BoundCheck::decide(
                "converse I + log2 3 + 1",
                Quantity::Ell,
                Direction::AtMost,
                converse,
                Some((&est, Quantity::Ell)),
                None,
                false,
            ));
        }
    }
    report.estimate = Some(est);
    report.fairness = Some(fairness::evaluate(&stats.fairness));
    let log = cfg.transcript_log.as_ref().map(|_| TranscriptLog { protocol: cfg.protocol.to_string(), records: stats.log });
    Ok(SimulationOutput { report, log })
}
