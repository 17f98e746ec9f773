use serde::{Deserialize, Serialize};
use stopkey::stopped_seq::RsbsVerdict;

use crate::config::ExperimentConfig;
use crate::dashboard::{render_dashboard, Dashboard};
use crate::fairness::FairnessReport;

pub const CONFIDENCE: f64 = 0.99;

pub const METHODOLOGY: &str = "\
Error: epsilon-hat is the fraction of trials in which K_A = K_B = K fails; \
its interval is the two-sided 99% Wilson score interval. \
Length: ell-hat is the sample mean of |K| 1{K_A = K_B = K}; its interval is \
the two-sided 99% normal approximation mean +- z s/sqrt(n) with the unbiased \
sample variance s^2. \
A bound counts as violated only when the whole interval lies on the wrong \
side of it (or when an exact value does). \
Trial i draws its bits from ChaCha8 stream i of the seed, so results do not \
depend on the number of worker threads.";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub trials: u64,
    pub failures: u64,
    pub epsilon: f64,
    pub epsilon_interval: [f64; 2],
    pub ell: f64,
    pub ell_sd: f64,
    pub ell_interval: [f64; 2],
}

/// Exact figures from enumeration up to round `w_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactFigures {
    pub w_max: u32,
    /// Failure probability is within `[epsilon_lower, epsilon_upper]`.
    pub epsilon_lower: String,
    pub epsilon_upper: String,
    /// `E[|K| 1{agree}]` over enumerated rounds; a lower bound on the full value.
    pub ell_enumerated: String,
    /// Full `E[|K| 1{agree}]` when it has a closed form.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ell: Option<String>,
    /// Probability of runs past `w_max`.
    pub tail: String,
    pub epsilon_upper_f64: f64,
    pub ell_f64: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    Epsilon,
    Ell,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    AtMost,
    AtLeast,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    /// A lower bound that is not positive.
    Vacuous,
    /// Shown for comparison, never asserted.
    Reference,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub label: String,
    pub quantity: Quantity,
    pub direction: Direction,
    pub bound: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound_exact: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interval: Option<[f64; 2]>,
    /// Exact value checked against the bound, when one is known rigorously.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact: Option<f64>,
    pub status: Status,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub note: String,
}

impl BoundCheck {
    /// Decides the status from the interval and exact value. `reference`
    /// checks are never asserted.
    pub fn decide(
        label: &str,
        quantity: Quantity,
        direction: Direction,
        bound: f64,
        estimate: Option<(&Estimate, Quantity)>,
        exact: Option<f64>,
        reference: bool,
    ) -> Self {
        let (est, interval) = match estimate {
            Some((e, Quantity::Epsilon)) => (Some(e.epsilon), Some(e.epsilon_interval)),
            Some((e, Quantity::Ell)) => (Some(e.ell), Some(e.ell_interval)),
            None => (None, None),
        };
        let wrong_side = |v: f64| match direction {
            Direction::AtMost => v > bound,
            Direction::AtLeast => v < bound,
        };
        let violated = interval.is_some_and(|[lo, hi]| match direction {
            Direction::AtMost => lo > bound,
            Direction::AtLeast => hi < bound,
        }) || exact.is_some_and(wrong_side);
        let status = if reference {
            Status::Reference
        } else if direction == Direction::AtLeast && (bound.is_nan() || bound <= 0.0) {
            Status::Vacuous
        } else if violated {
            Status::Fail
        } else {
            Status::Pass
        };
        Self {
            label: label.into(),
            quantity,
            direction,
            bound,
            bound_exact: None,
            estimate: est,
            interval,
            exact,
            status,
            note: String::new(),
        }
    }

    pub fn with_exact_bound(mut self, text: String) -> Self {
        self.bound_exact = Some(text);
        self
    }

    pub fn with_note(mut self, note: &str) -> Self {
        self.note = note.into();
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptVerdict {
    pub transcript: String,
    pub probability: String,
    pub verdict: RsbsVerdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub config: ExperimentConfig,
    pub methodology: String,
    pub bounds: Dashboard,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimate: Option<Estimate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact: Option<ExactFigures>,
    pub checks: Vec<BoundCheck>,
    pub rsbs: Vec<TranscriptVerdict>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fairness: Option<FairnessReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl Report {
    pub fn violations(&self) -> impl Iterator<Item = &BoundCheck> {
        self.checks.iter().filter(|c| c.status == Status::Fail)
    }

    pub fn rsbs_failures(&self) -> usize {
        self.rsbs.iter().filter(|v| !v.verdict.is_valid()).count()
    }

    /// 2 when a bound or the exact key-law check fails, else 0.
    pub fn exit_code(&self) -> i32 {
        if self.violations().next().is_some() || self.rsbs_failures() > 0 {
            2
        } else {
            0
        }
    }

    pub fn to_json(&self) -> String {
        stopkey::format::to_json(self)
    }
}

fn fmt_f(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.6}")
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn status_text(s: Status) -> &'static str {
    match s {
        Status::Pass => "PASS",
        Status::Fail => "FAIL",
        Status::Vacuous => "VACUOUS",
        Status::Reference => "REFERENCE",
    }
}

/// Human-readable rendering with fixed column layout.
pub fn render_text(r: &Report) -> String {
    let c = &r.config;
    let mut s = String::new();
    s.push_str(&format!(
        "protocol {}  m={}  w_max={}  trials={}  seed={}  hash={}  reconciler={}\n",
        c.protocol, c.m, c.w_max, c.trials, c.seed, c.hash, c.reconciler
    ));
    s.push_str(&format!("source {}\n\n", c.dist.display()));
    s.push_str("== bounds ==\n");
    s.push_str(&render_dashboard(&r.bounds));
    if let Some(e) = &r.estimate {
        s.push_str("\n== estimates (99%) ==\n");
        s.push_str(&format!("trials     {}\nfailures   {}\n", e.trials, e.failures));
        s.push_str(&format!(
            "epsilon    {}  [{}, {}]\n",
            fmt_f(e.epsilon),
            fmt_f(e.epsilon_interval[0]),
            fmt_f(e.epsilon_interval[1])
        ));
        s.push_str(&format!(
            "ell        {}  [{}, {}]  sd {}\n",
            fmt_f(e.ell),
            fmt_f(e.ell_interval[0]),
            fmt_f(e.ell_interval[1]),
            fmt_f(e.ell_sd)
        ));
    }
    if let Some(x) = &r.exact {
        s.push_str(&format!("\n== exact (rounds <= {}) ==\n", x.w_max));
        s.push_str(&format!("epsilon    in [{}, {}]\n", x.epsilon_lower, x.epsilon_upper));
        s.push_str(&format!("ell        >= {} (enumerated)\n", x.ell_enumerated));
        if let Some(l) = &x.ell {
            s.push_str(&format!("ell        = {l}\n"));
        }
        s.push_str(&format!("tail       {}\n", x.tail));
    }
    if !r.checks.is_empty() {
        s.push_str("\n== checks ==\n");
        s.push_str(&format!(
            "{:<30} {:<8} {:>12} {:>12} {:>27} {:>12}  {}\n",
            "check", "qty", "bound", "estimate", "interval", "exact", "status"
        ));
        for ch in &r.checks {
            let op = match ch.direction {
                Direction::AtMost => "<=",
                Direction::AtLeast => ">=",
            };
            let qty = match ch.quantity {
                Quantity::Epsilon => "epsilon",
                Quantity::Ell => "ell",
            };
            let iv = ch
                .interval
                .map_or("-".to_string(), |[a, b]| format!("[{}, {}]", fmt_f(a), fmt_f(b)));
            s.push_str(&format!(
                "{:<30} {:<8} {:>12} {:>12} {:>27} {:>12}  {}\n",
                ch.label,
                qty,
                format!("{op} {}", fmt_f(ch.bound)),
                ch.estimate.map_or("-".into(), fmt_f),
                iv,
                ch.exact.map_or("-".into(), fmt_f),
                status_text(ch.status)
            ));
            if !ch.note.is_empty() {
                s.push_str(&format!("    {}\n", ch.note));
            }
        }
    }
    if !r.rsbs.is_empty() {
        let bad = r.rsbs_failures();
        s.push_str(&format!(
            "\n== key law given transcript ==\n{} transcripts verified exactly, {} violations\n",
            r.rsbs.len(),
            bad
        ));
        for v in r.rsbs.iter().filter(|v| !v.verdict.is_valid()) {
            s.push_str(&format!("  {}: {:?}\n", v.transcript, v.verdict));
        }
    }
    if let Some(f) = &r.fairness {
        s.push_str(&format!(
            "\n== next-bit fairness ==\n{} prefix tests over {} transcripts (min count {}, alpha {} Bonferroni), {} flagged{}\n",
            f.tests,
            f.transcripts,
            f.min_count,
            f.alpha,
            f.flagged,
            if f.vacuous { ", vacuous" } else { "" }
        ));
        for t in f.flagged_tests() {
            s.push_str(&format!(
                "  {} prefix '{}': {} zeros, {} ones, p = {:.3e}\n",
                t.transcript, t.prefix, t.zeros, t.ones, t.p_value
            ));
        }
    }
    for n in &r.notes {
        s.push_str(&format!("\nnote: {n}\n"));
    }
    s.push_str(&format!("\n== methodology ==\n{}\n", r.methodology));
    s
}
