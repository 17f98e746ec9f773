//! Bound lines for one joint pmf and hash range `m`.

use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};
use stopkey::prob::{agreement_stats, entropy, mutual_information};
use stopkey::reconciled::reference_length_bound;
use stopkey::stopped_seq::converse_bound;
use stopkey::JointPmf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LineKind {
    /// No protocol exceeds it.
    Converse,
    /// Guaranteed by a scheme in this crate.
    Achievability,
    /// Printed for orientation only; not achieved by anything here.
    Reference,
    /// Prior-work scheme, for comparison.
    Comparison,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DashboardLine {
    pub label: String,
    pub formula: String,
    pub kind: LineKind,
    pub value: f64,
    /// A lower bound that is not positive says nothing.
    pub vacuous: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dashboard {
    pub m: u32,
    pub mutual_information: f64,
    pub entropy_x: f64,
    /// `P(X = Y)`, exact.
    pub p: String,
    /// `H(X | X = Y)`, absent when `p = 0`.
    pub conditional_entropy: Option<f64>,
    pub lines: Vec<DashboardLine>,
}

impl Dashboard {
    pub fn line(&self, label: &str) -> Option<&DashboardLine> {
        self.lines.iter().find(|l| l.label == label)
    }
}

pub const CONVERSE: &str = "converse";
pub const COMMON_SOURCE: &str = "common source";
pub const HASH_CHECK: &str = "hash check";
pub const RECONCILED_REFERENCE: &str = "reconciled reference";
pub const PRIOR_WORK: &str = "prior work";

fn line(label: &str, formula: &str, kind: LineKind, value: f64) -> DashboardLine {
    let vacuous = kind != LineKind::Converse && (value.is_nan() || value <= 0.0);
    DashboardLine { label: label.into(), formula: formula.into(), kind, value, vacuous }
}

pub fn bounds_dashboard(j: &JointPmf, m: u32) -> Dashboard {
    let i: f64 = mutual_information(j);
    let hx: f64 = entropy(&j.marginal_x());
    let stats = agreement_stats(j);
    let p = stats.p.to_f64().unwrap_or(f64::NAN);
    let hc: Option<f64> = stats.conditional.as_ref().map(entropy);
    let log_m = f64::from(m).log2();
    let mut lines = vec![line(CONVERSE, "I(X;Y) + log2(3) + 1", LineKind::Converse, converse_bound(j))];
    if stats.p == stopkey::Rational::from_integer(1.into()) {
        lines.push(line(COMMON_SOURCE, "H(X) - 2", LineKind::Achievability, hx - 2.0));
    }
    let kappa = p * hc.unwrap_or(0.0);
    lines.push(line(
        HASH_CHECK,
        "P(X=Y) (H(X|X=Y) - log2 m - 2)",
        LineKind::Achievability,
        p * (hc.unwrap_or(0.0) - log_m - 2.0),
    ));
    lines.push(line(
        RECONCILED_REFERENCE,
        "I - 2 log2(I + 1) - log2 m - 9.04",
        LineKind::Reference,
        reference_length_bound(i, m),
    ));
    let prior = if kappa > 0.0 { kappa - kappa.log2() - 2.0 * log_m } else { f64::NEG_INFINITY };
    lines.push(line(PRIOR_WORK, "~ kappa - log2 kappa - 2 log2(1/eps), kappa = P(X=Y) H(X|X=Y), eps = 1/m", LineKind::Comparison, prior));
    Dashboard {
        m,
        mutual_information: i,
        entropy_x: hx,
        p: stats.p.to_string(),
        conditional_entropy: hc,
        lines,
    }
}

pub fn render_dashboard(d: &Dashboard) -> String {
    let mut s = String::new();
    s.push_str(&format!("m = {}\n", d.m));
    s.push_str(&format!("I(X;Y)      = {:.6}\n", d.mutual_information));
    s.push_str(&format!("H(X)        = {:.6}\n", d.entropy_x));
    s.push_str(&format!("P(X=Y)      = {}\n", d.p));
    match d.conditional_entropy {
        Some(h) => s.push_str(&format!("H(X|X=Y)    = {h:.6}\n")),
        None => s.push_str("H(X|X=Y)    = undefined (P(X=Y) = 0)\n"),
    }
    s.push_str(&format!("\n{:<22} {:<13} {:>12}  {}\n", "line", "kind", "bits", "formula"));
    for l in &d.lines {
        let kind = match l.kind {
            LineKind::Converse => "converse",
            LineKind::Achievability => "achievable",
            LineKind::Reference => "reference",
            LineKind::Comparison => "comparison",
        };
        let value = if l.value.is_finite() { format!("{:.6}", l.value) } else { "-inf".to_string() };
        let flag = if l.vacuous { "  (vacuous)" } else { "" };
        s.push_str(&format!("{:<22} {:<13} {:>12}  {}{}\n", l.label, kind, value, l.formula, flag));
    }
    s
}
