//! Chi-square check that every next key bit splits evenly, per transcript.
//!
//! This is a statistical complement to exact verification: it runs on
//! sampled keys and only flags, never proves.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use stopkey::stats::{chi_square_sf, fair_split_statistic};
use stopkey::BitString;

/// Prefixes with fewer continuing samples are not tested.
pub const MIN_COUNT: u64 = 10;
/// Family-wise significance level before the Bonferroni split.
pub const ALPHA: f64 = 0.01;
/// Bits deeper than this are not counted.
pub const MAX_DEPTH: usize = 32;

/// Next-bit counts keyed by transcript and prefix.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FairnessCounts {
    counts: BTreeMap<String, BTreeMap<BitString, [u64; 2]>>,
}

impl FairnessCounts {
    pub fn add(&mut self, transcript: &str, key: &BitString) {
        if key.is_empty() {
            // nothing to count, but the transcript was seen
            self.counts.entry(transcript.to_string()).or_default();
            return;
        }
        let per = self.counts.entry(transcript.to_string()).or_default();
        for n in 0..key.len().min(MAX_DEPTH) {
            let slot = per.entry(key.prefix(n)).or_insert([0, 0]);
            slot[usize::from(key.bits()[n])] += 1;
        }
    }

    pub fn merge(&mut self, other: &FairnessCounts) {
        for (t, per) in &other.counts {
            let mine = self.counts.entry(t.clone()).or_default();
            for (p, c) in per {
                let slot = mine.entry(p.clone()).or_insert([0, 0]);
                slot[0] += c[0];
                slot[1] += c[1];
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrefixTest {
    pub transcript: String,
    pub prefix: String,
    pub zeros: u64,
    pub ones: u64,
    pub statistic: f64,
    pub p_value: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairnessReport {
    pub alpha: f64,
    pub min_count: u64,
    /// Number of tests; each is run at `alpha / tests`.
    pub tests: usize,
    pub flagged: usize,
    /// No prefix had enough samples.
    pub vacuous: bool,
    pub transcripts: usize,
    pub results: Vec<PrefixTest>,
}

impl FairnessReport {
    pub fn flagged_tests(&self) -> impl Iterator<Item = &PrefixTest> {
        self.results.iter().filter(|t| t.flagged)
    }
}

pub fn evaluate(counts: &FairnessCounts) -> FairnessReport {
    let testable: Vec<(&String, &BitString, [u64; 2])> = counts
        .counts
        .iter()
        .flat_map(|(t, per)| per.iter().map(move |(p, c)| (t, p, *c)))
        .filter(|(_, _, c)| c[0] + c[1] >= MIN_COUNT)
        .collect();
    let tests = testable.len();
    let level = ALPHA / tests.max(1) as f64;
    let results: Vec<PrefixTest> = testable
        .into_iter()
        .map(|(t, p, [zeros, ones])| {
            let statistic = fair_split_statistic(zeros, ones);
            let p_value = chi_square_sf(statistic, 1.0);
            PrefixTest {
                transcript: t.clone(),
                prefix: p.to_bits_string(),
                zeros,
                ones,
                statistic,
                p_value,
                flagged: p_value < level,
            }
        })
        .collect();
    FairnessReport {
        alpha: ALPHA,
        min_count: MIN_COUNT,
        tests,
        flagged: results.iter().filter(|r| r.flagged).count(),
        vacuous: tests == 0,
        transcripts: counts.counts.len(),
        results,
    }
}

/// Tests `(transcript, key)` samples.
pub fn fairness_test<'a>(samples: impl IntoIterator<Item = (&'a str, &'a BitString)>) -> FairnessReport {
    let mut counts = FairnessCounts::default();
    for (t, k) in samples {
        counts.add(t, k);
    }
    evaluate(&counts)
}
