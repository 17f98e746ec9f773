//! Test distributions: hand-picked pmfs and joints plus seeded random ones.

use stopkey::rng::RandomSource;
use stopkey::{ExactScalar, JointPmf, Pmf, Rational};

fn q(n: i64, d: i64) -> Rational {
    Rational::from_ratio(n, d)
}

fn pmf(masses: &[(i64, i64)]) -> Pmf {
    Pmf::new(masses.iter().map(|&(n, d)| q(n, d)).collect()).expect("corpus pmf")
}

/// Named pmfs covering dyadic, uniform, skewed and long-period cases.
pub fn named_pmfs() -> Vec<(&'static str, Pmf)> {
    vec![
        ("point", Pmf::point(1, 0)),
        ("fair coin", Pmf::uniform(2)),
        ("thirds", pmf(&[(1, 3), (2, 3)])),
        ("uniform 3", Pmf::uniform(3)),
        ("uniform 5", Pmf::uniform(5)),
        ("uniform 8", Pmf::uniform(8)),
        ("dyadic", pmf(&[(1, 2), (1, 4), (1, 8), (1, 8)])),
        ("half quarter quarter", pmf(&[(1, 2), (1, 4), (1, 4)])),
        ("tenths", pmf(&[(2, 5), (3, 10), (1, 5), (1, 10)])),
        ("skewed", pmf(&[(9, 10), (1, 10)])),
        ("very skewed", pmf(&[(999, 1000), (1, 1000)])),
        ("sevenths", pmf(&[(3, 7), (2, 7), (1, 7), (1, 7)])),
        ("primes", Pmf::from_weights(&[2, 3, 5, 7, 11, 13, 17, 19]).expect("weights")),
        ("with zeros", pmf(&[(1, 3), (0, 1), (2, 3), (0, 1)])),
        ("geometric 6", pmf(&[(1, 2), (1, 4), (1, 8), (1, 16), (1, 32), (1, 32)])),
    ]
}

/// `count` random pmfs with support at most `max_support`, weights below 1000.
pub fn random_pmfs(seed: u64, count: usize, max_support: usize) -> Vec<Pmf> {
    let mut src = RandomSource::new(seed);
    (0..count)
        .map(|_| loop {
            let n = 1 + src.below(max_support as u64) as usize;
            let w: Vec<u64> = (0..n).map(|_| src.below(1000)).collect();
            if let Ok(p) = Pmf::from_weights(&w) {
                break p;
            }
        })
        .collect()
}

/// Named pmfs followed by 24 seeded random ones with support at most 8.
pub fn pmf_corpus() -> Vec<(String, Pmf)> {
    let mut out: Vec<(String, Pmf)> = named_pmfs().into_iter().map(|(n, p)| (n.to_string(), p)).collect();
    out.extend(random_pmfs(0x5eed, 24, 8).into_iter().enumerate().map(|(i, p)| (format!("random {i}"), p)));
    out
}

/// Joints used by the correlated-source experiments.
pub fn named_joints() -> Vec<(&'static str, JointPmf)> {
    let rows = |r: &[&[(i64, i64)]]| -> Vec<Vec<Rational>> {
        r.iter().map(|row| row.iter().map(|&(n, d)| q(n, d)).collect()).collect()
    };
    // Y = X + noise on a 4-cycle
    let cycle: Vec<Vec<Rational>> = (0..4)
        .map(|x| (0..4).map(|y| if y == x { q(3, 16) } else if y == (x + 1) % 4 { q(1, 16) } else { q(0, 1) }).collect())
        .collect();
    // odd cycle: no two-bucket hash separates every confusable pair
    let triangle: Vec<Vec<Rational>> = (0..3)
        .map(|x| (0..3).map(|y| if y == x { q(1, 4) } else if y == (x + 1) % 3 { q(1, 12) } else { q(0, 1) }).collect())
        .collect();
    let cycle8: Vec<Vec<Rational>> = (0..8)
        .map(|x| (0..8).map(|y| if y == x { q(7, 64) } else if y == (x + 1) % 8 { q(1, 64) } else { q(0, 1) }).collect())
        .collect();
    // binary symmetric channel with crossover 1/10 on a fair input
    let bsc = rows(&[&[(9, 20), (1, 20)], &[(1, 20), (9, 20)]]);
    vec![
        ("half diagonal", JointPmf::from_rows(rows(&[&[(1, 2), (0, 1)], &[(1, 4), (1, 4)]])).expect("joint")),
        ("noisy cycle", JointPmf::from_rows(cycle).expect("joint")),
        ("noisy triangle", JointPmf::from_rows(triangle).expect("joint")),
        ("noisy cycle 8", JointPmf::from_rows(cycle8).expect("joint")),
        ("bsc 1/10", JointPmf::from_rows(bsc).expect("joint")),
        ("diagonal tenths", JointPmf::diagonal(&pmf(&[(2, 5), (3, 10), (1, 5), (1, 10)]))),
        ("independent bits", JointPmf::product(&Pmf::uniform(2), &Pmf::uniform(2)).expect("joint")),
        (
            "disjoint labels",
            JointPmf::new(
                vec!["a".into(), "b".into()],
                vec!["b".into(), "c".into()],
                rows(&[&[(1, 4), (1, 4)], &[(3, 8), (1, 8)]]),
            )
            .expect("joint"),
        ),
    ]
}

/// Random joints on `n x n` index alphabets, weights below 16.
pub fn random_joints(seed: u64, count: usize, n: usize) -> Vec<JointPmf> {
    let mut src = RandomSource::new(seed);
    (0..count)
        .map(|_| loop {
            let w: Vec<u64> = (0..n * n).map(|i| if i % (n + 1) == 0 { 4 + src.below(12) } else { src.below(6) }).collect();
            let total: u64 = w.iter().sum();
            let rows = w.chunks(n).map(|r| r.iter().map(|&v| q(v as i64, total as i64)).collect()).collect();
            if let Ok(j) = JointPmf::from_rows(rows) {
                break j;
            }
        })
        .collect()
}
