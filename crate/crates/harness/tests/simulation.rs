use stopkey::common::exact_common_law;
use stopkey::format::Distribution;
use stopkey::reconciled::{derandomize_hash, HashFamily};
use stopkey::{ExactScalar, JointPmf, Pmf, Rational};
use stopkey_harness::config::{ExperimentConfig, HashSpec, Protocol, ReconcilerSpec};
use stopkey_harness::eavesdropper::eavesdropper_view;
use stopkey_harness::report::{Report, Status};
use stopkey_harness::simulate::{run_simulation, simulate};

fn q(n: i64, d: i64) -> Rational {
    Rational::from_ratio(n, d)
}

fn tenths() -> Pmf {
    Pmf::new(vec![q(2, 5), q(3, 10), q(1, 5), q(1, 10)]).unwrap()
}

fn half_diagonal() -> JointPmf {
    JointPmf::from_rows(vec![vec![q(1, 2), q(0, 1)], vec![q(1, 4), q(1, 4)]]).unwrap()
}

fn data(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

#[test]
fn common_scheme_estimates_cover_the_exact_values() {
    let mut cfg = ExperimentConfig::new("tenths", Protocol::Common);
    cfg.trials = 100_000;
    cfg.seed = 11;
    let report = simulate(&cfg, &Distribution::Single(tenths())).unwrap().report;
    let est = report.estimate.as_ref().unwrap();
    assert_eq!(est.failures, 0);
    assert_eq!(est.epsilon_interval[0], 0.0);

    let law = exact_common_law(&tenths(), 40).unwrap();
    let ell = law.conditional_entropy_exact.unwrap();
    let ell = num_traits::ToPrimitive::to_f64(&ell).unwrap();
    assert!(est.ell_interval[0] <= ell && ell <= est.ell_interval[1], "{ell} outside {:?}", est.ell_interval);
    assert_eq!(report.exit_code(), 0);
    assert!(report.rsbs.iter().all(|v| v.verdict.is_valid()));
}

#[test]
fn almost_common_estimate_covers_the_derandomized_error() {
    let mut cfg = ExperimentConfig::new("half diagonal", Protocol::AlmostCommon);
    cfg.trials = 50_000;
    cfg.seed = 3;
    let report = simulate(&cfg, &Distribution::Joint(half_diagonal())).unwrap().report;
    let (_, err) = derandomize_hash(&half_diagonal(), 2, &HashFamily::Exhaustive).unwrap();
    let err = num_traits::ToPrimitive::to_f64(&err).unwrap();
    let est = report.estimate.unwrap();
    assert!(est.epsilon_interval[0] <= err && err <= est.epsilon_interval[1]);
    assert!(report.checks.iter().all(|c| c.status != Status::Fail));
}

#[test]
fn zero_trials_gives_bounds_only() {
    let cfg = ExperimentConfig::new("tenths", Protocol::Common);
    let report = simulate(&cfg, &Distribution::Single(tenths())).unwrap().report;
    assert!(report.estimate.is_none());
    assert!(report.checks.is_empty());
    assert!(report.rsbs.is_empty());
    assert!(!report.bounds.lines.is_empty());
    assert_eq!(report.exit_code(), 0);
}

#[test]
fn reports_are_byte_identical_across_runs_and_thread_counts() {
    let mut cfg = ExperimentConfig::new("cycle", Protocol::Correlated);
    cfg.trials = 5_000;
    cfg.seed = 42;
    cfg.reconciler = ReconcilerSpec::HashMap(1);
    let dist = Distribution::Joint(half_diagonal());
    let a = simulate(&cfg, &dist).unwrap().report.to_json();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let b = pool.install(|| simulate(&cfg, &dist)).unwrap().report.to_json();
    assert_eq!(a, b);
    cfg.seed = 43;
    let c = simulate(&cfg, &dist).unwrap().report;
    assert_eq!(c.estimate.unwrap().trials, 5_000);
}

#[test]
fn report_round_trips_through_json() {
    let mut cfg = ExperimentConfig::new("tenths", Protocol::Common);
    cfg.trials = 2_000;
    let report = simulate(&cfg, &Distribution::Single(tenths())).unwrap().report;
    let back: Report = serde_json::from_str(&report.to_json()).unwrap();
    assert_eq!(back.to_json(), report.to_json());
}

#[test]
fn config_files_in_data_run() {
    let mut cfg = ExperimentConfig::load(&data("configs/almost_cycle8_random.json")).unwrap();
    assert_eq!(cfg.hash, HashSpec::Random(5));
    cfg.dist = data("noisy_cycle8.json");
    cfg.trials = 3_000;
    let report = run_simulation(&cfg).unwrap();
    // a single random table is reported, never asserted
    assert!(report.checks.iter().any(|c| c.status == Status::Reference));
    assert_eq!(report.exit_code(), 0);
}

#[test]
fn transcript_log_shows_only_public_messages() {
    let mut cfg = ExperimentConfig::new("cycle", Protocol::AlmostCommon);
    cfg.trials = 2_000;
    cfg.transcript_log = Some("unused".into());
    let dist = stopkey_harness::simulate::load_distribution(&data("noisy_cycle8.json")).unwrap();
    let out = simulate(&cfg, &dist).unwrap();
    let log = out.log.expect("log requested");
    assert_eq!(log.records.len(), 2_000);
    let summary = eavesdropper_view(&log).unwrap();
    assert!(summary.shapes.keys().all(|s| s == "A:h B:w" || s == "A:h B:e"));
    assert_eq!(summary.fairness.flagged, 0);
}

#[test]
fn missing_distribution_is_an_input_error() {
    let cfg = ExperimentConfig::new(data("does-not-exist.json"), Protocol::Common);
    let err = run_simulation(&cfg).unwrap_err();
    assert_eq!(err.exit_code(), 3);
}
