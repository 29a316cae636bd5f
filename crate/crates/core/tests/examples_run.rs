//! Every example runs to completion and produces sane output.

#[path = "../examples/compare_erm.rs"]
mod compare_erm;
#[path = "../examples/config_runner.rs"]
mod config_runner;
#[path = "../examples/decay_probe.rs"]
mod decay_probe;
#[path = "../examples/erm_rate.rs"]
mod erm_rate;
#[path = "../examples/lemma_checks.rs"]
mod lemma_checks;
#[path = "../examples/logistic.rs"]
mod logistic;
#[path = "../examples/problem_constants.rs"]
mod problem_constants;
#[path = "../examples/schedules.rs"]
mod schedules;
#[path = "../examples/sgd_baseline.rs"]
mod sgd_baseline;
#[path = "../examples/simulate.rs"]
mod simulate;

#[test]
fn simulate_example() {
    let trace = simulate::run().unwrap();
    assert!(trace.final_excess().unwrap() < trace.initial_excess);
    assert!(trace.budgeted_samples() <= 50_000);
}

#[test]
fn schedules_example() {
    schedules::run().unwrap();
}

#[test]
fn compare_erm_example() {
    let reports = compare_erm::run().unwrap();
    assert_eq!(reports.len(), 2);
    assert!(reports.iter().all(|r| r.ratio_defined()));
}

#[test]
fn erm_rate_example() {
    let table = erm_rate::run().unwrap();
    assert_eq!(table.sigma_sq, 12.0);
    assert!(table.rows.iter().all(|r| r.failures == 0));
}

#[test]
fn sgd_baseline_example() {
    sgd_baseline::run().unwrap();
}

#[test]
fn lemma_checks_example() {
    assert!(lemma_checks::run().unwrap());
}

#[test]
fn logistic_example() {
    let (erm, streaming) = logistic::run().unwrap();
    assert!(erm > 0.0 && streaming > 0.0);
}

#[test]
fn decay_probe_example() {
    let report = decay_probe::run().unwrap();
    assert!(report.scales.iter().all(|s| s.log_slope < 0.0));
}

#[test]
fn config_runner_example() {
    config_runner::run(None).unwrap();
    let reference = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/reference.toml");
    streaming_svrg::config::ExperimentConfig::load(reference.as_ref()).unwrap();
    let logistic = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/logistic.toml");
    streaming_svrg::config::ExperimentConfig::load(logistic.as_ref()).unwrap();
}

#[test]
fn problem_constants_example() {
    let k = problem_constants::run().unwrap();
    assert!((k - 9.0).abs() < 1.0);
}
