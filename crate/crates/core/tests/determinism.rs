use cohdist::exec::Execution;
use cohdist::validation::{run_checks, run_selftest, Scale, DEFAULT_SEED};

#[test]
fn sequential_and_parallel_checks_agree() {
    let par = run_checks(7, Scale::Quick, Execution::Parallel);
    let seq = run_checks(7, Scale::Quick, Execution::Sequential);
    assert_eq!(par, seq);
    for c in &par {
        assert!(c.passed, "{}", c.line());
    }
}

#[test]
fn injected_failure_fails_the_report() {
    let r = run_selftest(DEFAULT_SEED, Scale::Quick, Some(9));
    assert!(!r.passed);
    let bad: Vec<u8> = r.checks.iter().filter(|c| !c.passed).map(|c| c.id).collect();
    assert_eq!(bad, vec![9]);
    assert!(r.to_json().unwrap().contains("injected failure"));
}
