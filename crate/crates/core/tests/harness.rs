use lextensor::harness::{
    parse_report_line, run_all, run_identity, run_identity_mutated, run_trial, IdentityId, Mutation, TrialConfig,
};

#[test]
fn reports_are_reproducible() {
    let cfg = TrialConfig { trials: 5, seed: 7, ..TrialConfig::default() };
    for id in IdentityId::ALL {
        let a = run_identity(id, &cfg).unwrap();
        let b = run_identity(id, &cfg).unwrap();
        assert_eq!(a.max_rel_err.to_bits(), b.max_rel_err.to_bits(), "{id}");
        assert_eq!(a.to_line(), b.to_line());
    }
}

#[test]
fn zero_tolerance_fails_somewhere() {
    let cfg = TrialConfig { trials: 10, tolerance: 0.0, ..TrialConfig::default() };
    let reports = run_all(&cfg).unwrap();
    assert_eq!(reports.len(), 18);
    assert!(reports.iter().any(|r| !r.passed));
}

#[test]
fn factor_order_swaps_are_detected() {
    let cfg = TrialConfig { trials: 30, ..TrialConfig::default() };
    for id in [IdentityId::T1, IdentityId::T8, IdentityId::T11, IdentityId::T15, IdentityId::T10, IdentityId::T13] {
        let r = run_identity_mutated(id, &cfg, Mutation::FactorOrderSwap).unwrap();
        assert!(!r.passed, "{id} survived the swap");
        let c = r.counterexample.as_ref().unwrap();
        let replay = run_trial(id, c.seed, &cfg.bounds, Mutation::FactorOrderSwap).unwrap();
        assert!(replay.rel_err > cfg.tolerance);
        let rec = parse_report_line(&r.to_line()).unwrap();
        assert_eq!(rec.counterexample_seed, Some(c.seed));
        assert!(!rec.passed);
    }
}

#[test]
fn other_mutations_are_detected() {
    let cfg = TrialConfig { trials: 20, ..TrialConfig::default() };
    assert!(!run_identity_mutated(IdentityId::T16, &cfg, Mutation::TransposedJacobian).unwrap().passed);
    assert!(!run_identity_mutated(IdentityId::AppA, &cfg, Mutation::DuplicateBasisElement).unwrap().passed);
}

#[test]
fn seeds_change_the_instances() {
    let a = run_identity(IdentityId::T10, &TrialConfig { trials: 3, seed: 1, ..TrialConfig::default() }).unwrap();
    let b = run_identity(IdentityId::T10, &TrialConfig { trials: 3, seed: 2, ..TrialConfig::default() }).unwrap();
    assert_ne!(a.max_rel_err.to_bits(), b.max_rel_err.to_bits());
}
