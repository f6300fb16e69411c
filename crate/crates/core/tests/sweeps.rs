use harmonic_core::analysis;
use harmonic_core::equilibrium::{find_pne_dynamics, verify_pne, DynamicsOptions};
use harmonic_core::harness::{
    self, generate_instance, run_consistency_sweep, run_robustness_sweep, AdversarialPolicy, GeneratorParams,
    SweepConfig, SweepSpace,
};
use harmonic_core::par::Execution;

#[test]
fn perturbed_predictions_respect_the_gamma_bound() {
    let mut cfg = SweepConfig::new(SweepSpace::L2, vec![3, 4, 5], vec![0.1, 0.5], 24, 5);
    cfg.perturb = 0.6;
    let res = run_consistency_sweep(&cfg).unwrap();
    assert!(res.records.iter().any(|r| r.gamma > 1.01));
    for r in &res.records {
        for c in &r.certificates {
            let opt = analysis::optimal_facility(&r.instance).value;
            assert!(c.social_cost <= r.gamma * (1.0 + 2.0 * r.c) * opt + 1e-6);
        }
    }
    assert!(res.all_passed());
}

#[test]
fn zero_c_on_the_optimum_gives_poa_one_on_the_line() {
    let cfg = SweepConfig::new(SweepSpace::Line, vec![3, 5, 7], vec![0.0], 12, 3);
    let res = run_consistency_sweep(&cfg).unwrap();
    for r in &res.records {
        assert!((r.poa - 1.0).abs() <= 1e-6, "poa {}", r.poa);
    }
}

#[test]
fn every_recorded_certificate_verifies_and_poa_is_at_least_one() {
    for space in [SweepSpace::L2, SweepSpace::Circle, SweepSpace::Segment, SweepSpace::Lp { p: 1.0 }] {
        let cfg = SweepConfig::new(space, vec![2, 3, 4], vec![0.25, 1.0], 12, 17);
        let res = run_robustness_sweep(&cfg).unwrap();
        for r in &res.records {
            assert!(r.poa >= 1.0 - 1e-9);
            for c in &r.certificates {
                assert!(verify_pne(&r.instance, &c.y, c.delta, c.eps).unwrap().is_ok());
            }
        }
        assert!(res.all_passed(), "{space:?}");
    }
}

#[test]
fn sweeps_are_byte_identical_across_runs_and_modes() {
    let mut cfg = SweepConfig::new(SweepSpace::Circle, vec![3, 4], vec![0.5], 10, 123);
    cfg.policies = vec![AdversarialPolicy::Antipode, AdversarialPolicy::RandomDistant];
    let a = run_robustness_sweep(&cfg).unwrap().to_csv();
    let b = run_robustness_sweep(&cfg).unwrap().to_csv();
    cfg.exec = Execution::Sequential;
    let c = run_robustness_sweep(&cfg).unwrap().to_csv();
    assert_eq!(a, b);
    assert_eq!(a, c);
    assert_eq!(a.lines().count(), 11);
}

#[test]
fn omega_n_trend_is_linear() {
    let ns: Vec<usize> = (2..=12).collect();
    let trend = harness::omega_n_trend(&ns, 50.0, Execution::Parallel).unwrap();
    for (n, p) in trend {
        assert!((p - (n as f64 - 1.0)).abs() <= 1e-9, "n={n} poa={p}");
    }
}

#[test]
fn dynamics_settle_on_the_agent_at_the_prediction() {
    let inst = generate_instance(&GeneratorParams::AdversarialOmegaN { n: 10, r: 1000.0 }, 0)
        .unwrap()
        .instance()
        .unwrap();
    let cert = find_pne_dynamics(&inst, 0.0, None, DynamicsOptions::default()).unwrap().unwrap();
    assert_eq!(cert.distribution.probs[0], 1.0);
    assert!((cert.social_cost - 9000.0).abs() < 1e-9);
}

#[test]
fn clustered_generator_is_deterministic() {
    let p = GeneratorParams::Clustered {
        n: 6,
        dim: 2,
        p: 2.0,
        clusters: 2,
        spread: 0.5,
        side: 10.0,
    };
    assert_eq!(generate_instance(&p, 1).unwrap(), generate_instance(&p, 1).unwrap());
}
