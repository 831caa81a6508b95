mod common;

use junta_core::hard_instances::parity_instance;
use junta_core::junta_tester::*;
use junta_core::relevant_vars::*;
use junta_core::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn oracle(p: impl Into<DistributionSpec>, seed: u64, trial: u64) -> (CondOracle, ChaCha8Rng) {
    let (o, a) = rng::trial_streams(seed, trial);
    (CondOracle::new(p.into(), ZeroMassPolicy::Error, o).unwrap(), a)
}

fn tester_cfg(scale: f64) -> AlgoConfig {
    AlgoConfig {
        budget_constant_scale: 0.05,
        tester_scale: scale,
        c_exponent: 1.0,
        eps0_log_power: 0,
        mean_tester_c: 200.0,
        ..AlgoConfig::default()
    }
}

#[test]
fn budget_search_returns_nothing_or_at_least_b() {
    let cfg = AlgoConfig {
        budget_constant_scale: 0.02,
        ..AlgoConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for trial in 0..12u64 {
        let n = 6;
        let vars: Vec<usize> = vec![trial as usize % n, (trial as usize + 2) % n];
        let mut sorted = vars.clone();
        sorted.sort_unstable();
        let inner = common::dirichlet_pmf(2, &mut rng);
        let (mut o, mut a) = oracle(JuntaDist::new(n, sorted, inner).unwrap(), 1, trial);
        for b in [1, 2, 4] {
            let (found, call) = variables_budget(&mut o, 2, 0.25, b, &[], &cfg, &mut a).unwrap();
            assert!(found.is_empty() || found.len() >= b);
            assert_eq!(call.found, found.len());
        }
    }
}

#[test]
fn finder_budget_stays_below_eight_k() {
    let cfg = AlgoConfig {
        budget_constant_scale: 0.05,
        ..AlgoConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for trial in 0..10u64 {
        let k = 1 + trial as usize % 2;
        let inner = common::dirichlet_pmf(k, &mut rng);
        let vars: Vec<usize> = (0..k).map(|i| 2 * i + 1).collect();
        let (mut o, mut a) = oracle(JuntaDist::new(6, vars.clone(), inner).unwrap(), 2, trial);
        let r = find_relevant_variables(&mut o, k, 0.25, &cfg, &mut a).unwrap();
        assert!(r.cumulative_budget <= 8 * k);
        assert!(r.found.iter().all(|i| vars.contains(i)), "{:?} outside {vars:?}", r.found);
        assert_eq!(r.queries, o.queries());
    }
}

#[test]
fn too_many_found_variables_reject_without_mean_tests() {
    let p = parity_instance(8, &[0, 1, 2], 0.125).unwrap();
    for trial in 0..5 {
        let (mut o, mut a) = oracle(p.clone(), 3, trial);
        let r = test_junta(&mut o, 2, 0.125, &tester_cfg(0.01), &mut a).unwrap();
        if r.finder.found.len() > 2 {
            assert_eq!(r.verdict, TestVerdict::Reject);
            assert_eq!(r.mean_tests, 0);
            assert!(r.blocks.is_empty());
            assert_eq!(r.queries, r.finder.queries);
        }
    }
}

#[test]
fn tester_query_accounting_is_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let instances: Vec<DistributionSpec> = vec![
        JuntaDist::new(8, vec![0, 5], common::dirichlet_pmf(2, &mut rng)).unwrap().into(),
        parity_instance(8, &[0, 1, 2], 0.125).unwrap().into(),
        DistributionSpec::uniform(8),
    ];
    for (t, p) in instances.into_iter().enumerate() {
        let (mut o, mut a) = oracle(p, 4, t as u64);
        let r = test_junta(&mut o, 2, 0.125, &tester_cfg(0.01), &mut a).unwrap();
        assert_eq!(r.queries, o.queries());
        assert_eq!(r.accounted_queries(), r.queries);
        if r.verdict == TestVerdict::Accept {
            let full: u64 = r
                .blocks
                .iter()
                .map(|b| r.plan.l(b.l) * r.plan.repetitions * (2 + r.plan.repetitions * 2 * b.q))
                .sum();
            assert_eq!(r.queries, r.finder.queries + full);
            assert_eq!(r.blocks.len() as u32, r.plan.j_levels * r.plan.r_levels);
        }
    }
}

#[test]
fn reject_rate_does_not_drop_with_scale() {
    let p = parity_instance(8, &[0, 1, 2], 0.125).unwrap();
    let trials = 20;
    let rates: Vec<f64> = [0.0025, 0.005, 0.01]
        .iter()
        .map(|&s| {
            (0..trials)
                .filter(|&t| {
                    let (mut o, mut a) = oracle(p.clone(), 5, t);
                    test_junta(&mut o, 2, 0.125, &tester_cfg(s), &mut a).unwrap().verdict == TestVerdict::Reject
                })
                .count() as f64
                / trials as f64
        })
        .collect();
    assert!(rates.windows(2).all(|w| w[1] >= w[0] - 0.1), "{rates:?}");
}

#[test]
fn learner_recovers_a_junta() {
    let inner = ExplicitPmf::new(1, vec![0.9, 0.1]).unwrap();
    let hidden = JuntaDist::new(6, vec![0], inner).unwrap();
    let cfg = AlgoConfig::default();
    assert_eq!(learner_sample_count(1, 0.1, &cfg), 1600);
    let (mut o, _) = oracle(hidden.clone(), 6, 0);
    let learned = learn_junta(&mut o, &[0], 0.1, &cfg).unwrap();
    assert_eq!(o.queries(), 1600);
    let d = learned.to_explicit().unwrap().tv(&hidden.to_explicit().unwrap()).unwrap();
    assert!(d <= 0.1);
}
