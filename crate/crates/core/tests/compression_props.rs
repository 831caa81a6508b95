use junta_core::compression::*;
use junta_core::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[test]
fn leaf_law_of_uniform_walk_is_the_uniform_execution() {
    let mut r = rng(1);
    for seed in 0..5 {
        let p = random_almost_uniform(3, 0.3, &mut r).unwrap();
        let tree = QueryTree::random(3, 3, seed).unwrap();
        let paths = enumerate_paths(&p, &tree).unwrap();
        let u = ExplicitPmf::uniform(3).unwrap();
        let paths_u = enumerate_paths(&u, &tree).unwrap();
        assert!((paths.iter().map(|l| l.p_prob).sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((paths.iter().map(|l| l.u_prob).sum::<f64>() - 1.0).abs() < 1e-12);
        for (a, b) in paths.iter().zip(&paths_u) {
            assert_eq!(a.path, b.path);
            assert!((a.u_prob - b.p_prob).abs() < 1e-12);
        }
    }
}

#[test]
fn empirical_leaf_law_matches_enumeration() {
    let mut r = rng(2);
    let p = random_almost_uniform(2, 0.4, &mut r).unwrap();
    let tree = QueryTree::random(2, 2, 5).unwrap();
    let paths = enumerate_paths(&p, &tree).unwrap();
    let trials = 40_000;
    let mut counts = std::collections::HashMap::new();
    for _ in 0..trials {
        let xs = execute_tree(&p, &tree, &mut r).unwrap();
        let key: Vec<u64> = xs.iter().map(|x| x.index()).collect();
        *counts.entry(key).or_insert(0u32) += 1;
    }
    let tv: f64 = paths
        .iter()
        .map(|l| (*counts.get(&l.path).unwrap_or(&0) as f64 / trials as f64 - l.p_prob).abs())
        .sum::<f64>()
        / 2.0;
    assert!(tv < 0.03, "{tv}");
}

#[test]
fn closed_form_identities() {
    let mut r = rng(3);
    for (n, depth, eps, delta) in [(2, 2, 0.2, 0.5), (3, 3, 0.3, 0.1), (4, 2, 0.45, 0.01), (3, 4, 0.1, 1.0)] {
        let p = random_almost_uniform(n, eps, &mut r).unwrap();
        let tree = QueryTree::random(n, depth, 17).unwrap();
        let a = compression_audit(&p, &tree, eps, delta, 0, 0.01, &mut r).unwrap();
        assert!((a.reject_prob_exact - a.reject_prob_closed_form).abs() < 1e-12, "{a:?}");
        assert!(a.closed_form_gap < 1e-12, "{a:?}");
        assert!(a.reject_prob_exact >= -1e-12 && a.reject_prob_exact <= 1.0);
    }
}

#[test]
fn small_delta_rejects_almost_always() {
    let mut r = rng(4);
    let delta = 0.01;
    let p = random_almost_uniform(3, 0.2, &mut r).unwrap();
    let tree = QueryTree::random(3, 3, 9).unwrap();
    let a = compression_audit(&p, &tree, 0.2, delta, 5_000, 0.01, &mut r).unwrap();
    assert!(a.reject_prob_exact >= 1.0 - 2.0 * delta, "{a:?}");
    assert!(a.reject_rate_empirical >= 1.0 - 2.0 * delta - 0.01, "{a:?}");
}

#[test]
fn delta_one_on_uniform_never_rejects() {
    let mut r = rng(5);
    let u = ExplicitPmf::uniform(3).unwrap();
    let tree = QueryTree::random(3, 2, 1).unwrap();
    for _ in 0..100 {
        assert!(matches!(sample_walk(&u, &tree, 1.0, &mut r).unwrap(), WalkOutcome::Accept(_)));
    }
    assert!(sample_walk(&u, &tree, 0.0, &mut r).is_err());
}
