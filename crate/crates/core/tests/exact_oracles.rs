mod common;

use junta_core::exact::*;
use junta_core::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Grid search over w(+) for a one-variable junta on J = {i}.
fn grid_one(p: &ExplicitPmf, i: usize) -> f64 {
    let n = p.n();
    let b = (1usize << (n - 1)) as f64;
    (0..=1000)
        .map(|t| {
            let wp = t as f64 / 1000.0 / b;
            let wm = (1.0 - t as f64 / 1000.0) / b;
            p.pmf()
                .iter()
                .enumerate()
                .map(|(x, v)| (v - if x >> i & 1 == 1 { wp } else { wm }).abs())
                .sum::<f64>()
                / 2.0
        })
        .fold(f64::INFINITY, f64::min)
}

/// Vertex enumeration: all but one block weight sit at a breakpoint of its
/// piecewise-linear block objective; the last one is fixed by normalization.
fn vertices(p: &ExplicitPmf, j: &[usize]) -> f64 {
    let n = p.n();
    let nblocks = 1usize << j.len();
    let b = (1usize << (n - j.len())) as f64;
    let key = |x: u64| j.iter().enumerate().fold(0usize, |k, (t, &i)| k | ((x >> i & 1) as usize) << t);
    let mut cells = vec![vec![]; nblocks];
    for x in 0..1u64 << n {
        cells[key(x)].push(p.pmf()[x as usize]);
    }
    let cost = |blk: usize, w: f64| cells[blk].iter().map(|v: &f64| (v - w).abs()).sum::<f64>();
    let breaks: Vec<Vec<f64>> = cells
        .iter()
        .map(|c| std::iter::once(0.0).chain(c.iter().copied()).collect())
        .collect();
    let mut best = f64::INFINITY;
    for free in 0..nblocks {
        let others: Vec<usize> = (0..nblocks).filter(|&b| b != free).collect();
        let mut idx = vec![0usize; others.len()];
        loop {
            let fixed: f64 = others.iter().zip(&idx).map(|(&o, &t)| breaks[o][t]).sum();
            let w_free = 1.0 / b - fixed;
            if w_free >= -1e-15 {
                let total = cost(free, w_free.max(0.0))
                    + others.iter().zip(&idx).map(|(&o, &t)| cost(o, breaks[o][t])).sum::<f64>();
                best = best.min(total / 2.0);
            }
            let mut pos = 0;
            while pos < idx.len() {
                idx[pos] += 1;
                if idx[pos] < breaks[others[pos]].len() {
                    break;
                }
                idx[pos] = 0;
                pos += 1;
            }
            if pos == idx.len() {
                break;
            }
        }
    }
    best
}

fn pmf_strategy(n: usize) -> impl Strategy<Value = ExplicitPmf> {
    prop::collection::vec(0.0f64..1.0, 1 << n)
        .prop_filter("nonzero", |w| w.iter().sum::<f64>() > 1e-3)
        .prop_map(move |w| ExplicitPmf::from_weights(n, w).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn greedy_matches_grid(p in (2usize..=4).prop_flat_map(pmf_strategy), i in 0usize..4) {
        let i = i % p.n();
        let greedy = closest_junta_distance(&p, &[i]).unwrap();
        let grid = grid_one(&p, i);
        prop_assert!(greedy <= grid + 1e-12);
        prop_assert!(grid - greedy <= 1e-3);
        let empty = closest_junta_distance(&p, &[]).unwrap();
        let u = ExplicitPmf::uniform(p.n()).unwrap();
        prop_assert!((empty - p.tv(&u).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn greedy_matches_vertices(p in (2usize..=4).prop_flat_map(pmf_strategy), a in 0usize..4, b in 0usize..4) {
        let n = p.n();
        let (a, b) = (a % n, b % n);
        prop_assume!(a != b);
        let j = [a.min(b), a.max(b)];
        let greedy = closest_junta_distance(&p, &j).unwrap();
        prop_assert!((greedy - vertices(&p, &j)).abs() < 1e-9);
    }

    #[test]
    fn closest_is_at_most_canonical(p in (2usize..=5).prop_flat_map(pmf_strategy), m in 0u64..32) {
        let j: Vec<usize> = (0..p.n()).filter(|&i| m >> i & 1 == 1).collect();
        let closest = closest_junta_distance(&p, &j).unwrap();
        let canonical = canonical_junta_distance(&p, &j).unwrap();
        let by_restrictions = canonical_junta_distance_by_restrictions(&p, &j).unwrap();
        prop_assert!(closest <= canonical + 1e-12);
        prop_assert!(canonical <= 2.0 * closest + 1e-12);
        prop_assert!((canonical - by_restrictions).abs() < 1e-12);
    }
}

#[test]
fn juntas_have_zero_distance() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let inner = common::dirichlet_pmf(2, &mut rng);
    let p = JuntaDist::new(5, vec![1, 3], inner).unwrap().to_explicit().unwrap();
    assert!(closest_junta_distance(&p, &[1, 3]).unwrap() < 1e-12);
    let (d, j) = distance_to_k_junta(&p, 2).unwrap();
    assert!(d < 1e-12);
    assert_eq!(j, vec![1, 3]);
}

#[test]
fn monotonicity_holds_on_random_pmfs() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for m in 1..=5 {
        for _ in 0..10 {
            let h = common::dirichlet_pmf(m, &mut rng);
            let s1 = 1.0 / m as f64;
            for s2 in [0.0, s1 / 4.0, s1 / 2.0, s1] {
                let c = sigma_monotonicity_check(&h, s1, s2).unwrap();
                assert!(c.holds, "{c:?}");
            }
        }
    }
    let h = common::dirichlet_pmf(3, &mut rng);
    assert!(sigma_monotonicity_check(&h, 0.5, 0.1).is_err());
}

#[test]
fn product_bound_holds_on_random_products() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let cfg = AlgoConfig::default();
    for n in [4, 8, 12] {
        for _ in 0..20 {
            let bias: Vec<f64> = (0..n).map(|_| rand::Rng::random_range(&mut rng, 0.35..0.65)).collect();
            let c = product_tv_lower_bound(&ProductDist::new(bias).unwrap(), &cfg).unwrap();
            assert!(c.holds, "{c:?}");
        }
    }
}

#[test]
fn audit_reports_all_levels() {
    let p = hard_instances::parity_instance(4, &[0, 1], 0.1).unwrap();
    let a = structural_audit(&p, &[0], 3.0).unwrap();
    assert_eq!(a.rhs_terms.len(), 3);
    assert!((a.rhs_sum - a.rhs_terms.iter().sum::<f64>()).abs() < 1e-15);
    assert!(a.lhs > 0.0);
    assert!(structural_audit(&ExplicitPmf::uniform(7).unwrap(), &[], 3.0).is_err());
}
