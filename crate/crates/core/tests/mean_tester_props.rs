mod common;

use junta_core::mean_tester::*;
use junta_core::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Σ over index tuples (i_1..i_t) of (Σ_a Π_s x_a[i_s])·(Σ_b Π_s y_b[i_s]),
/// t = 2^r: the inner product of the summed tensor powers.
fn naive_tensor_inner(xs: &[Sample], ys: &[Sample], r: u32) -> i128 {
    let n = xs[0].n();
    let t = 1usize << r;
    let tuples = n.pow(t as u32);
    let mut total = 0i128;
    for code in 0..tuples {
        let idx: Vec<usize> = (0..t).map(|s| code / n.pow(s as u32) % n).collect();
        let side = |zs: &[Sample]| -> i128 {
            zs.iter().map(|z| idx.iter().map(|&i| z.bits()[i] as i128).product::<i128>()).sum()
        };
        total += side(xs) * side(ys);
    }
    total
}

fn sample_set(n: usize, q: usize) -> impl Strategy<Value = Vec<Sample>> {
    proptest::collection::vec(0u64..(1 << n), q).prop_map(move |v| v.into_iter().map(|i| Sample::from_index(n, i)).collect())
}

proptest! {
    #[test]
    fn gram_statistic_equals_tensor_expansion(
        (xs, ys) in (1usize..=4, 1usize..=3, 1usize..=3)
            .prop_flat_map(|(n, qx, qy)| (sample_set(n, qx), sample_set(n, qy))),
    ) {
        let g = gram_matrix(&xs, &ys).unwrap();
        for r in 0..=2 {
            prop_assert_eq!(g.power_sum(r), PowerSum::Exact(naive_tensor_inner(&xs, &ys, r)));
        }
    }
}

#[test]
fn tensor_mean_norms_respect_the_junta_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for trial in 0..40 {
        let n = 2 + trial % 7;
        let k = 1 + trial % 3;
        let vars: Vec<usize> = (0..k.min(n)).collect();
        let inner = common::dirichlet_pmf(vars.len(), &mut rng);
        let p = JuntaDist::new(n, vars, inner).unwrap().to_explicit().unwrap();
        for r in 1..=2u32 {
            let bound = (2.0 * n.max(k * k) as f64 * 2f64.powi(r as i32)).powi(1 << (r - 1));
            assert!(tensor_mean_norm_sq(&p, r).unwrap() <= bound);
        }
    }
}

/// ‖E[X Xᵀ]‖_F² for X = x^{⊗2^r}, with the matrix built entry by entry.
fn second_moment_frobenius_sq(p: &ExplicitPmf, r: u32) -> f64 {
    let n = p.n();
    let t = 1usize << r;
    let dim = n.pow(t as u32);
    let tensor = |x: usize| -> Vec<f64> {
        (0..dim)
            .map(|code| {
                (0..t)
                    .map(|s| if x >> (code / n.pow(s as u32) % n) & 1 == 1 { 1.0 } else { -1.0 })
                    .product()
            })
            .collect()
    };
    let mut m = vec![0.0; dim * dim];
    for (x, &px) in p.pmf().iter().enumerate() {
        let v = tensor(x);
        for a in 0..dim {
            for b in 0..dim {
                m[a * dim + b] += px * v[a] * v[b];
            }
        }
    }
    m.iter().map(|v| v * v).sum()
}

#[test]
fn next_order_mean_is_the_second_moment_norm() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for n in 1..=4 {
        let p = common::dyadic_pmf(n, &mut rng);
        for r in 0..=1u32 {
            let lhs = tensor_mean_norm_sq(&p, r + 1).unwrap();
            let rhs = second_moment_frobenius_sq(&p, r);
            assert!((lhs - rhs).abs() <= 1e-12 * lhs.max(1.0), "n={n} r={r}: {lhs} vs {rhs}");
        }
    }
}

#[test]
fn statistic_mean_is_the_squared_mean_norm() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let p = common::dirichlet_pmf(5, &mut rng);
    let want = p.mean_vector().l2_squared();
    let spec: DistributionSpec = p.into();
    let mut o = CondOracle::new(spec, ZeroMassPolicy::Error, rng::stream(13, 0)).unwrap();
    let cube = junta_core::oracle::Cube::full(5);
    let draws = 20_000;
    let zs: Vec<f64> = (0..draws)
        .map(|_| {
            let mut src = OracleSource::new(&mut o, cube);
            let x = src.draw_set(3).unwrap();
            let y = src.draw_set(3).unwrap();
            z_statistics(&x, &y, 0).unwrap()[0]
        })
        .collect();
    let mean = zs.iter().sum::<f64>() / draws as f64;
    let sd = (zs.iter().map(|z| (z - mean).powi(2)).sum::<f64>() / (draws - 1) as f64).sqrt();
    assert!((mean - want).abs() < 4.0 * sd / (draws as f64).sqrt());
}
