#![allow(dead_code)]

use junta_core::ExplicitPmf;
use rand::Rng;
use rand_distr::{Distribution, Exp1};

/// A pmf whose masses are multiples of 2^-20, so sums of masses are exact.
pub fn dyadic_pmf(n: usize, rng: &mut impl Rng) -> ExplicitPmf {
    let size = 1usize << n;
    let total = 1u64 << 20;
    let mut cuts: Vec<u64> = (0..size - 1).map(|_| rng.random_range(0..=total)).collect();
    cuts.push(0);
    cuts.push(total);
    cuts.sort_unstable();
    let pmf = cuts.windows(2).map(|w| (w[1] - w[0]) as f64 / total as f64).collect();
    ExplicitPmf::new(n, pmf).unwrap()
}

/// A flat Dirichlet pmf.
pub fn dirichlet_pmf(n: usize, rng: &mut impl Rng) -> ExplicitPmf {
    let w: Vec<f64> = (0..1usize << n).map(|_| Exp1.sample(rng)).collect();
    ExplicitPmf::from_weights(n, w).unwrap()
}
