//! Random restrictions: S_σ(T), D_S(p) and D_σ(p) composed with a base
//! restriction. Every restriction draw costs exactly one oracle query.

use rand::Rng;

use crate::dist::Restriction;
use crate::error::{invalid, JuntaError, Result};
use crate::oracle::{CondOracle, Cube};

/// S_σ(T): each element of T independently with probability σ.
#[derive(Debug, Clone, PartialEq)]
pub struct StarSubsetLaw {
    ground: Vec<usize>,
    sigma: f64,
}

impl StarSubsetLaw {
    pub fn new(ground: Vec<usize>, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma <= 1.0) {
            return invalid(format!("sigma {sigma} outside (0, 1]"));
        }
        Ok(Self { ground, sigma })
    }

    pub fn ground(&self) -> &[usize] {
        &self.ground
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Probability that exactly `s` is drawn, for s ⊆ T.
    pub fn probability(&self, size: usize) -> f64 {
        let m = self.ground.len();
        self.sigma.powi(size as i32) * (1.0 - self.sigma).powi((m - size) as i32)
    }
}

pub fn sample_subset(law: &StarSubsetLaw, rng: &mut impl Rng) -> Vec<usize> {
    law.ground
        .iter()
        .copied()
        .filter(|_| rng.random::<f64>() < law.sigma)
        .collect()
}

/// σ^j for σ = 1/2, exact in binary floating point.
pub fn half_power(j: u32) -> f64 {
    (0.5f64).powi(j as i32)
}

/// S_σ(T) for T given as a bit mask.
pub fn sample_subset_mask(ground: u64, sigma: f64, rng: &mut impl Rng) -> u64 {
    let mut out = 0;
    let mut bits = ground;
    while bits != 0 {
        let low = bits & bits.wrapping_neg();
        if rng.random::<f64>() < sigma {
            out |= low;
        }
        bits &= bits - 1;
    }
    out
}

/// ρ ∼ D_S(p): one unconditioned draw x, stars exactly at S, x elsewhere.
pub fn sample_restriction_ds(oracle: &mut CondOracle, s: &[usize]) -> Result<Restriction> {
    if let Some(&bad) = s.iter().find(|&&i| i >= oracle.n()) {
        return invalid(format!("coordinate {} out of range", bad + 1));
    }
    let stars = s.iter().fold(0u64, |m, &i| m | 1 << i);
    Ok(ds_cube(oracle, stars)?.to_restriction(oracle.n()))
}

/// D_S(p) on masks. One query.
pub fn ds_cube(oracle: &mut CondOracle, stars: u64) -> Result<Cube> {
    let x = oracle.draw(Cube::full(oracle.n()))?;
    Ok(Cube::around(x, stars))
}

/// D_σ(p_|base) composed with `base`, on masks. One query.
pub fn dsigma_cube(oracle: &mut CondOracle, sigma: f64, base: Cube, rng: &mut impl Rng) -> Result<Cube> {
    let x = oracle.draw(base)?;
    let s = sample_subset_mask(base.stars, sigma, rng);
    Ok(Cube::around(x, s))
}

/// One draw x ∼ p_|base and S ∼ S_σ(stars(base)); returns the restriction
/// with stars S, `base` on its fixed coordinates and x on stars(base)∖S.
pub fn sample_restriction_dsigma(
    oracle: &mut CondOracle,
    sigma: f64,
    base: &Restriction,
    rng: &mut impl Rng,
) -> Result<Restriction> {
    StarSubsetLaw::new(vec![], sigma)?;
    if base.n() != oracle.n() {
        return Err(JuntaError::DimensionMismatch {
            expected: oracle.n(),
            found: base.n(),
        });
    }
    Ok(dsigma_cube(oracle, sigma, Cube::from_restriction(base), rng)?.to_restriction(oracle.n()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{DistributionSpec, ExplicitPmf};
    use crate::oracle::ZeroMassPolicy;
    use crate::rng::stream;

    #[test]
    fn empty_ground_set_gives_empty_subset() {
        let law = StarSubsetLaw::new(vec![], 0.5).unwrap();
        let mut rng = stream(0, 0);
        assert!(sample_subset(&law, &mut rng).is_empty());
    }

    #[test]
    fn fair_coin_inclusion_frequencies() {
        let law = StarSubsetLaw::new((0..4).collect(), 0.5).unwrap();
        let mut rng = stream(1, 0);
        let mut counts = [0u32; 4];
        let draws = 100_000;
        for _ in 0..draws {
            for i in sample_subset(&law, &mut rng) {
                counts[i] += 1;
            }
        }
        for c in counts {
            assert!((c as f64 / draws as f64 - 0.5).abs() < 0.01);
        }
    }

    #[test]
    fn near_one_sigma_mean_size() {
        let sigma = 1.0 - 1.0 / 1024.0;
        let law = StarSubsetLaw::new((0..5).collect(), sigma).unwrap();
        let mut rng = stream(2, 0);
        let draws = 20_000;
        let total: usize = (0..draws).map(|_| sample_subset(&law, &mut rng).len()).sum();
        let mean = total as f64 / draws as f64;
        assert!((mean - 5.0 * sigma).abs() < 0.01);
    }

    #[test]
    fn ds_on_point_mass_and_accounting() {
        let pm: DistributionSpec = ExplicitPmf::point_mass(3, 7).unwrap().into();
        let mut o = CondOracle::new(pm, ZeroMassPolicy::Error, stream(3, 0)).unwrap();
        let rho = sample_restriction_ds(&mut o, &[]).unwrap();
        assert_eq!(rho.to_string(), "+++");
        let all = sample_restriction_ds(&mut o, &[0, 1, 2]).unwrap();
        assert_eq!(all.to_string(), "***");
        let mut rng = stream(3, 1);
        let same = sample_restriction_dsigma(&mut o, 0.5, &rho, &mut rng).unwrap();
        assert_eq!(same, rho);
        assert_eq!(o.queries(), 3);
    }

    #[test]
    fn ds_parity_first_coordinate_is_fair() {
        let p: DistributionSpec = ExplicitPmf::new(2, vec![0.375, 0.125, 0.125, 0.375]).unwrap().into();
        let mut o = CondOracle::new(p, ZeroMassPolicy::Error, stream(4, 0)).unwrap();
        let draws = 40_000;
        let plus = (0..draws)
            .filter(|_| sample_restriction_ds(&mut o, &[1]).unwrap().cells()[0] == 1)
            .count();
        assert!((plus as f64 / draws as f64 - 0.5).abs() < 0.01);
    }
}
