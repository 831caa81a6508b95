//! The subcube conditioning oracle.
//!
//! Internally subcubes are bit masks ([`Cube`]), so the oracle supports
//! n ≤ 64. Batched queries (`conditional_sums`, `conditional_histogram`)
//! return statistics of `count` independent conditional draws and charge
//! `count` queries; they have the same law as `count` single draws.

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::dist::{DistributionSpec, ExplicitPmf, Restriction, Sample};
use crate::error::{JuntaError, Result};
use crate::rng::ChaCha8Rng;

/// Largest ambient dimension an oracle accepts.
pub const ORACLE_DIM_CAP: usize = 64;

/// Largest star count for `conditional_histogram`.
pub const HISTOGRAM_DIM_CAP: usize = 20;

/// What the oracle does when the queried subcube has zero mass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ZeroMassPolicy {
    /// Return a uniform point of the subcube.
    #[default]
    UniformFallback,
    Error,
}

/// A subcube as bit masks: `stars` are free coordinates, `plus` the
/// coordinates fixed to +1 (disjoint from `stars`). Points are plus-masks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Cube {
    pub stars: u64,
    pub plus: u64,
}

impl Cube {
    pub fn full(n: usize) -> Self {
        Self {
            stars: low_mask(n),
            plus: 0,
        }
    }

    pub fn from_restriction(rho: &Restriction) -> Self {
        let (stars, plus) = rho.masks();
        Self { stars, plus }
    }

    pub fn to_restriction(self, n: usize) -> Restriction {
        let cells = (0..n)
            .map(|i| match (self.stars >> i & 1, self.plus >> i & 1) {
                (1, _) => 0,
                (_, 1) => 1,
                _ => -1,
            })
            .collect();
        Restriction::from_cells(cells).expect("valid cells")
    }

    /// Fix every coordinate to the point `x` except `stars`.
    pub fn around(x: u64, stars: u64) -> Self {
        Self {
            stars,
            plus: x & !stars,
        }
    }
}

pub(crate) fn low_mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// Scatter the low bits of `c` onto the set bits of `mask`.
pub(crate) fn deposit(mut c: u64, mut mask: u64) -> u64 {
    let mut out = 0;
    while mask != 0 {
        let low = mask & mask.wrapping_neg();
        if c & 1 == 1 {
            out |= low;
        }
        c >>= 1;
        mask &= mask - 1;
    }
    out
}

/// Gather the bits of `x` at the set bits of `mask` into the low bits.
pub(crate) fn extract(x: u64, mut mask: u64) -> u64 {
    let mut out = 0;
    let mut t = 0;
    while mask != 0 {
        let i = mask.trailing_zeros();
        out |= (x >> i & 1) << t;
        t += 1;
        mask &= mask - 1;
    }
    out
}

/// The conditional law on a subcube's stars: a joint block on `joint`
/// (weights held in the oracle's scratch buffer) and independent coins on
/// the remaining stars (product biases when `independent`, else fair).
struct Law {
    joint: u64,
    joint_total: f64,
    independent: bool,
}

/// Query-counting access to a hidden distribution through subcube
/// conditioning only.
pub struct CondOracle {
    hidden: DistributionSpec,
    queries: u64,
    policy: ZeroMassPolicy,
    rng: ChaCha8Rng,
    cumulative: Option<Vec<f64>>,
    weights: Vec<f64>,
    counts: Vec<u64>,
    marginals: Vec<f64>,
    junta_vars: u64,
    binomial_cache: Option<(u64, u64, Binomial)>,
}

impl CondOracle {
    pub fn new(hidden: DistributionSpec, policy: ZeroMassPolicy, rng: ChaCha8Rng) -> Result<Self> {
        if hidden.n() > ORACLE_DIM_CAP {
            return Err(JuntaError::DimensionCap {
                n: hidden.n(),
                cap: ORACLE_DIM_CAP,
            });
        }
        let junta_vars = match &hidden {
            DistributionSpec::Junta(j) => j.vars().iter().fold(0, |m, &i| m | 1 << i),
            _ => 0,
        };
        Ok(Self {
            hidden,
            queries: 0,
            policy,
            rng,
            cumulative: None,
            weights: Vec::new(),
            counts: Vec::new(),
            marginals: Vec::new(),
            junta_vars,
            binomial_cache: None,
        })
    }

    pub fn n(&self) -> usize {
        self.hidden.n()
    }

    pub fn queries(&self) -> u64 {
        self.queries
    }

    pub fn policy(&self) -> ZeroMassPolicy {
        self.policy
    }

    /// One draw from p_|ρ, completed with ρ's fixed coordinates. One query.
    pub fn conditional_sample(&mut self, rho: &Restriction) -> Result<Sample> {
        self.check(rho)?;
        let x = self.draw(Cube::from_restriction(rho))?;
        Ok(Sample::from_index(self.n(), x))
    }

    /// One unconditioned draw. One query.
    pub fn sample(&mut self) -> Result<Sample> {
        let x = self.draw(Cube::full(self.n()))?;
        Ok(Sample::from_index(self.n(), x))
    }

    /// Coordinate sums of `count` independent draws from p_|ρ (fixed
    /// coordinates contribute ±count). Charges `count` queries.
    pub fn conditional_sums(&mut self, rho: &Restriction, count: u64) -> Result<Vec<i64>> {
        self.check(rho)?;
        let mut sums = vec![0; self.n()];
        self.sums(Cube::from_restriction(rho), count, &mut sums)?;
        Ok(sums)
    }

    /// Histogram over the 2^m points of the subcube (bit t of the cell index
    /// is star t, in increasing coordinate order, set to +1) of `count`
    /// independent draws from p_|ρ. Charges `count` queries.
    pub fn conditional_histogram(&mut self, rho: &Restriction, count: u64) -> Result<Vec<u64>> {
        self.check(rho)?;
        self.histogram(Cube::from_restriction(rho), count)
    }

    /// One draw from the subcube, as a plus-mask. One query.
    pub fn draw(&mut self, cube: Cube) -> Result<u64> {
        self.queries += 1;
        if cube.stars == low_mask(self.n()) {
            if let Some(x) = self.unconditioned_fast() {
                return Ok(x);
            }
        }
        let law = self.law(cube)?;
        let mut x = cube.plus;
        if law.joint != 0 {
            let cell = draw_cell(&mut self.rng, &self.weights, law.joint_total);
            x |= deposit(cell as u64, law.joint);
        }
        x |= self.coin_bits(&law, cube.stars);
        Ok(x)
    }

    /// Coordinate sums of `count` draws into `sums` (length n). Charges
    /// `count` queries.
    pub fn sums(&mut self, cube: Cube, count: u64, sums: &mut [i64]) -> Result<()> {
        let law = self.law(cube)?;
        let n = self.n();
        let c = count as i64;
        for (i, s) in sums.iter_mut().enumerate().take(n) {
            *s = if cube.plus >> i & 1 == 1 { c } else { -c };
        }
        if law.joint != 0 && self.joint_factorizes(law.joint_total) {
            let mut bits = law.joint;
            for t in 0..self.marginals.len() {
                let i = bits.trailing_zeros() as usize;
                let p = self.marginals[t];
                sums[i] = 2 * self.binomial(count, p) as i64 - c;
                bits &= bits - 1;
            }
        } else if law.joint != 0 {
            multinomial_into(&mut self.rng, count, &self.weights, law.joint_total, &mut self.counts);
            let mut bits = law.joint;
            let mut t = 0;
            while bits != 0 {
                let i = bits.trailing_zeros() as usize;
                let plus: u64 = self
                    .counts
                    .iter()
                    .enumerate()
                    .filter(|&(cell, _)| cell >> t & 1 == 1)
                    .map(|(_, &h)| h)
                    .sum();
                sums[i] = 2 * plus as i64 - c;
                bits &= bits - 1;
                t += 1;
            }
        }
        let mut coins = cube.stars & !law.joint;
        while coins != 0 {
            let i = coins.trailing_zeros() as usize;
            let p = self.coin_bias(&law, i);
            sums[i] = 2 * self.binomial(count, p) as i64 - c;
            coins &= coins - 1;
        }
        self.queries += count;
        Ok(())
    }

    /// Histogram over the subcube's cells (see `conditional_histogram`).
    pub fn histogram(&mut self, cube: Cube, count: u64) -> Result<Vec<u64>> {
        let m = cube.stars.count_ones() as usize;
        if m > HISTOGRAM_DIM_CAP {
            return Err(JuntaError::DimensionCap {
                n: m,
                cap: HISTOGRAM_DIM_CAP,
            });
        }
        let law = self.law(cube)?;
        let joint_local = extract(law.joint, cube.stars);
        let coin_slots: Vec<(u64, f64)> = (0..m)
            .filter(|&t| joint_local >> t & 1 == 0)
            .map(|t| {
                let i = deposit(1 << t, cube.stars).trailing_zeros() as usize;
                (t as u64, self.coin_bias(&law, i))
            })
            .collect();
        let cell_weights: Vec<f64> = (0..1u64 << m)
            .map(|cell| {
                let w = if law.joint == 0 {
                    1.0
                } else {
                    self.weights[extract(cell, joint_local) as usize] / law.joint_total
                };
                coin_slots.iter().fold(w, |acc, &(t, p)| {
                    acc * if cell >> t & 1 == 1 { p } else { 1.0 - p }
                })
            })
            .collect();
        let total = cell_weights.iter().sum();
        let mut hist = Vec::new();
        multinomial_into(&mut self.rng, count, &cell_weights, total, &mut hist);
        self.queries += count;
        Ok(hist)
    }

    fn check(&self, rho: &Restriction) -> Result<()> {
        if rho.n() != self.n() {
            return Err(JuntaError::DimensionMismatch {
                expected: self.n(),
                found: rho.n(),
            });
        }
        Ok(())
    }

    /// Binomial draw reusing the previous setup when (count, p) repeats.
    fn binomial(&mut self, count: u64, p: f64) -> u64 {
        if count == 0 || p <= 0.0 {
            return 0;
        }
        if p >= 1.0 {
            return count;
        }
        let key = p.to_bits();
        match &self.binomial_cache {
            Some((c, k, d)) if *c == count && *k == key => d.sample(&mut self.rng),
            _ => {
                let d = Binomial::new(count, p).expect("valid binomial");
                let x = d.sample(&mut self.rng);
                self.binomial_cache = Some((count, key, d));
                x
            }
        }
    }

    /// Whether the joint weights are a product of their bit marginals (to
    /// 1e-13 of the total mass per cell); fills `self.marginals`.
    fn joint_factorizes(&mut self, total: f64) -> bool {
        let len = self.weights.len();
        let m = len.trailing_zeros() as usize;
        self.marginals.clear();
        for t in 0..m {
            let plus: f64 = self
                .weights
                .iter()
                .enumerate()
                .filter(|&(cell, _)| cell >> t & 1 == 1)
                .map(|(_, &w)| w)
                .sum();
            self.marginals.push(plus / total);
        }
        let tol = 1e-13 * total;
        self.weights.iter().enumerate().all(|(cell, &w)| {
            let prod = self.marginals.iter().enumerate().fold(total, |acc, (t, &q)| {
                acc * if cell >> t & 1 == 1 { q } else { 1.0 - q }
            });
            (w - prod).abs() <= tol
        })
    }

    fn coin_bias(&self, law: &Law, i: usize) -> f64 {
        match &self.hidden {
            DistributionSpec::Product(p) if law.independent => p.bias()[i],
            _ => 0.5,
        }
    }

    fn coin_bits(&mut self, law: &Law, stars: u64) -> u64 {
        let mut out = 0;
        let mut coins = stars & !law.joint;
        while coins != 0 {
            let i = coins.trailing_zeros() as usize;
            let p = self.coin_bias(law, i);
            if self.rng.random::<f64>() < p {
                out |= 1 << i;
            }
            coins &= coins - 1;
        }
        out
    }

    /// Fast path for all-star queries on an explicit pmf: binary search in a
    /// cached cumulative table.
    fn unconditioned_fast(&mut self) -> Option<u64> {
        let DistributionSpec::Explicit(p) = &self.hidden else {
            return None;
        };
        let cum = self.cumulative.get_or_insert_with(|| {
            p.pmf()
                .iter()
                .scan(0.0, |acc, &v| {
                    *acc += v;
                    Some(*acc)
                })
                .collect()
        });
        let total = *cum.last().expect("nonempty pmf");
        let u = self.rng.random::<f64>() * total;
        let mut idx = cum.partition_point(|&c| c <= u).min(cum.len() - 1);
        while p.pmf()[idx] == 0.0 && idx > 0 {
            idx -= 1;
        }
        Some(idx as u64)
    }

    /// Build the conditional law of `cube`, leaving joint weights in
    /// `self.weights`.
    fn law(&mut self, cube: Cube) -> Result<Law> {
        let positive = match &self.hidden {
            DistributionSpec::Explicit(p) => {
                let total = fill_weights(p, cube, &mut self.weights);
                (total > 0.0).then_some(Law {
                    joint: cube.stars,
                    joint_total: total,
                    independent: false,
                })
            }
            DistributionSpec::Product(p) => {
                let ok = (0..p.n()).all(|i| {
                    if cube.stars >> i & 1 == 1 {
                        true
                    } else if cube.plus >> i & 1 == 1 {
                        p.bias()[i] > 0.0
                    } else {
                        p.bias()[i] < 1.0
                    }
                });
                ok.then_some(Law {
                    joint: 0,
                    joint_total: 0.0,
                    independent: true,
                })
            }
            DistributionSpec::Junta(j) => {
                let vars = self.junta_vars;
                let local = Cube {
                    stars: extract(cube.stars, vars),
                    plus: extract(cube.plus, vars),
                };
                let total = fill_weights(j.inner(), local, &mut self.weights);
                (total > 0.0).then_some(Law {
                    joint: cube.stars & vars,
                    joint_total: total,
                    independent: false,
                })
            }
        };
        match (positive, self.policy) {
            (Some(law), _) => Ok(law),
            (None, ZeroMassPolicy::Error) => Err(JuntaError::ZeroMass),
            (None, ZeroMassPolicy::UniformFallback) => Ok(Law {
                joint: 0,
                joint_total: 0.0,
                independent: false,
            }),
        }
    }
}

/// Masses of the subcube's points in cell order; returns their total.
fn fill_weights(p: &ExplicitPmf, cube: Cube, out: &mut Vec<f64>) -> f64 {
    let pmf = p.pmf();
    out.clear();
    out.resize(1 << cube.stars.count_ones(), 0.0);
    let mut s = 0u64;
    let mut total = 0.0;
    for slot in out.iter_mut() {
        let w = pmf[(cube.plus | s) as usize];
        *slot = w;
        total += w;
        s = (s | !cube.stars).wrapping_add(1) & cube.stars;
    }
    total
}

fn draw_cell(rng: &mut impl Rng, weights: &[f64], total: f64) -> usize {
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            acc += w;
            last = i;
            if u < acc {
                return i;
            }
        }
    }
    last
}

pub(crate) fn binomial(rng: &mut impl Rng, count: u64, p: f64) -> u64 {
    if count == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return count;
    }
    Binomial::new(count, p).expect("valid binomial").sample(rng)
}

/// Multinomial counts by sequential conditional binomials.
pub(crate) fn multinomial_into(
    rng: &mut impl Rng,
    count: u64,
    weights: &[f64],
    total: f64,
    out: &mut Vec<u64>,
) {
    out.clear();
    out.resize(weights.len(), 0);
    let mut remaining = count;
    let mut mass_left = total;
    let last_positive = weights.iter().rposition(|&w| w > 0.0);
    for (i, &w) in weights.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if w <= 0.0 {
            continue;
        }
        if Some(i) == last_positive {
            out[i] = remaining;
            break;
        }
        let k = binomial(rng, remaining, (w / mass_left).min(1.0));
        out[i] = k;
        remaining -= k;
        mass_left -= w;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{JuntaDist, ProductDist};
    use crate::rng::stream;

    fn parity2() -> DistributionSpec {
        ExplicitPmf::new(2, vec![0.375, 0.125, 0.125, 0.375]).unwrap().into()
    }

    fn oracle(p: DistributionSpec, policy: ZeroMassPolicy, seed: u64) -> CondOracle {
        CondOracle::new(p, policy, stream(seed, 0)).unwrap()
    }

    #[test]
    fn conditional_on_first_coordinate() {
        let mut o = oracle(parity2(), ZeroMassPolicy::Error, 1);
        let rho: Restriction = "+*".parse().unwrap();
        let draws = 40_000;
        let plus = (0..draws)
            .filter(|_| {
                let x = o.conditional_sample(&rho).unwrap();
                assert_eq!(x.bits()[0], 1);
                x.bits()[1] == 1
            })
            .count();
        let f = plus as f64 / draws as f64;
        assert!((f - 0.75).abs() < 0.01, "{f}");
        assert_eq!(o.queries(), draws);
    }

    #[test]
    fn point_mass_always_returns_its_point() {
        let pm = ExplicitPmf::point_mass(3, 7).unwrap();
        let mut o = oracle(pm.into(), ZeroMassPolicy::Error, 2);
        for rho in ["***", "+**", "+*+", "+++"] {
            let x = o.conditional_sample(&rho.parse().unwrap()).unwrap();
            assert_eq!(x.bits(), &[1, 1, 1]);
        }
    }

    #[test]
    fn zero_mass_policies() {
        let pm = ExplicitPmf::point_mass(2, 3).unwrap();
        let rho: Restriction = "-*".parse().unwrap();
        let mut strict = oracle(pm.clone().into(), ZeroMassPolicy::Error, 3);
        assert!(matches!(strict.conditional_sample(&rho), Err(JuntaError::ZeroMass)));
        assert!(matches!(strict.conditional_sums(&rho, 5), Err(JuntaError::ZeroMass)));
        assert!(matches!(
            strict.conditional_sample(&"--".parse().unwrap()),
            Err(JuntaError::ZeroMass)
        ));
        let mut lax = oracle(pm.into(), ZeroMassPolicy::UniformFallback, 3);
        let x = lax.conditional_sample(&rho).unwrap();
        assert_eq!(x.bits()[0], -1);
    }

    #[test]
    fn sums_match_law_for_all_representations() {
        let inner = ExplicitPmf::new(2, vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let specs: Vec<DistributionSpec> = vec![
            parity2(),
            ProductDist::new(vec![0.2, 0.9, 0.5]).unwrap().into(),
            JuntaDist::new(4, vec![0, 2], inner).unwrap().into(),
        ];
        for spec in specs {
            let n = spec.n();
            let rho = Restriction::all_star(n);
            let mu = spec.mean_vector();
            let mut o = oracle(spec, ZeroMassPolicy::Error, 4);
            let count = 200_000u64;
            let sums = o.conditional_sums(&rho, count).unwrap();
            for (s, m) in sums.iter().zip(&mu.0) {
                assert!((*s as f64 / count as f64 - m).abs() < 0.01);
            }
            assert_eq!(o.queries(), count);
        }
    }

    #[test]
    fn histogram_matches_restricted_pmf() {
        let inner = ExplicitPmf::new(2, vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let spec: DistributionSpec = JuntaDist::new(4, vec![0, 2], inner).unwrap().into();
        for rho in ["*+**", "**-*", "****"] {
            let rho: Restriction = rho.parse().unwrap();
            let exact = spec.to_explicit().unwrap().restrict(&rho).unwrap();
            let mut o = oracle(spec.clone(), ZeroMassPolicy::Error, 5);
            let count = 400_000u64;
            let hist = o.conditional_histogram(&rho, count).unwrap();
            for (h, p) in hist.iter().zip(exact.pmf()) {
                assert!((*h as f64 / count as f64 - p).abs() < 0.005);
            }
            assert_eq!(hist.iter().sum::<u64>(), count);
        }
    }

    #[test]
    fn junta_single_draws_follow_restricted_law() {
        let inner = ExplicitPmf::new(2, vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let spec: DistributionSpec = JuntaDist::new(3, vec![0, 2], inner).unwrap().into();
        let rho: Restriction = "*-*".parse().unwrap();
        let exact = spec.to_explicit().unwrap().restrict(&rho).unwrap();
        let mut o = oracle(spec, ZeroMassPolicy::Error, 6);
        let mut counts = [0u32; 4];
        let draws = 100_000;
        for _ in 0..draws {
            let x = o.conditional_sample(&rho).unwrap();
            assert_eq!(x.bits()[1], -1);
            let cell = usize::from(x.bits()[0] == 1) | usize::from(x.bits()[2] == 1) << 1;
            counts[cell] += 1;
        }
        for (c, p) in counts.iter().zip(exact.pmf()) {
            assert!((*c as f64 / draws as f64 - p).abs() < 0.006);
        }
    }

    #[test]
    fn multinomial_conserves_count() {
        let mut rng = stream(7, 0);
        let w = [0.0, 0.3, 0.0, 0.7, 0.0];
        let mut h = vec![];
        for count in [0, 1, 17, 1_000_000] {
            multinomial_into(&mut rng, count, &w, 1.0, &mut h);
            assert_eq!(h.iter().sum::<u64>(), count);
            assert_eq!(h[0] + h[2] + h[4], 0);
        }
    }

    #[test]
    fn bit_gather_scatter() {
        assert_eq!(deposit(0b101, 0b1011_0000), 0b1001_0000);
        assert_eq!(extract(0b1001_0000, 0b1011_0000), 0b101);
        let c = Cube::from_restriction(&"*+-*".parse().unwrap());
        assert_eq!(c, Cube { stars: 0b1001, plus: 0b0010 });
        assert_eq!(c.to_restriction(4).to_string(), "*+-*");
    }

    #[test]
    fn rejects_large_dimension() {
        assert!(CondOracle::new(DistributionSpec::uniform(65), ZeroMassPolicy::Error, stream(0, 0)).is_err());
    }
}
