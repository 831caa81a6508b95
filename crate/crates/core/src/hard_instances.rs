//! Lower-bound instances: the moment-matching product ensembles D_yes and
//! D_no, the parity instances p_S and the truth-table instances p_y.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::Serialize;

use crate::dist::{ExplicitPmf, MeanVector, ProductDist, EXACT_DIM_CAP};
use crate::error::{invalid, JuntaError, Result};
use crate::exact::{c2_star, product_tv_bound};

/// Largest ℓ for which the gadget is computed in exact rationals.
pub const EXACT_GADGET_CAP: usize = 12;

/// ℓ = ⌈log₂ n / log₂ log₂ n⌉, at least 1.
pub fn gadget_ell(n: usize) -> usize {
    let log = (n as f64).log2();
    let loglog = log.log2();
    if loglog <= 0.0 {
        return 1;
    }
    ((log / loglog).ceil() as usize).max(1)
}

fn node(j: usize) -> i64 {
    (j as i64).pow(3)
}

/// z_i = Π_{j≠i} α_j/(α_j − α_i) over α_j = j³, exactly.
pub fn lagrange_weights_exact(ell: usize) -> Vec<BigRational> {
    (1..=ell)
        .map(|i| {
            (1..=ell).filter(|&j| j != i).fold(BigRational::one(), |acc, j| {
                acc * BigRational::new(BigInt::from(node(j)), BigInt::from(node(j) - node(i)))
            })
        })
        .collect()
}

/// The same weights in double precision.
pub fn lagrange_weights_f64(ell: usize) -> Vec<f64> {
    (1..=ell)
        .map(|i| {
            (1..=ell)
                .filter(|&j| j != i)
                .map(|j| node(j) as f64 / (node(j) - node(i)) as f64)
                .product()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct MomentGadget {
    pub n: usize,
    pub eps: f64,
    pub ell: usize,
    pub alpha: Vec<f64>,
    pub z: Vec<f64>,
    #[serde(skip)]
    pub z_exact: Option<Vec<BigRational>>,
    /// 1-based j with z_j ≥ 0.
    pub w: Vec<usize>,
    /// 1-based j with z_j < 0.
    pub v: Vec<usize>,
    pub z_l1: f64,
    pub tau: f64,
}

/// Largest eps the construction admits: c₂*/9.
pub fn max_gadget_eps() -> f64 {
    c2_star() / 9.0
}

pub fn build_gadget(n: usize, eps: f64) -> Result<MomentGadget> {
    if n < 4 {
        return invalid("the gadget needs n ≥ 4");
    }
    if !(eps > 0.0 && eps <= max_gadget_eps()) {
        return invalid(format!("eps {eps} outside (0, (1 − 1/e)/9]"));
    }
    Ok(gadget_with_ell(n, eps, gadget_ell(n)))
}

/// The gadget at an explicit ℓ (n and eps only enter τ).
pub fn gadget_with_ell(n: usize, eps: f64, ell: usize) -> MomentGadget {
    let z_exact = (ell <= EXACT_GADGET_CAP).then(|| lagrange_weights_exact(ell));
    let z: Vec<f64> = match &z_exact {
        Some(zs) => zs.iter().map(|v| v.to_f64().unwrap_or(f64::NAN)).collect(),
        None => lagrange_weights_f64(ell),
    };
    let w: Vec<usize> = (1..=ell).filter(|&j| z[j - 1] >= 0.0).collect();
    let v: Vec<usize> = (1..=ell).filter(|&j| z[j - 1] < 0.0).collect();
    let z_l1 = z.iter().map(|v| v.abs()).sum::<f64>();
    let tau = (36.0 * z_l1.sqrt() * eps).min((n as f64).sqrt() / (2.0 * (ell as f64).powi(3)));
    MomentGadget {
        n,
        eps,
        ell,
        alpha: (1..=ell).map(|j| node(j) as f64).collect(),
        z,
        z_exact,
        w,
        v,
        z_l1,
        tau,
    }
}

/// Law of a coordinate level: (value, probability) pairs, value 0 first.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelLaw(pub Vec<(f64, f64)>);

impl LevelLaw {
    pub fn prob_zero(&self) -> f64 {
        self.0[0].1
    }

    pub fn moment(&self, k: u32) -> f64 {
        self.0.iter().map(|(v, p)| v.powi(k as i32) * p).sum()
    }

    fn sample(&self, rng: &mut impl Rng) -> f64 {
        let idx = WeightedIndex::new(self.0.iter().map(|p| p.1)).expect("level law has positive mass");
        self.0[idx.sample(rng)].0
    }
}

impl MomentGadget {
    fn level_law(&self, set: &[usize], sign: f64) -> LevelLaw {
        let mut law = vec![(0.0, 0.0)];
        let mut rest = 0.0;
        for &j in set {
            let p = sign * self.z[j - 1] / self.z_l1;
            rest += p;
            law.push((self.alpha[j - 1], p));
        }
        law[0].1 = 1.0 - rest;
        LevelLaw(law)
    }

    /// γ: 0 or α_j (j ∈ W) with probability z_j/‖z‖₁.
    pub fn gamma_law(&self) -> LevelLaw {
        self.level_law(&self.w, 1.0)
    }

    /// δ: 0 or α_j (j ∈ V) with probability −z_j/‖z‖₁.
    pub fn delta_law(&self) -> LevelLaw {
        self.level_law(&self.v, -1.0)
    }

    /// Pr[x_i = 1] for a coordinate at the given level.
    pub fn bias(&self, level: f64) -> f64 {
        0.5 + level * self.tau / (self.n as f64).sqrt()
    }

    /// E[δ^k] − E[γ^k] = −Σ_j z_j α_j^k/‖z‖₁ and E[γ^k], exact when the
    /// rational weights are available.
    fn moment_pair(&self, k: u32) -> (f64, f64) {
        if let Some(zs) = &self.z_exact {
            let l1: BigRational = zs.iter().map(|v| v.abs()).fold(BigRational::zero(), |a, b| a + b);
            let pow = |j: usize| BigRational::from_integer(BigInt::from(node(j)).pow(k));
            let mut gamma = BigRational::zero();
            let mut diff = BigRational::zero();
            for (i, zj) in zs.iter().enumerate() {
                let term = zj * pow(i + 1);
                if !zj.is_negative() {
                    gamma += &term;
                }
                diff -= term;
            }
            let f = |v: BigRational| (v / &l1).to_f64().unwrap_or(f64::NAN);
            (f(diff), f(gamma))
        } else {
            let (d, g) = (self.delta_law().moment(k), self.gamma_law().moment(k));
            (d - g, g)
        }
    }

    /// |E[δ^k] − E[γ^k]|/max(1, E[γ^k]).
    pub fn moment_discrepancy(&self, k: u32) -> f64 {
        let (diff, gamma) = self.moment_pair(k);
        diff.abs() / gamma.max(1.0)
    }
}

/// Largest moment discrepancy over k = 1..=k_max.
pub fn moment_check(g: &MomentGadget, k_max: u32) -> Result<f64> {
    if k_max as usize >= g.ell {
        return invalid(format!("kMax {k_max} exceeds ℓ − 1 = {}", g.ell - 1));
    }
    Ok((1..=k_max).map(|k| g.moment_discrepancy(k)).fold(0.0, f64::max))
}

/// A product instance with the levels that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct GadgetDraw {
    pub levels: Vec<f64>,
    pub dist: ProductDist,
}

impl GadgetDraw {
    pub fn nonzero_levels(&self) -> usize {
        self.levels.iter().filter(|&&l| l != 0.0).count()
    }
}

fn draw(g: &MomentGadget, law: &LevelLaw, rng: &mut impl Rng) -> Result<GadgetDraw> {
    let levels: Vec<f64> = (0..g.n).map(|_| law.sample(rng)).collect();
    let bias = levels
        .iter()
        .map(|&l| {
            let b = g.bias(l);
            if b > 1.0 + 1e-12 {
                Err(JuntaError::InvalidParameter(format!("bias {b} exceeds 1")))
            } else {
                Ok(b.min(1.0))
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(GadgetDraw {
        levels,
        dist: ProductDist::new(bias)?,
    })
}

pub fn sample_dno(g: &MomentGadget, rng: &mut impl Rng) -> Result<GadgetDraw> {
    draw(g, &g.gamma_law(), rng)
}

pub fn sample_dyes(g: &MomentGadget, rng: &mut impl Rng) -> Result<GadgetDraw> {
    draw(g, &g.delta_law(), rng)
}

/// Lower bound on the distance of a product distribution to (n/2)-juntas:
/// drop the ⌊n/2⌋ coordinates of largest |μ_i| and apply the product TV
/// bound to the rest.
pub fn farness_certificate(p: &ProductDist, c1_star: f64) -> f64 {
    let mut mu = p.mean_vector().0;
    mu.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
    mu.truncate(mu.len() - mu.len() / 2);
    product_tv_bound(&MeanVector(mu), c1_star)
}

/// p_S: mass (1 ± 4ε)2^{-n} according to the parity of S (0-based).
pub fn parity_instance(n: usize, s: &[usize], eps: f64) -> Result<ExplicitPmf> {
    if s.is_empty() || s.iter().any(|&i| i >= n) {
        return invalid("S must be a nonempty subset of the coordinates");
    }
    if !(eps > 0.0 && eps <= 0.125) {
        return invalid(format!("eps {eps} outside (0, 1/8]"));
    }
    if n > EXACT_DIM_CAP {
        return Err(JuntaError::DimensionCap { n, cap: EXACT_DIM_CAP });
    }
    let mask = s.iter().fold(0u64, |m, &i| m | 1 << i);
    let unit = 0.5f64.powi(n as i32);
    // Π x_i = 1 iff an even number of S-coordinates are −1
    let pmf = (0..1u64 << n)
        .map(|x| {
            let minus = (!x & mask).count_ones();
            unit * if minus % 2 == 0 { 1.0 + 4.0 * eps } else { 1.0 - 4.0 * eps }
        })
        .collect();
    ExplicitPmf::new(n, pmf)
}

/// p_y from a ±1 truth table f over the first k coordinates.
pub fn pmf_instance_from_boolean(truth_table: &[i8], n: usize, eps: f64) -> Result<ExplicitPmf> {
    let size = truth_table.len();
    if !size.is_power_of_two() || truth_table.iter().any(|&v| v != 1 && v != -1) {
        return invalid("truth table must have 2^k entries in {-1, 1}");
    }
    let k = size.trailing_zeros() as usize;
    if k > n {
        return invalid(format!("truth table over {k} variables exceeds n = {n}"));
    }
    if n > EXACT_DIM_CAP {
        return Err(JuntaError::DimensionCap { n, cap: EXACT_DIM_CAP });
    }
    if !(eps > 0.0 && eps <= 1.0 / 120.0) {
        return invalid(format!("eps {eps} outside (0, 1/120]"));
    }
    let ones = truth_table.iter().filter(|&&v| v == 1).count();
    let (sz, i) = (size as f64, ones as f64);
    if ones == 0 || ones == size || 3.0 * i < sz || 3.0 * i > 2.0 * sz {
        return invalid(format!("truth table is not good: I = {ones} of {size}"));
    }
    let unit = 0.5f64.powi(n as i32);
    let on = unit * (1.0 + 40.0 * eps * sz / i);
    let off = unit * (1.0 - 40.0 * eps * sz / (sz - i));
    let low = (1u64 << k) - 1;
    let pmf = (0..1u64 << n)
        .map(|x| if truth_table[(x & low) as usize] == 1 { on } else { off })
        .collect();
    ExplicitPmf::new(n, pmf)
}
