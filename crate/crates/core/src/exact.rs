//! Brute-force ground truth on small cubes: distances to juntas, the
//! structural-lemma audit, the product-distribution TV bound and the
//! restriction-monotonicity check.

use serde::Serialize;

use crate::config::AlgoConfig;
use crate::dist::{ExplicitPmf, ProductDist, MeanVector};
use crate::error::{invalid, JuntaError, Result};

pub const JUNTA_DISTANCE_DIM_CAP: usize = 12;
pub const K_JUNTA_DIM_CAP: usize = 10;
pub const K_JUNTA_K_CAP: usize = 4;
pub const AUDIT_DIM_CAP: usize = 6;
pub const PRODUCT_TV_DIM_CAP: usize = 20;

/// c₂* = 1 − e^{-1}.
pub fn c2_star() -> f64 {
    1.0 - (-1.0f64).exp()
}

fn check_cap(n: usize, cap: usize) -> Result<()> {
    if n > cap {
        return Err(JuntaError::DimensionCap { n, cap });
    }
    Ok(())
}

fn var_mask(n: usize, vars: &[usize]) -> Result<u64> {
    vars.iter().try_fold(0u64, |m, &i| {
        if i >= n {
            invalid(format!("variable {i} out of range for n = {n}"))
        } else {
            Ok(m | 1 << i)
        }
    })
}

/// Cells (as index lists) of each block y ∈ {-1,1}^J.
fn blocks(n: usize, j_mask: u64) -> Vec<Vec<usize>> {
    let free = ((1u64 << n) - 1) & !j_mask;
    let mut out = vec![vec![]; 1 << j_mask.count_ones()];
    for x in 0..1u64 << n {
        out[crate::oracle::extract(x, j_mask) as usize].push(x as usize);
    }
    debug_assert!(out.iter().all(|b| b.len() == 1 << free.count_ones()));
    out
}

/// min over juntas g(x) = w(x_J) of dtv(p, g).
///
/// Each block objective Σ_z |p(y,z) − w(y)| is convex piecewise linear in
/// w(y) with slope 2k − B between its k-th and (k+1)-th sorted values (B the
/// block size). Starting from w = 0 (objective 1), the mass budget 1/B is
/// spent greedily on the cheapest slopes across all blocks.
pub fn closest_junta_distance(p: &ExplicitPmf, j: &[usize]) -> Result<f64> {
    let n = p.n();
    check_cap(n, JUNTA_DISTANCE_DIM_CAP)?;
    let j_mask = var_mask(n, j)?;
    let block_size = 1usize << (n - j_mask.count_ones() as usize);
    let b = block_size as i64;
    let pmf = p.pmf();
    // (slope, length) segments; the last one per block is unbounded
    let mut segments: Vec<(i64, f64)> = vec![];
    for cells in blocks(n, j_mask) {
        let mut vals: Vec<f64> = cells.iter().map(|&c| pmf[c]).collect();
        vals.sort_by(f64::total_cmp);
        let mut prev = 0.0;
        for (k, v) in vals.iter().enumerate() {
            segments.push((2 * k as i64 - b, v - prev));
            prev = *v;
        }
        segments.push((b, f64::INFINITY));
    }
    segments.sort_by_key(|s| s.0);
    let mut budget = 1.0 / block_size as f64;
    let mut objective = 1.0;
    for (slope, len) in segments {
        if budget <= 0.0 {
            break;
        }
        let take = len.min(budget);
        objective += slope as f64 * take;
        budget -= take;
    }
    Ok((objective / 2.0).max(0.0))
}

/// Iterator over all k-subsets of 0..n as sorted index vectors.
pub fn subsets_of_size(n: usize, k: usize) -> impl Iterator<Item = Vec<usize>> {
    (0..1u64 << n)
        .filter(move |m| m.count_ones() as usize == k)
        .map(move |m| (0..n).filter(|&i| m >> i & 1 == 1).collect())
}

/// min over |J| = k of the closest junta distance over J, with the minimizer.
pub fn distance_to_k_junta(p: &ExplicitPmf, k: usize) -> Result<(f64, Vec<usize>)> {
    let n = p.n();
    check_cap(n, K_JUNTA_DIM_CAP)?;
    if k > K_JUNTA_K_CAP && k < n {
        return invalid(format!("k = {k} exceeds the cap {K_JUNTA_K_CAP}"));
    }
    let mut best = (f64::INFINITY, vec![]);
    for j in subsets_of_size(n, k.min(n)) {
        let d = closest_junta_distance(p, &j)?;
        if d < best.0 {
            best = (d, j);
        }
    }
    Ok(best)
}

/// dtv(p, q) with q the junta on J whose J-marginal is p_J.
pub fn canonical_junta_distance(p: &ExplicitPmf, j: &[usize]) -> Result<f64> {
    let n = p.n();
    check_cap(n, JUNTA_DISTANCE_DIM_CAP)?;
    let j_mask = var_mask(n, j)?;
    let scale = 1.0 / (1u64 << (n - j_mask.count_ones() as usize)) as f64;
    let pmf = p.pmf();
    let mut marginal = vec![0.0; 1 << j_mask.count_ones()];
    for (x, &v) in pmf.iter().enumerate() {
        marginal[crate::oracle::extract(x as u64, j_mask) as usize] += v;
    }
    let gap: f64 = pmf
        .iter()
        .enumerate()
        .map(|(x, &v)| (v - marginal[crate::oracle::extract(x as u64, j_mask) as usize] * scale).abs())
        .sum();
    Ok(gap / 2.0)
}

/// E_{ρ∼D_J̄(p)}[dtv(p_|ρ, U)], the same quantity as a mixture over the
/// fixed values of J.
pub fn canonical_junta_distance_by_restrictions(p: &ExplicitPmf, j: &[usize]) -> Result<f64> {
    let n = p.n();
    check_cap(n, JUNTA_DISTANCE_DIM_CAP)?;
    let j_mask = var_mask(n, j)?;
    let pmf = p.pmf();
    let mut total = 0.0;
    for cells in blocks(n, j_mask) {
        let mass: f64 = cells.iter().map(|&c| pmf[c]).sum();
        if mass == 0.0 {
            continue;
        }
        let u = 1.0 / cells.len() as f64;
        let tv: f64 = cells.iter().map(|&c| (pmf[c] / mass - u).abs()).sum::<f64>() / 2.0;
        total += mass * tv;
    }
    Ok(total)
}

/// Σ_{S ⊆ free} σ^{|S|}(1−σ)^{|free|−|S|} Σ_c Pr[c]·‖μ(p | c)‖₂, where c
/// ranges over assignments to the complement of S: the expected mean norm of
/// p restricted to the free coordinates and then by D_σ.
fn expected_restricted_norm(p: &ExplicitPmf, free: u64, sigma: f64) -> f64 {
    let n = p.n();
    let full = (1u64 << n) - 1;
    let m = free.count_ones() as i32;
    let pmf = p.pmf();
    let mut total = 0.0;
    let mut s = 0u64;
    loop {
        let size = s.count_ones() as i32;
        let weight = sigma.powi(size) * (1.0 - sigma).powi(m - size);
        if weight > 0.0 && s != 0 {
            let fixed = full & !s;
            let mut mass = vec![0.0; 1 << fixed.count_ones()];
            let mut sums = vec![vec![0.0; size as usize]; 1 << fixed.count_ones()];
            for (x, &v) in pmf.iter().enumerate() {
                let c = crate::oracle::extract(x as u64, fixed) as usize;
                mass[c] += v;
                let local = crate::oracle::extract(x as u64, s);
                for (t, acc) in sums[c].iter_mut().enumerate() {
                    *acc += if local >> t & 1 == 1 { v } else { -v };
                }
            }
            let inner: f64 = mass
                .iter()
                .zip(&sums)
                .filter(|(&w, _)| w > 0.0)
                .map(|(&w, mu)| w * mu.iter().map(|v| (v / w).powi(2)).sum::<f64>().sqrt())
                .sum();
            total += weight * inner;
        }
        if s == free {
            break;
        }
        s = (s | !free).wrapping_add(1) & free;
    }
    total
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct AuditReport {
    pub n: usize,
    pub j: Vec<usize>,
    pub lhs: f64,
    /// Term for each j = 1..⌈log₂ 2n⌉.
    pub rhs_terms: Vec<f64>,
    pub rhs_sum: f64,
    /// c with rhsSum = lhs/(log₂(n/lhs))^c.
    pub implied_exponent: Option<f64>,
    /// lhs/(log₂(n/lhs))^c at the configured c.
    pub predicted_rhs: Option<f64>,
}

/// Exact LHS and RHS of the structural lemma for J, with σ = 1/2.
pub fn structural_audit(p: &ExplicitPmf, j: &[usize], c_exponent: f64) -> Result<AuditReport> {
    let n = p.n();
    check_cap(n, AUDIT_DIM_CAP)?;
    let j_mask = var_mask(n, j)?;
    let lhs = closest_junta_distance(p, j)?;
    let free = ((1u64 << n) - 1) & !j_mask;
    let levels = (2.0 * n as f64).log2().ceil() as i32;
    let rhs_terms: Vec<f64> = (1..=levels)
        .map(|l| expected_restricted_norm(p, free, 0.5f64.powi(l)))
        .collect();
    let rhs_sum = rhs_terms.iter().sum();
    let log = (n as f64 / lhs).log2();
    let usable = lhs > 0.0 && log > 0.0 && log != 1.0;
    Ok(AuditReport {
        n,
        j: j.to_vec(),
        lhs,
        rhs_terms,
        rhs_sum,
        implied_exponent: (usable && rhs_sum > 0.0).then(|| (lhs / rhs_sum).ln() / log.ln()),
        predicted_rhs: (lhs > 0.0 && log > 0.0).then(|| lhs / log.powf(c_exponent)),
    })
}

/// (1/8 − c₁*‖μ‖∞/‖μ‖₂)·min(c₂*, ‖μ‖₂/4); 0 for a zero mean vector.
pub fn product_tv_bound(mu: &MeanVector, c1_star: f64) -> f64 {
    let l2 = mu.l2();
    if l2 == 0.0 {
        return 0.0;
    }
    (0.125 - c1_star * mu.linf() / l2) * c2_star().min(l2 / 4.0)
}

/// Exact dtv(p, U) for a product distribution.
pub fn product_tv_exact(p: &ProductDist) -> Result<f64> {
    check_cap(p.n(), PRODUCT_TV_DIM_CAP)?;
    let u = 0.5f64.powi(p.n() as i32);
    Ok(p.to_explicit()?.pmf().iter().map(|v| (v - u).abs()).sum::<f64>() / 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ProductTvCheck {
    pub bound: f64,
    pub exact_tv: f64,
    pub holds: bool,
}

pub fn product_tv_lower_bound(p: &ProductDist, cfg: &AlgoConfig) -> Result<ProductTvCheck> {
    let bound = product_tv_bound(&p.mean_vector(), cfg.c1_star);
    let exact_tv = product_tv_exact(p)?;
    Ok(ProductTvCheck {
        bound,
        exact_tv,
        holds: exact_tv >= bound,
    })
}

/// E_{ν∼D_σ(h)}[‖μ(h_|ν)‖₂] by enumeration.
pub fn expected_mean_norm(h: &ExplicitPmf, sigma: f64) -> Result<f64> {
    check_cap(h.n(), AUDIT_DIM_CAP)?;
    if !(0.0..=1.0).contains(&sigma) {
        return invalid(format!("sigma {sigma} outside [0, 1]"));
    }
    Ok(expected_restricted_norm(h, (1u64 << h.n()) - 1, sigma))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct MonotonicityCheck {
    pub at_sigma1: f64,
    pub at_sigma2: f64,
    pub holds: bool,
}

/// Checks E at σ₂ ≤ E at σ₁ for σ₂ ≤ σ₁ ≤ 1/m.
pub fn sigma_monotonicity_check(h: &ExplicitPmf, sigma1: f64, sigma2: f64) -> Result<MonotonicityCheck> {
    let m = h.n();
    if !(0.0 <= sigma2 && sigma2 <= sigma1 && sigma1 <= 1.0 / m as f64) {
        return invalid(format!("need 0 ≤ σ₂ ≤ σ₁ ≤ 1/{m}, got σ₁ = {sigma1}, σ₂ = {sigma2}"));
    }
    let at_sigma1 = expected_mean_norm(h, sigma1)?;
    let at_sigma2 = expected_mean_norm(h, sigma2)?;
    Ok(MonotonicityCheck {
        at_sigma1,
        at_sigma2,
        holds: at_sigma2 <= at_sigma1 + 1e-12,
    })
}
