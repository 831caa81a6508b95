//! Finding relevant variables with budgeted random restrictions, and the
//! sample-based junta learner built on top.

use rand::Rng;
use serde::Serialize;

use crate::config::{ceil_count, clamped_log2, AlgoConfig};
use crate::dist::{ExplicitPmf, JuntaDist, Restriction, EXACT_DIM_CAP};
use crate::error::{invalid, JuntaError, Result};
use crate::oracle::CondOracle;
use crate::oracle::low_mask;
use crate::restriction::{ds_cube, dsigma_cube, half_power};

/// ε₀ = ε/(100·s·log^p(k/ε)) with s = budgetConstantScale, p = eps0LogPower.
pub fn eps0(k: usize, eps: f64, cfg: &AlgoConfig) -> f64 {
    let log = clamped_log2(k as f64 / eps);
    eps / (100.0 * cfg.budget_constant_scale * log.powi(cfg.eps0_log_power))
}

/// Number of restriction levels j ∈ [⌈log₂ 2k⌉].
pub fn restriction_levels(k: usize) -> u32 {
    (2.0 * k as f64).log2().ceil() as u32
}

/// Largest a with α = 2^{-a}: ⌊log₂(√b/ε)⌋.
pub fn max_alpha_level(b: usize, eps: f64) -> u32 {
    ((b as f64).sqrt() / eps).log2().floor().max(0.0) as u32
}

/// t_a = ⌈100·s·2^a·log(k/ε)⌉ pairs.
pub fn pair_count(k: usize, eps: f64, a: u32, cfg: &AlgoConfig) -> u64 {
    ceil_count(100.0 * cfg.budget_constant_scale * 2f64.powi(a as i32) * clamped_log2(k as f64 / eps))
}

/// s_a = ⌈100·s'·(α²b/ε²)·log(n/ε)⌉ samples per pair, s' = sampleScale.
pub fn sample_count(n: usize, eps: f64, b: usize, a: u32, cfg: &AlgoConfig) -> u64 {
    let alpha = 2f64.powi(-(a as i32));
    ceil_count(100.0 * cfg.sample_scale * alpha * alpha * b as f64 / (eps * eps) * clamped_log2(n as f64 / eps))
}

/// Detection threshold ε/(2α√b).
pub fn detection_threshold(eps: f64, b: usize, a: u32) -> f64 {
    let alpha = 2f64.powi(-(a as i32));
    eps / (2.0 * alpha * (b as f64).sqrt())
}

/// One budget-search call: the loop position where it stopped.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct BudgetCall {
    pub b: usize,
    pub j: u32,
    pub a: u32,
    pub alpha: f64,
    pub t_a: u64,
    pub s_a: u64,
    pub found: usize,
}

/// Finder state: found set, current budget, cumulative budget and ε₀.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct BudgetState {
    pub found: Vec<usize>,
    pub b: usize,
    pub cumulative: usize,
    pub eps0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct FinderReport {
    /// Found variables, 0-based, in the order they were added.
    pub found: Vec<usize>,
    pub queries: u64,
    /// Final cumulative budget B.
    pub cumulative_budget: usize,
    pub eps0: f64,
    pub calls: Vec<BudgetCall>,
}

impl FinderReport {
    pub fn sorted_one_based(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.found.iter().map(|i| i + 1).collect();
        v.sort_unstable();
        v
    }
}

/// Search for at least `b` coordinates outside `known` whose restricted mean
/// is large. Returns the candidate set ordered by decreasing |μ̂_i| (ties by
/// lowest index); it is empty or has at least `b` elements.
pub fn variables_budget(
    oracle: &mut CondOracle,
    k: usize,
    eps: f64,
    b: usize,
    known: &[usize],
    cfg: &AlgoConfig,
    rng: &mut impl Rng,
) -> Result<(Vec<usize>, BudgetCall)> {
    if !b.is_power_of_two() || b > 2 * k {
        return invalid(format!("budget {b} must be a power of two at most 2k"));
    }
    if !(eps > 0.0 && eps <= 0.25) {
        return invalid(format!("eps {eps} outside (0, 1/4]"));
    }
    let n = oracle.n();
    let known_mask = known.iter().fold(0u64, |m, &i| m | 1 << i);
    let unknown = low_mask(n) & !known_mask;
    let mut sums = vec![0i64; n];
    let a_max = max_alpha_level(b, eps);
    let mut log = BudgetCall {
        b,
        j: 0,
        a: 0,
        alpha: 1.0,
        t_a: 0,
        s_a: 0,
        found: 0,
    };
    for j in 1..=restriction_levels(k) {
        let sigma = half_power(j);
        for a in 0..=a_max {
            let t_a = pair_count(k, eps, a, cfg);
            let s_a = sample_count(n, eps, b, a, cfg);
            let threshold = detection_threshold(eps, b, a);
            log = BudgetCall {
                b,
                j,
                a,
                alpha: 2f64.powi(-(a as i32)),
                t_a,
                s_a,
                found: 0,
            };
            let cutoff = threshold * s_a as f64;
            for _ in 0..t_a {
                let rho = ds_cube(oracle, unknown)?;
                let nu = dsigma_cube(oracle, sigma, rho, rng)?;
                oracle.sums(nu, s_a, &mut sums)?;
                let mut stars = nu.stars;
                let mut count = 0;
                while stars != 0 {
                    let i = stars.trailing_zeros() as usize;
                    count += usize::from(sums[i].abs() as f64 >= cutoff);
                    stars &= stars - 1;
                }
                if count >= b {
                    let mut hits: Vec<(usize, i64)> = (0..n)
                        .filter(|&i| nu.stars >> i & 1 == 1 && sums[i].abs() as f64 >= cutoff)
                        .map(|i| (i, sums[i].abs()))
                        .collect();
                    hits.sort_by(|x, y| y.1.cmp(&x.1).then(x.0.cmp(&y.0)));
                    log.found = hits.len();
                    return Ok((hits.into_iter().map(|(i, _)| i).collect(), log));
                }
            }
        }
    }
    Ok((vec![], log))
}

/// The doubling search over budgets b = 1, 2, 4, … ≤ 2k, restarting at b = 1
/// after each success, while at most k variables are known.
pub fn find_relevant_variables(
    oracle: &mut CondOracle,
    k: usize,
    eps: f64,
    cfg: &AlgoConfig,
    rng: &mut impl Rng,
) -> Result<FinderReport> {
    if k == 0 {
        return invalid("k must be at least 1");
    }
    if !(eps > 0.0 && eps <= 0.25) {
        return invalid(format!("eps {eps} outside (0, 1/4]"));
    }
    let start = oracle.queries();
    let mut state = BudgetState {
        found: vec![],
        b: 1,
        cumulative: 0,
        eps0: eps0(k, eps, cfg),
    };
    let mut calls = vec![];
    'outer: while state.found.len() <= k {
        state.b = 1;
        while state.b <= 2 * k {
            state.cumulative += state.b;
            let (candidates, call) =
                variables_budget(oracle, k, state.eps0, state.b, &state.found, cfg, rng)?;
            calls.push(call);
            if candidates.len() >= state.b {
                state.found.extend_from_slice(&candidates[..state.b]);
                continue 'outer;
            }
            state.b *= 2;
        }
        break;
    }
    Ok(FinderReport {
        found: state.found,
        queries: oracle.queries() - start,
        cumulative_budget: state.cumulative,
        eps0: state.eps0,
        calls,
    })
}

/// Number of samples the learner draws: ⌈learnConstant·2^{|J|}/ε²⌉.
pub fn learner_sample_count(j_size: usize, eps: f64, cfg: &AlgoConfig) -> u64 {
    ceil_count(cfg.learn_constant * 2f64.powi(j_size as i32) / (eps * eps))
}

/// Learn the junta over `vars` (0-based) from unconditioned samples: the
/// empirical pmf of the projection onto `vars`.
pub fn learn_junta(
    oracle: &mut CondOracle,
    vars: &[usize],
    eps: f64,
    cfg: &AlgoConfig,
) -> Result<JuntaDist> {
    if vars.len() > EXACT_DIM_CAP {
        return Err(JuntaError::DimensionCap {
            n: vars.len(),
            cap: EXACT_DIM_CAP,
        });
    }
    if !(eps > 0.0 && eps < 1.0) {
        return invalid(format!("eps {eps} outside (0, 1)"));
    }
    let mut sorted = vars.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let n = oracle.n();
    let m = learner_sample_count(sorted.len(), eps, cfg);
    let mut counts = vec![0u64; 1 << sorted.len()];
    let all = Restriction::all_star(n);
    if sorted.len() <= crate::oracle::HISTOGRAM_DIM_CAP && n <= crate::oracle::HISTOGRAM_DIM_CAP {
        let hist = oracle.conditional_histogram(&all, m)?;
        for (idx, h) in hist.into_iter().enumerate() {
            let y = sorted
                .iter()
                .enumerate()
                .fold(0usize, |acc, (t, &i)| acc | (idx >> i & 1) << t);
            counts[y] += h;
        }
    } else {
        for _ in 0..m {
            let x = oracle.conditional_sample(&all)?;
            let y = sorted
                .iter()
                .enumerate()
                .fold(0usize, |acc, (t, &i)| acc | usize::from(x.bits()[i] == 1) << t);
            counts[y] += 1;
        }
    }
    let inner = ExplicitPmf::from_weights(sorted.len(), counts.into_iter().map(|c| c as f64).collect())?;
    JuntaDist::new(n, sorted, inner)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parameter_schedule_examples() {
        let cfg = AlgoConfig::default();
        assert_eq!(pair_count(4, 0.25, 0, &cfg), 400);
        assert_eq!(sample_count(16, 0.25, 1, 0, &cfg), 9600);
        assert_eq!(restriction_levels(4), 3);
        assert_eq!(restriction_levels(1), 1);
        assert_eq!(max_alpha_level(1, 0.25), 2);
        assert_eq!(detection_threshold(0.25, 1, 0), 0.125);
    }

    #[test]
    fn eps0_uses_cubed_log() {
        let cfg = AlgoConfig::default();
        // k/ε = 32, log₂ = 5
        assert!((eps0(4, 0.125, &cfg) - 0.125 / 12_500.0).abs() < 1e-18);
        let flat = AlgoConfig {
            eps0_log_power: 0,
            budget_constant_scale: 0.05,
            ..cfg
        };
        assert!((eps0(4, 0.125, &flat) - 0.025).abs() < 1e-15);
    }
}
