//! Testing k-junta distributions: find the relevant variables, then run
//! majority-amplified mean tests on random two-stage restrictions that fix
//! the found variables.

use rand::Rng;
use serde::Serialize;

use crate::config::{ceil_count, clamped_log2, AlgoConfig};
use crate::error::{invalid, Result};
use crate::mean_tester::{make_plan, robust_mean_test, MeanTestPlan, OracleSource, Verdict};
use crate::oracle::{low_mask, CondOracle};
use crate::relevant_vars::{find_relevant_variables, FinderReport};
use crate::restriction::{ds_cube, dsigma_cube, half_power};

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TestPlan {
    pub n: usize,
    pub k: usize,
    pub eps: f64,
    pub eps_prime: f64,
    /// r = ⌈log₂(2√n/ε′)⌉; ℓ ranges over 1..=r.
    pub r_levels: u32,
    pub eps_star: f64,
    pub c: f64,
    /// j ranges over 1..=⌈log₂ 2n⌉.
    pub j_levels: u32,
    /// L(ℓ) for ℓ = 1..=r.
    pub l_counts: Vec<u64>,
    /// Mean tests per round; odd.
    pub repetitions: u64,
    pub scale: f64,
}

impl TestPlan {
    pub fn l(&self, level: u32) -> u64 {
        self.l_counts[level as usize - 1]
    }
}

pub fn make_test_plan(n: usize, k: usize, eps: f64, cfg: &AlgoConfig) -> Result<TestPlan> {
    if !(eps > 0.0 && eps <= 0.25) {
        return invalid(format!("eps {eps} outside (0, 1/4]"));
    }
    if n == 0 {
        return invalid("n must be positive");
    }
    if cfg.tester_scale.is_nan() || cfg.tester_scale <= 0.0 {
        return invalid("testerScale must be positive");
    }
    let s = cfg.tester_scale;
    let nf = n as f64;
    let j_levels = (2.0 * nf).log2().ceil() as u32;
    let eps_prime = eps / (j_levels as f64 * clamped_log2(nf / eps).powf(cfg.c_exponent));
    let r_levels = (2.0 * nf.sqrt() / eps_prime).log2().ceil().max(1.0) as u32;
    let eps_star = eps_prime / (1600.0 * s * r_levels as f64);
    let l_counts = (1..=r_levels)
        .map(|l| ceil_count(s * 4.0 * r_levels as f64 * nf.sqrt() / (2f64.powi(l as i32) * eps_prime)))
        .collect();
    let mut repetitions = ceil_count(s * cfg.r_constant * clamped_log2(nf / eps_prime));
    if repetitions.is_multiple_of(2) {
        repetitions += 1;
    }
    Ok(TestPlan {
        n,
        k,
        eps,
        eps_prime,
        r_levels,
        eps_star,
        c: cfg.c_exponent,
        j_levels,
        l_counts,
        repetitions,
        scale: s,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TestVerdict {
    Accept,
    Reject,
}

/// Tally of one (j, ℓ) block.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct BlockTally {
    pub j: u32,
    pub l: u32,
    /// Samples per side of each mean test at ε = 2^{-ℓ}.
    pub q: u64,
    pub rounds_planned: u64,
    pub rounds_executed: u64,
    pub reject_rounds: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TestReport {
    pub verdict: TestVerdict,
    pub plan: TestPlan,
    pub finder: FinderReport,
    pub mean_tests: u64,
    pub queries: u64,
    pub blocks: Vec<BlockTally>,
}

impl TestReport {
    /// Queries predicted from the tallies: finder + Σ rounds·(2 + R·2q_ℓ).
    pub fn accounted_queries(&self) -> u64 {
        let r = self.plan.repetitions;
        self.finder.queries
            + self
                .blocks
                .iter()
                .map(|b| b.rounds_executed * (2 + r * 2 * b.q))
                .sum::<u64>()
    }
}

/// The finder configuration inside the tester: testerScale also scales the
/// finder's pair and ε₀ constants.
pub fn finder_config(cfg: &AlgoConfig) -> AlgoConfig {
    AlgoConfig {
        budget_constant_scale: cfg.budget_constant_scale * cfg.tester_scale,
        ..cfg.clone()
    }
}

pub fn test_junta(
    oracle: &mut CondOracle,
    k: usize,
    eps: f64,
    cfg: &AlgoConfig,
    rng: &mut impl Rng,
) -> Result<TestReport> {
    let n = oracle.n();
    let plan = make_test_plan(n, k, eps, cfg)?;
    let start = oracle.queries();
    let finder = find_relevant_variables(oracle, k, plan.eps_star, &finder_config(cfg), rng)?;
    let mut report = TestReport {
        verdict: TestVerdict::Accept,
        plan,
        finder,
        mean_tests: 0,
        queries: 0,
        blocks: vec![],
    };
    if report.finder.found.len() > k {
        report.verdict = TestVerdict::Reject;
        report.queries = oracle.queries() - start;
        return Ok(report);
    }
    let unknown = report.finder.found.iter().fold(low_mask(n), |m, &i| m & !(1u64 << i));
    let reps = report.plan.repetitions;
    let mean_plans: Vec<MeanTestPlan> = (1..=report.plan.r_levels)
        .map(|l| make_plan(n, k, half_power(l), cfg))
        .collect::<Result<_>>()?;
    'blocks: for j in 1..=report.plan.j_levels {
        let sigma = half_power(j);
        for l in 1..=report.plan.r_levels {
            let mean_plan = &mean_plans[l as usize - 1];
            let mut tally = BlockTally {
                j,
                l,
                q: mean_plan.q,
                rounds_planned: report.plan.l(l) * reps,
                rounds_executed: 0,
                reject_rounds: 0,
            };
            while tally.rounds_executed < tally.rounds_planned && 2 * tally.reject_rounds < reps {
                let rho = ds_cube(oracle, unknown)?;
                let nu = dsigma_cube(oracle, sigma, rho, rng)?;
                let mut source = OracleSource::new(oracle, nu);
                let mut not_junta = 0;
                for _ in 0..reps {
                    if robust_mean_test(&mut source, mean_plan)?.verdict == Verdict::NotJunta {
                        not_junta += 1;
                    }
                }
                report.mean_tests += reps;
                tally.rounds_executed += 1;
                // ties count as NotJunta
                if 2 * not_junta >= reps {
                    tally.reject_rounds += 1;
                }
            }
            let rejected = 2 * tally.reject_rounds >= reps;
            report.blocks.push(tally);
            if rejected {
                report.verdict = TestVerdict::Reject;
                break 'blocks;
            }
        }
    }
    report.queries = oracle.queries() - start;
    Ok(report)
}
