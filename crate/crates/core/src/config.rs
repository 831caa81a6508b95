use serde::{Deserialize, Serialize};

/// Constants the algorithms leave symbolic, plus down-scaling multipliers.
///
/// All `log` in parameter formulas is base 2 with its argument clamped below
/// by 2. Defaults are the published values where one is fixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct AlgoConfig {
    /// Multiplies the 100 in the pair count t_a and in ε₀.
    pub budget_constant_scale: f64,
    /// Multiplies the 100 in the per-pair sample count s_a.
    pub sample_scale: f64,
    /// Exponent of log(k/ε) in ε₀ = ε/(100·log^p(k/ε)).
    pub eps0_log_power: i32,
    /// Multiplies L and R and the 1600 in ε* of the junta tester.
    pub tester_scale: f64,
    /// Hidden constant in R = O(log(n/ε′)).
    pub r_constant: f64,
    /// Sample constant C of the mean tester.
    pub mean_tester_c: f64,
    /// Threshold recursion constant a in τ_r = a·q²·τ_{r−1}².
    pub mean_tester_a: f64,
    /// Forces q in the mean-test plan.
    pub mean_tester_q_override: Option<u64>,
    /// Structural-lemma exponent c in ε′.
    pub c_exponent: f64,
    /// Berry–Esseen constant in the product TV lower bound.
    pub c1_star: f64,
    /// Constant in the learner's sample count.
    pub learn_constant: f64,
    /// Constant in the compression lemma's depth hypothesis.
    pub zeta: f64,
}

impl Default for AlgoConfig {
    fn default() -> Self {
        Self {
            budget_constant_scale: 1.0,
            sample_scale: 1.0,
            eps0_log_power: 3,
            tester_scale: 1.0,
            r_constant: 1.0,
            mean_tester_c: 1.0,
            mean_tester_a: 1.0 / 5000.0,
            mean_tester_q_override: None,
            c_exponent: 3.0,
            c1_star: 0.56,
            learn_constant: 8.0,
            zeta: 0.01,
        }
    }
}

/// log₂(max(x, 2)).
pub fn clamped_log2(x: f64) -> f64 {
    x.max(2.0).log2()
}

/// Ceiling of a nonnegative real count, at least 1. Values within 1e-9
/// (relative) of an integer round to it, so 9600.000000000002 stays 9600.
pub fn ceil_count(x: f64) -> u64 {
    if x.is_finite() {
        let near = x.round();
        let c = if (x - near).abs() <= 1e-9 * near.abs().max(1.0) { near } else { x.ceil() };
        (c as u64).max(1)
    } else {
        u64::MAX
    }
}
