//! The robust junta mean tester: tensor statistics Z^(r) evaluated through
//! Gram matrices of inner products, compared against the τ_r schedule.
//!
//! Z^(r) = (1/q²)·Σ_{i,j} ⟨X_i, Y_j⟩^{2^r} is an unbiased estimate of
//! ‖μ(⊙^r p)‖₂².

use serde::Serialize;

use crate::config::{ceil_count, AlgoConfig};
use crate::dist::{ExplicitPmf, Sample};
use crate::error::{invalid, JuntaError, Result};
use crate::oracle::{CondOracle, Cube};

/// Sample size and threshold schedule for one mean test.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct MeanTestPlan {
    pub n: usize,
    pub k: usize,
    pub eps: f64,
    /// Samples per side; the test draws 2q.
    pub q: u64,
    pub r0: u32,
    pub a: f64,
    pub c: f64,
    /// τ_0..τ_{r0}.
    pub tau: Vec<f64>,
}

/// ⌈log₂ log₂ n⌉, and 0 for n < 4.
pub fn max_order(n: usize) -> u32 {
    if n < 4 {
        0
    } else {
        (n as f64).log2().log2().ceil() as u32
    }
}

/// q = ⌈C·max{(k+√n)/(ε²n), (1+k/√n)/ε}⌉.
pub fn sample_size(n: usize, k: usize, eps: f64, c: f64) -> u64 {
    let (nf, kf) = (n as f64, k as f64);
    let sn = nf.sqrt();
    ceil_count(c * ((kf + sn) / (eps * eps * nf)).max((1.0 + kf / sn) / eps))
}

pub fn make_plan(n: usize, k: usize, eps: f64, cfg: &AlgoConfig) -> Result<MeanTestPlan> {
    if !(eps > 0.0 && eps < 1.0) {
        return invalid(format!("eps {eps} outside (0, 1)"));
    }
    if n < 1 {
        return invalid("n must be positive");
    }
    let q = cfg
        .mean_tester_q_override
        .unwrap_or_else(|| sample_size(n, k, eps, cfg.mean_tester_c))
        .max(1);
    let r0 = max_order(n);
    let a = cfg.mean_tester_a;
    let qf = q as f64;
    let mut tau = vec![eps * eps * n as f64 / 2.0];
    for r in 1..=r0 as usize {
        tau.push(a * qf * qf * tau[r - 1] * tau[r - 1]);
    }
    Ok(MeanTestPlan {
        n,
        k,
        eps,
        q,
        r0,
        a,
        c: cfg.mean_tester_c,
        tau,
    })
}

impl MeanTestPlan {
    /// τ_r = (1/(a q²))·(a q² ε² n/2)^{2^r}.
    pub fn tau_closed_form(&self, r: u32) -> f64 {
        let aq2 = self.a * (self.q as f64).powi(2);
        (aq2 * self.eps * self.eps * self.n as f64 / 2.0).powf(2f64.powi(r as i32)) / aq2
    }
}

/// Exact or floating power sum Σ M_ij^{2^r}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PowerSum {
    Exact(i128),
    Float(f64),
}

impl PowerSum {
    pub fn value(self) -> f64 {
        match self {
            Self::Exact(v) => v as f64,
            Self::Float(v) => v,
        }
    }
}

/// Neumaier-compensated accumulator.
#[derive(Default)]
struct Compensated {
    sum: f64,
    c: f64,
}

impl Compensated {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.c += (self.sum - t) + x;
        } else {
            self.c += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn total(&self) -> f64 {
        self.sum + self.c
    }
}

/// Σ_v weight(v)·v^{2^r} over (value, weight) pairs, exact when it fits.
fn power_sum(terms: impl Iterator<Item = (i64, i128)> + Clone, r: u32) -> PowerSum {
    let e = 1u32 << r;
    let exact = terms.clone().try_fold(0i128, |acc, (v, w)| {
        (v as i128).checked_pow(e).and_then(|p| p.checked_mul(w)).and_then(|t| acc.checked_add(t))
    });
    match exact {
        Some(v) => PowerSum::Exact(v),
        None => {
            let mut acc = Compensated::default();
            for (v, w) in terms {
                acc.add((v as f64).powi(e as i32) * w as f64);
            }
            PowerSum::Float(acc.total())
        }
    }
}

/// M_ij = ⟨X_i, Y_j⟩ for two sample lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GramMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<i64>,
}

pub fn gram_matrix(x: &[Sample], y: &[Sample]) -> Result<GramMatrix> {
    if x.is_empty() || y.is_empty() {
        return Err(JuntaError::SourceExhausted {
            needed: 1,
            available: 0,
        });
    }
    let n = x[0].n();
    if let Some(bad) = x.iter().chain(y).find(|s| s.n() != n) {
        return Err(JuntaError::DimensionMismatch {
            expected: n,
            found: bad.n(),
        });
    }
    let entries = x.iter().flat_map(|xi| y.iter().map(move |yj| xi.inner(yj))).collect();
    Ok(GramMatrix {
        rows: x.len(),
        cols: y.len(),
        entries,
    })
}

impl GramMatrix {
    pub fn from_entries(rows: usize, cols: usize, entries: Vec<i64>) -> Result<Self> {
        if entries.len() != rows * cols || rows == 0 {
            return invalid("gram entries do not match the shape");
        }
        Ok(Self { rows, cols, entries })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.entries[i * self.cols + j]
    }

    pub fn power_sum(&self, r: u32) -> PowerSum {
        power_sum(self.entries.iter().map(|&v| (v, 1)), r)
    }

    /// Z^(r) = (1/(rows·cols))·Σ M_ij^{2^r}.
    pub fn z_statistic(&self, r: u32) -> f64 {
        self.power_sum(r).value() / (self.rows * self.cols) as f64
    }
}

/// Samples on {-1,1}^m, either as points (plus-masks) or as a histogram over
/// the 2^m cells.
#[derive(Debug, Clone, PartialEq)]
pub enum SampleSet {
    Points { dim: usize, points: Vec<u64> },
    Histogram { dim: usize, counts: Vec<u64> },
}

impl SampleSet {
    pub fn from_samples(samples: &[Sample]) -> Result<Self> {
        let dim = samples.first().map_or(0, Sample::n);
        if dim > 64 {
            return invalid("point sets are limited to 64 coordinates");
        }
        if samples.iter().any(|s| s.n() != dim) {
            return invalid("samples have different lengths");
        }
        Ok(Self::Points {
            dim,
            points: samples.iter().map(Sample::index).collect(),
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Points { dim, .. } | Self::Histogram { dim, .. } => *dim,
        }
    }

    pub fn len(&self) -> u64 {
        match self {
            Self::Points { points, .. } => points.len() as u64,
            Self::Histogram { counts, .. } => counts.iter().sum(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn to_histogram(&self) -> Vec<u64> {
        match self {
            Self::Histogram { counts, .. } => counts.clone(),
            Self::Points { dim, points } => {
                let mut h = vec![0u64; 1 << dim];
                points.iter().for_each(|&p| h[p as usize] += 1);
                h
            }
        }
    }
}

/// Largest dimension for the histogram evaluation of Z^(r).
pub const HISTOGRAM_STAT_DIM: usize = 12;

/// Counts c_d of pairs (X_i, Y_j) at Hamming distance d, so that
/// ⟨X_i, Y_j⟩ = m − 2d.
pub fn distance_profile(x: &SampleSet, y: &SampleSet) -> Result<Vec<i128>> {
    let m = x.dim();
    if y.dim() != m {
        return Err(JuntaError::DimensionMismatch {
            expected: m,
            found: y.dim(),
        });
    }
    let mut profile = vec![0i128; m + 1];
    match (x, y) {
        (SampleSet::Points { points: px, .. }, SampleSet::Points { points: py, .. })
            if m > HISTOGRAM_STAT_DIM || (px.len() * py.len()) < (1 << (2 * m)) =>
        {
            for &a in px {
                for &b in py {
                    profile[(a ^ b).count_ones() as usize] += 1;
                }
            }
        }
        _ => {
            if m > HISTOGRAM_STAT_DIM {
                return invalid("histogram statistics need dimension at most 12");
            }
            let mut hx: Vec<i128> = x.to_histogram().into_iter().map(i128::from).collect();
            let mut hy: Vec<i128> = y.to_histogram().into_iter().map(i128::from).collect();
            walsh_hadamard(&mut hx);
            walsh_hadamard(&mut hy);
            let mut corr: Vec<i128> = hx.iter().zip(&hy).map(|(a, b)| a * b).collect();
            walsh_hadamard(&mut corr);
            let size = 1i128 << m;
            for (w, c) in corr.into_iter().enumerate() {
                debug_assert_eq!(c % size, 0);
                profile[w.count_ones() as usize] += c / size;
            }
        }
    }
    Ok(profile)
}

fn walsh_hadamard(v: &mut [i128]) {
    let mut h = 1;
    while h < v.len() {
        for block in v.chunks_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        h *= 2;
    }
}

/// Z^(r) for r = 0..=r_max from two sample sets.
pub fn z_statistics(x: &SampleSet, y: &SampleSet, r_max: u32) -> Result<Vec<f64>> {
    let m = x.dim() as i64;
    let profile = distance_profile(x, y)?;
    let pairs = (x.len() * y.len()) as f64;
    if pairs == 0.0 {
        return Err(JuntaError::SourceExhausted {
            needed: 1,
            available: 0,
        });
    }
    Ok((0..=r_max)
        .map(|r| {
            let terms = profile.iter().enumerate().map(|(d, &c)| (m - 2 * d as i64, c));
            power_sum(terms, r).value() / pairs
        })
        .collect())
}

/// ‖μ(⊙^r p)‖₂² = Σ_{x,y} p(x)p(y)⟨x,y⟩^{2^r}, by enumeration.
pub fn tensor_mean_norm_sq(p: &ExplicitPmf, r: u32) -> Result<f64> {
    if p.n() > 12 {
        return Err(JuntaError::DimensionCap { n: p.n(), cap: 12 });
    }
    let n = p.n() as i64;
    let pmf = p.pmf();
    let mut total = 0.0;
    for (x, &px) in pmf.iter().enumerate().filter(|e| *e.1 > 0.0) {
        for (y, &py) in pmf.iter().enumerate() {
            let inner = n - 2 * (x ^ y).count_ones() as i64;
            total += px * py * (inner as f64).powi(1 << r);
        }
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    IsJunta,
    NotJunta,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct MeanTestOutcome {
    pub verdict: Verdict,
    /// First order r with Z^(r) > τ_r.
    pub rejected_at: Option<u32>,
    pub z: Vec<f64>,
}

/// Supplies i.i.d. samples to the mean tester.
pub trait SampleSource {
    fn draw_set(&mut self, count: u64) -> Result<SampleSet>;
}

/// A fixed list of samples consumed in order.
pub struct VecSource {
    samples: Vec<Sample>,
    pos: usize,
}

impl VecSource {
    pub fn new(samples: Vec<Sample>) -> Self {
        Self { samples, pos: 0 }
    }
}

impl SampleSource for VecSource {
    fn draw_set(&mut self, count: u64) -> Result<SampleSet> {
        let end = self.pos + count as usize;
        if end > self.samples.len() {
            return Err(JuntaError::SourceExhausted {
                needed: end,
                available: self.samples.len(),
            });
        }
        let set = SampleSet::from_samples(&self.samples[self.pos..end])?;
        self.pos = end;
        Ok(set)
    }
}

/// Draws from p_|ρ through an oracle; samples live on stars(ρ).
pub struct OracleSource<'a> {
    oracle: &'a mut CondOracle,
    cube: Cube,
}

impl<'a> OracleSource<'a> {
    pub fn new(oracle: &'a mut CondOracle, cube: Cube) -> Self {
        Self { oracle, cube }
    }
}

impl SampleSource for OracleSource<'_> {
    fn draw_set(&mut self, count: u64) -> Result<SampleSet> {
        let dim = self.cube.stars.count_ones() as usize;
        if dim <= HISTOGRAM_STAT_DIM && (count as u128).pow(2) > 1u128 << (2 * dim) {
            let counts = self.oracle.histogram(self.cube, count)?;
            return Ok(SampleSet::Histogram { dim, counts });
        }
        let points = (0..count)
            .map(|_| {
                let x = self.oracle.draw(self.cube)?;
                Ok(crate::oracle::extract(x, self.cube.stars))
            })
            .collect::<Result<Vec<u64>>>()?;
        Ok(SampleSet::Points { dim, points })
    }
}

/// Draw 2q samples and reject at the first r with Z^(r) > τ_r.
pub fn robust_mean_test(source: &mut impl SampleSource, plan: &MeanTestPlan) -> Result<MeanTestOutcome> {
    let x = source.draw_set(plan.q)?;
    let y = source.draw_set(plan.q)?;
    let z = z_statistics(&x, &y, plan.r0)?;
    let rejected_at = z.iter().zip(&plan.tau).position(|(z, t)| z > t).map(|r| r as u32);
    Ok(MeanTestOutcome {
        verdict: if rejected_at.is_some() {
            Verdict::NotJunta
        } else {
            Verdict::IsJunta
        },
        rejected_at,
        z,
    })
}
