//! Samples, restrictions and distribution representations over {-1,1}^n.
//!
//! Dense pmfs are indexed by the integer whose bit `i-1` is set exactly when
//! `x_i = +1` (coordinate 1 is the least significant bit).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, JuntaError, Result};

/// Largest dimension for dense pmf storage and exact operations.
pub const EXACT_DIM_CAP: usize = 24;

const NORM_TOL: f64 = 1e-12;
const RENORM_TOL: f64 = 1e-9;

/// A point of {-1,1}^n.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Sample(Vec<i8>);

impl Sample {
    pub fn new(bits: Vec<i8>) -> Result<Self> {
        if bits.iter().any(|&b| b != 1 && b != -1) {
            return invalid("sample entries must be -1 or +1");
        }
        Ok(Self(bits))
    }

    /// The point whose dense-pmf index is `index`.
    pub fn from_index(n: usize, index: u64) -> Self {
        Self((0..n).map(|i| if index >> i & 1 == 1 { 1 } else { -1 }).collect())
    }

    pub fn bits(&self) -> &[i8] {
        &self.0
    }

    pub fn n(&self) -> usize {
        self.0.len()
    }

    /// Dense-pmf index; requires n ≤ 64.
    pub fn index(&self) -> u64 {
        debug_assert!(self.0.len() <= 64);
        self.0
            .iter()
            .enumerate()
            .filter(|&(_, &b)| b == 1)
            .fold(0, |acc, (i, _)| acc | 1 << i)
    }

    pub fn inner(&self, other: &Sample) -> i64 {
        self.0.iter().zip(&other.0).map(|(&a, &b)| (a * b) as i64).sum()
    }
}

/// A point of {-1,1,*}^n. Stored full length; `stars` caches the * positions
/// in increasing order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Restriction {
    cells: Vec<i8>,
    stars: Vec<usize>,
}

impl Restriction {
    /// Build from cells where 0 encodes *.
    pub fn from_cells(cells: Vec<i8>) -> Result<Self> {
        if cells.iter().any(|&c| !(-1..=1).contains(&c)) {
            return invalid("restriction cells must be -1, +1 or 0 for *");
        }
        let stars = cells
            .iter()
            .enumerate()
            .filter(|&(_, &c)| c == 0)
            .map(|(i, _)| i)
            .collect();
        Ok(Self { cells, stars })
    }

    pub fn all_star(n: usize) -> Self {
        Self {
            cells: vec![0; n],
            stars: (0..n).collect(),
        }
    }

    /// Fix every coordinate to `x` except those in `stars` (0-based).
    pub fn from_sample(x: &Sample, stars: &[usize]) -> Result<Self> {
        let mut cells = x.bits().to_vec();
        for &i in stars {
            if i >= cells.len() {
                return invalid(format!("star index {} out of range", i + 1));
            }
            cells[i] = 0;
        }
        Self::from_cells(cells)
    }

    pub fn n(&self) -> usize {
        self.cells.len()
    }

    pub fn cells(&self) -> &[i8] {
        &self.cells
    }

    pub fn stars(&self) -> &[usize] {
        &self.stars
    }

    pub fn is_star(&self, i: usize) -> bool {
        self.cells[i] == 0
    }

    /// Substitute `sub` (a restriction over this one's stars, in star order)
    /// into the star positions.
    pub fn compose(&self, sub: &Restriction) -> Result<Self> {
        if sub.n() != self.stars.len() {
            return Err(JuntaError::DimensionMismatch {
                expected: self.stars.len(),
                found: sub.n(),
            });
        }
        let mut cells = self.cells.clone();
        for (t, &i) in self.stars.iter().enumerate() {
            cells[i] = sub.cells[t];
        }
        let stars = sub.stars.iter().map(|&t| self.stars[t]).collect();
        Ok(Self { cells, stars })
    }

    /// True when `x` agrees with every fixed coordinate.
    pub fn is_consistent(&self, x: &Sample) -> bool {
        x.n() == self.n()
            && self
                .cells
                .iter()
                .zip(x.bits())
                .all(|(&c, &b)| c == 0 || c == b)
    }

    /// (star mask, mask of coordinates fixed to +1); requires n ≤ 64.
    pub fn masks(&self) -> (u64, u64) {
        self.cells
            .iter()
            .enumerate()
            .fold((0, 0), |(s, p), (i, &c)| match c {
                0 => (s | 1 << i, p),
                1 => (s, p | 1 << i),
                _ => (s, p),
            })
    }

    /// The restriction to the coordinates `vars`, in the order given.
    pub fn select(&self, vars: &[usize]) -> Self {
        let cells = vars.iter().map(|&i| self.cells[i]).collect();
        Self::from_cells(cells).expect("cells already valid")
    }
}

impl fmt::Display for Restriction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &c in &self.cells {
            f.write_str(match c {
                1 => "+",
                -1 => "-",
                _ => "*",
            })?;
        }
        Ok(())
    }
}

impl FromStr for Restriction {
    type Err = JuntaError;

    fn from_str(s: &str) -> Result<Self> {
        let cells = s
            .chars()
            .map(|ch| match ch {
                '+' | '1' => Ok(1),
                '-' => Ok(-1),
                '*' => Ok(0),
                _ => invalid(format!("bad restriction character {ch:?}")),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_cells(cells)
    }
}

/// Enumerate `base | s` for every submask `s` of `mask`, in increasing order
/// of the compressed cell index.
pub(crate) fn for_each_cell(base: u64, mask: u64, mut f: impl FnMut(u64)) {
    let mut s = 0u64;
    loop {
        f(base | s);
        if s == mask {
            break;
        }
        s = (s | !mask).wrapping_add(1) & mask;
    }
}

fn check_dim(n: usize) -> Result<()> {
    if n > EXACT_DIM_CAP {
        Err(JuntaError::DimensionCap {
            n,
            cap: EXACT_DIM_CAP,
        })
    } else {
        Ok(())
    }
}

fn validate_pmf(mut pmf: Vec<f64>) -> Result<Vec<f64>> {
    if pmf.iter().any(|&v| !v.is_finite() || v < 0.0) {
        return Err(JuntaError::InvalidPmf("entries must be finite and nonnegative".into()));
    }
    let total: f64 = pmf.iter().sum();
    let dev = (total - 1.0).abs();
    if dev > RENORM_TOL {
        return Err(JuntaError::InvalidPmf(format!("mass {total} is not 1")));
    }
    if dev > NORM_TOL {
        pmf.iter_mut().for_each(|v| *v /= total);
    }
    Ok(pmf)
}

/// A dense pmf over {-1,1}^n.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplicitPmf {
    n: usize,
    pmf: Vec<f64>,
}

impl ExplicitPmf {
    pub fn new(n: usize, pmf: Vec<f64>) -> Result<Self> {
        check_dim(n)?;
        if pmf.len() != 1 << n {
            return Err(JuntaError::DimensionMismatch {
                expected: 1 << n,
                found: pmf.len(),
            });
        }
        Ok(Self {
            n,
            pmf: validate_pmf(pmf)?,
        })
    }

    /// Normalize nonnegative weights into a pmf.
    pub fn from_weights(n: usize, weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !total.is_finite() || total <= 0.0 {
            return Err(JuntaError::InvalidPmf("weights must have positive finite sum".into()));
        }
        Self::new(n, weights.into_iter().map(|w| w / total).collect())
    }

    pub fn uniform(n: usize) -> Result<Self> {
        check_dim(n)?;
        let size = 1usize << n;
        Ok(Self {
            n,
            pmf: vec![1.0 / size as f64; size],
        })
    }

    pub fn point_mass(n: usize, index: u64) -> Result<Self> {
        check_dim(n)?;
        let mut pmf = vec![0.0; 1 << n];
        pmf[index as usize] = 1.0;
        Ok(Self { n, pmf })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    pub fn prob(&self, x: &Sample) -> f64 {
        self.pmf[x.index() as usize]
    }

    fn check_restriction(&self, rho: &Restriction) -> Result<()> {
        if rho.n() != self.n {
            return Err(JuntaError::DimensionMismatch {
                expected: self.n,
                found: rho.n(),
            });
        }
        Ok(())
    }

    /// Unnormalized masses of the 2^m points of the subcube, in cell order.
    pub(crate) fn subcube_weights(&self, rho: &Restriction) -> Vec<f64> {
        let (mask, plus) = rho.masks();
        let mut out = Vec::with_capacity(1 << rho.stars().len());
        for_each_cell(plus, mask, |idx| out.push(self.pmf[idx as usize]));
        out
    }

    /// p_|ρ over {-1,1}^{stars(ρ)}.
    pub fn restrict(&self, rho: &Restriction) -> Result<ExplicitPmf> {
        self.check_restriction(rho)?;
        let w = self.subcube_weights(rho);
        let total: f64 = w.iter().sum();
        if total <= 0.0 {
            return Err(JuntaError::ZeroMass);
        }
        Ok(ExplicitPmf {
            n: rho.stars().len(),
            pmf: w.into_iter().map(|v| v / total).collect(),
        })
    }

    /// Marginal on the coordinates outside `s`.
    pub fn project_out(&self, s: &[usize]) -> Result<ExplicitPmf> {
        if let Some(&bad) = s.iter().find(|&&i| i >= self.n) {
            return invalid(format!("coordinate {} out of range", bad + 1));
        }
        let keep: Vec<usize> = (0..self.n).filter(|i| !s.contains(i)).collect();
        Ok(self.marginal(&keep))
    }

    /// Marginal on `keep` (0-based, any order; bit t of the result is keep[t]).
    pub fn marginal(&self, keep: &[usize]) -> ExplicitPmf {
        let mut out = vec![0.0; 1 << keep.len()];
        for (idx, &v) in self.pmf.iter().enumerate() {
            let mut j = 0usize;
            for (t, &i) in keep.iter().enumerate() {
                j |= (idx >> i & 1) << t;
            }
            out[j] += v;
        }
        ExplicitPmf {
            n: keep.len(),
            pmf: out,
        }
    }

    pub fn mean_vector(&self) -> MeanVector {
        let mut mu = vec![0.0; self.n];
        for (idx, &v) in self.pmf.iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            for (i, m) in mu.iter_mut().enumerate() {
                if idx >> i & 1 == 1 {
                    *m += v;
                } else {
                    *m -= v;
                }
            }
        }
        MeanVector(mu)
    }

    pub fn tv(&self, other: &ExplicitPmf) -> Result<f64> {
        if self.n != other.n {
            return Err(JuntaError::DimensionMismatch {
                expected: self.n,
                found: other.n,
            });
        }
        Ok(0.5 * self.pmf.iter().zip(&other.pmf).map(|(a, b)| (a - b).abs()).sum::<f64>())
    }
}

/// A product distribution given by Pr[x_i = +1].
#[derive(Debug, Clone, PartialEq)]
pub struct ProductDist {
    bias: Vec<f64>,
}

impl ProductDist {
    pub fn new(bias: Vec<f64>) -> Result<Self> {
        if bias.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
            return invalid("product biases must lie in [0, 1]");
        }
        Ok(Self { bias })
    }

    pub fn n(&self) -> usize {
        self.bias.len()
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn mean_vector(&self) -> MeanVector {
        MeanVector(self.bias.iter().map(|p| 2.0 * p - 1.0).collect())
    }

    pub fn to_explicit(&self) -> Result<ExplicitPmf> {
        check_dim(self.n())?;
        let mut pmf = Vec::with_capacity(1 << self.n());
        pmf.push(1.0);
        for &p in &self.bias {
            let lo: Vec<f64> = pmf.iter().map(|v| v * (1.0 - p)).collect();
            pmf.iter_mut().for_each(|v| *v *= p);
            pmf.splice(0..0, lo);
        }
        Ok(ExplicitPmf { n: self.n(), pmf })
    }
}

/// A junta: an explicit pmf on `vars`, uniform and independent elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct JuntaDist {
    n: usize,
    vars: Vec<usize>,
    inner: ExplicitPmf,
}

impl JuntaDist {
    /// `vars` are 0-based and strictly increasing; bit t of the inner pmf
    /// index is coordinate `vars[t]`.
    pub fn new(n: usize, vars: Vec<usize>, inner: ExplicitPmf) -> Result<Self> {
        if vars.windows(2).any(|w| w[0] >= w[1]) {
            return invalid("junta variables must be strictly increasing");
        }
        if vars.last().is_some_and(|&v| v >= n) {
            return invalid("junta variable out of range");
        }
        if inner.n() != vars.len() {
            return Err(JuntaError::DimensionMismatch {
                expected: vars.len(),
                found: inner.n(),
            });
        }
        Ok(Self { n, vars, inner })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn vars(&self) -> &[usize] {
        &self.vars
    }

    pub fn inner(&self) -> &ExplicitPmf {
        &self.inner
    }

    pub fn mean_vector(&self) -> MeanVector {
        let mut mu = vec![0.0; self.n];
        for (&i, m) in self.vars.iter().zip(self.inner.mean_vector().0) {
            mu[i] = m;
        }
        MeanVector(mu)
    }

    pub fn to_explicit(&self) -> Result<ExplicitPmf> {
        check_dim(self.n)?;
        let scale = 1.0 / (1u64 << (self.n - self.vars.len())) as f64;
        let pmf = (0..1usize << self.n)
            .map(|idx| {
                let y = self
                    .vars
                    .iter()
                    .enumerate()
                    .fold(0usize, |acc, (t, &i)| acc | (idx >> i & 1) << t);
                self.inner.pmf[y] * scale
            })
            .collect();
        Ok(ExplicitPmf { n: self.n, pmf })
    }
}

/// A distribution over {-1,1}^n in one of three representations.
#[derive(Debug, Clone, PartialEq)]
pub enum DistributionSpec {
    Explicit(ExplicitPmf),
    Product(ProductDist),
    Junta(JuntaDist),
}

impl DistributionSpec {
    pub fn uniform(n: usize) -> Self {
        Self::Product(ProductDist {
            bias: vec![0.5; n],
        })
    }

    pub fn n(&self) -> usize {
        match self {
            Self::Explicit(p) => p.n(),
            Self::Product(p) => p.n(),
            Self::Junta(p) => p.n(),
        }
    }

    pub fn to_explicit(&self) -> Result<ExplicitPmf> {
        match self {
            Self::Explicit(p) => Ok(p.clone()),
            Self::Product(p) => p.to_explicit(),
            Self::Junta(p) => p.to_explicit(),
        }
    }

    pub fn mean_vector(&self) -> MeanVector {
        match self {
            Self::Explicit(p) => p.mean_vector(),
            Self::Product(p) => p.mean_vector(),
            Self::Junta(p) => p.mean_vector(),
        }
    }

    /// The coordinates p depends on (0-based): i is relevant iff flipping
    /// x_i changes p(x) for some x.
    pub fn relevant_variables(&self) -> Vec<usize> {
        match self {
            Self::Explicit(p) => flip_sensitive(p),
            Self::Product(p) => (0..p.n()).filter(|&i| p.bias()[i] != 0.5).collect(),
            Self::Junta(p) => flip_sensitive(p.inner()).into_iter().map(|t| p.vars()[t]).collect(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str::<SpecJson>(text)?.try_into()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&SpecJson::from(self)).expect("spec serializes")
    }
}

impl From<ExplicitPmf> for DistributionSpec {
    fn from(p: ExplicitPmf) -> Self {
        Self::Explicit(p)
    }
}

impl From<ProductDist> for DistributionSpec {
    fn from(p: ProductDist) -> Self {
        Self::Product(p)
    }
}

impl From<JuntaDist> for DistributionSpec {
    fn from(p: JuntaDist) -> Self {
        Self::Junta(p)
    }
}

fn flip_sensitive(p: &ExplicitPmf) -> Vec<usize> {
    let pmf = p.pmf();
    (0..p.n())
        .filter(|&i| {
            (0..pmf.len()).any(|x| {
                let (a, b) = (pmf[x], pmf[x ^ 1 << i]);
                (a - b).abs() > 1e-12 * a.max(b)
            })
        })
        .collect()
}

/// p_|ρ as an explicit pmf over stars(ρ).
pub fn restrict_exact(p: &DistributionSpec, rho: &Restriction) -> Result<ExplicitPmf> {
    p.to_explicit()?.restrict(rho)
}

/// Marginal of p on the coordinates outside `s` (0-based).
pub fn project_exact(p: &DistributionSpec, s: &[usize]) -> Result<ExplicitPmf> {
    p.to_explicit()?.project_out(s)
}

pub fn tv_distance(p: &DistributionSpec, q: &DistributionSpec) -> Result<f64> {
    if p.n() != q.n() {
        return Err(JuntaError::DimensionMismatch {
            expected: p.n(),
            found: q.n(),
        });
    }
    p.to_explicit()?.tv(&q.to_explicit()?)
}

/// A mean vector μ(p) = E[x].
#[derive(Debug, Clone, PartialEq)]
pub struct MeanVector(pub Vec<f64>);

impl MeanVector {
    pub fn l2_squared(&self) -> f64 {
        self.0.iter().map(|m| m * m).sum()
    }

    pub fn l2(&self) -> f64 {
        self.l2_squared().sqrt()
    }

    pub fn linf(&self) -> f64 {
        self.0.iter().fold(0.0, |a, m| a.max(m.abs()))
    }
}

pub fn empirical_mean(samples: &[Sample]) -> Result<MeanVector> {
    let first = samples.first().ok_or(JuntaError::SourceExhausted {
        needed: 1,
        available: 0,
    })?;
    let n = first.n();
    let mut sums = vec![0i64; n];
    for x in samples {
        if x.n() != n {
            return Err(JuntaError::DimensionMismatch {
                expected: n,
                found: x.n(),
            });
        }
        sums.iter_mut().zip(x.bits()).for_each(|(s, &b)| *s += b as i64);
    }
    let m = samples.len() as f64;
    Ok(MeanVector(sums.into_iter().map(|s| s as f64 / m).collect()))
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
enum SpecJson {
    Explicit {
        n: usize,
        pmf: Vec<f64>,
    },
    Product {
        bias: Vec<f64>,
    },
    Junta {
        n: usize,
        vars: Vec<usize>,
        #[serde(rename = "innerPmf")]
        inner_pmf: Vec<f64>,
    },
}

impl TryFrom<SpecJson> for DistributionSpec {
    type Error = JuntaError;

    fn try_from(j: SpecJson) -> Result<Self> {
        Ok(match j {
            SpecJson::Explicit { n, pmf } => ExplicitPmf::new(n, pmf)?.into(),
            SpecJson::Product { bias } => ProductDist::new(bias)?.into(),
            SpecJson::Junta { n, vars, inner_pmf } => {
                if vars.contains(&0) {
                    return invalid("junta variables are 1-based");
                }
                let vars: Vec<usize> = vars.into_iter().map(|v| v - 1).collect();
                let inner = ExplicitPmf::new(vars.len(), inner_pmf)?;
                JuntaDist::new(n, vars, inner)?.into()
            }
        })
    }
}

impl From<&DistributionSpec> for SpecJson {
    fn from(p: &DistributionSpec) -> Self {
        match p {
            DistributionSpec::Explicit(p) => SpecJson::Explicit {
                n: p.n,
                pmf: p.pmf.clone(),
            },
            DistributionSpec::Product(p) => SpecJson::Product {
                bias: p.bias.clone(),
            },
            DistributionSpec::Junta(p) => SpecJson::Junta {
                n: p.n,
                vars: p.vars.iter().map(|v| v + 1).collect(),
                inner_pmf: p.inner.pmf.clone(),
            },
        }
    }
}
