//! Query trees over general conditioning sets and the SampleWalk
//! rejection-sampling protocol, with an exact audit of its output law.

use rand::seq::index::sample as sample_indices;
use rand::Rng;
use serde::Serialize;

use crate::dist::{ExplicitPmf, Sample};
use crate::error::{invalid, JuntaError, Result};
use crate::rng;

pub const TREE_DIM_CAP: usize = 12;
pub const AUDIT_DIM_CAP: usize = 6;
pub const AUDIT_DEPTH_CAP: usize = 4;
pub const AUDIT_SET_CAP: usize = 64;

/// A node: its conditioning set and one child per element (empty at the
/// last level).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryNode {
    pub set: Vec<u64>,
    pub children: Vec<QueryNode>,
}

impl QueryNode {
    pub fn leaf(set: Vec<u64>) -> Self {
        Self { set, children: vec![] }
    }
}

/// A depth-q query tree, either explicit or generated from a seed on demand.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QueryTree {
    Explicit { n: usize, depth: usize, root: QueryNode },
    Random { n: usize, depth: usize, seed: u64 },
}

fn validate_node(node: &QueryNode, n: usize, remaining: usize) -> Result<()> {
    if node.set.is_empty() {
        return invalid("conditioning sets must be nonempty");
    }
    let mut sorted = node.set.clone();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != node.set.len() || sorted.last().is_some_and(|&x| x >> n != 0) {
        return invalid("conditioning set has repeated or out-of-range points");
    }
    if remaining == 1 {
        if !node.children.is_empty() {
            return invalid("tree is deeper than declared");
        }
        return Ok(());
    }
    if node.children.len() != node.set.len() {
        return invalid("every element of a conditioning set needs a child");
    }
    node.children.iter().try_for_each(|c| validate_node(c, n, remaining - 1))
}

impl QueryTree {
    pub fn explicit(n: usize, root: QueryNode) -> Result<Self> {
        if n > TREE_DIM_CAP {
            return Err(JuntaError::DimensionCap { n, cap: TREE_DIM_CAP });
        }
        let mut depth = 1;
        let mut node = &root;
        while let Some(c) = node.children.first() {
            depth += 1;
            node = c;
        }
        validate_node(&root, n, depth)?;
        Ok(Self::Explicit { n, depth, root })
    }

    /// Each node's set is a uniformly sized random nonempty subset of the
    /// cube, derived from the seed and the path leading to it.
    pub fn random(n: usize, depth: usize, seed: u64) -> Result<Self> {
        if n > TREE_DIM_CAP {
            return Err(JuntaError::DimensionCap { n, cap: TREE_DIM_CAP });
        }
        if depth == 0 {
            return invalid("depth must be positive");
        }
        Ok(Self::Random { n, depth, seed })
    }

    pub fn n(&self) -> usize {
        match self {
            Self::Explicit { n, .. } | Self::Random { n, .. } => *n,
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Self::Explicit { depth, .. } | Self::Random { depth, .. } => *depth,
        }
    }

    /// The conditioning set at the node reached by the samples in `path`.
    pub fn set_at(&self, path: &[u64]) -> Result<Vec<u64>> {
        if path.len() >= self.depth() {
            return invalid("path reaches past the leaves");
        }
        match self {
            Self::Explicit { root, .. } => {
                let mut node = root;
                for x in path {
                    let pos = node
                        .set
                        .iter()
                        .position(|y| y == x)
                        .ok_or_else(|| JuntaError::InvalidParameter(format!("{x} is not in the node's set")))?;
                    node = &node.children[pos];
                }
                Ok(node.set.clone())
            }
            Self::Random { n, seed, .. } => {
                let id = path.iter().fold(path.len() as u64, |h, &x| {
                    (h ^ x.wrapping_add(1)).wrapping_mul(0x0000_0100_0000_01b3)
                });
                let mut r = rng::stream(*seed, id);
                let size = 1usize << n;
                let k = r.random_range(1..=size);
                let mut set: Vec<u64> = sample_indices(&mut r, size, k).into_iter().map(|i| i as u64).collect();
                set.sort_unstable();
                Ok(set)
            }
        }
    }
}

fn set_mass(p: &ExplicitPmf, set: &[u64]) -> f64 {
    set.iter().map(|&x| p.pmf()[x as usize]).sum()
}

fn check_tree(p: &ExplicitPmf, tree: &QueryTree) -> Result<()> {
    if p.n() != tree.n() {
        return Err(JuntaError::DimensionMismatch {
            expected: tree.n(),
            found: p.n(),
        });
    }
    Ok(())
}

/// One execution of the tree on p: x_i ∼ p conditioned on A_{v_i}.
pub fn execute_tree(p: &ExplicitPmf, tree: &QueryTree, rng: &mut impl Rng) -> Result<Vec<Sample>> {
    check_tree(p, tree)?;
    let mut path = Vec::with_capacity(tree.depth());
    for _ in 0..tree.depth() {
        let set = tree.set_at(&path)?;
        let total = set_mass(p, &set);
        if total <= 0.0 {
            return Err(JuntaError::ZeroMass);
        }
        let mut u = rng.random::<f64>() * total;
        let mut pick = *set.last().expect("sets are nonempty");
        for &x in &set {
            let w = p.pmf()[x as usize];
            if u < w {
                pick = x;
                break;
            }
            u -= w;
        }
        path.push(pick);
    }
    Ok(path.into_iter().map(|x| Sample::from_index(p.n(), x)).collect())
}

/// max_x |p(x)·2^n − 1|: the smallest ε for which p is ε-almost uniform.
pub fn almost_uniform_level(p: &ExplicitPmf) -> f64 {
    let size = (1u64 << p.n()) as f64;
    p.pmf().iter().map(|v| (v * size - 1.0).abs()).fold(0.0, f64::max)
}

/// |p(x) − 2^{-n}| ≤ ε·2^{-n} for every x.
pub fn almost_uniform_check(p: &ExplicitPmf, eps: f64) -> bool {
    let unit = 0.5f64.powi(p.n() as i32);
    // relative slack absorbs rounding in the rescaled masses
    p.pmf().iter().all(|&v| (v - unit).abs() <= eps * unit * (1.0 + 1e-12))
}

/// A random ε-almost-uniform pmf: centered uniform perturbations rescaled so
/// that the largest has size ε.
pub fn random_almost_uniform(n: usize, eps: f64, rng: &mut impl Rng) -> Result<ExplicitPmf> {
    let size = 1usize << n;
    let mut u: Vec<f64> = (0..size).map(|_| rng.random_range(-1.0..=1.0)).collect();
    let mean = u.iter().sum::<f64>() / size as f64;
    u.iter_mut().for_each(|v| *v -= mean);
    let max = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let scale = if max > 0.0 { eps / max } else { 0.0 };
    let unit = 1.0 / size as f64;
    ExplicitPmf::new(n, u.into_iter().map(|v| unit * (1.0 + scale * v)).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub enum WalkOutcome {
    Accept(Vec<Sample>),
    Reject,
}

/// Walk the tree drawing uniform elements, then accept with probability
/// min(1, δ·E_{p,T}(x)/E_{U,T}(x)).
pub fn sample_walk(p: &ExplicitPmf, tree: &QueryTree, delta: f64, rng: &mut impl Rng) -> Result<WalkOutcome> {
    check_tree(p, tree)?;
    if !(delta > 0.0 && delta <= 1.0) {
        return invalid(format!("delta {delta} outside (0, 1]"));
    }
    let level = almost_uniform_level(p);
    if level >= 0.5 {
        return invalid(format!("p is only {level}-almost uniform; need < 1/2"));
    }
    let mut path = Vec::with_capacity(tree.depth());
    let mut ratio = 1.0;
    for _ in 0..tree.depth() {
        let set = tree.set_at(&path)?;
        let x = set[rng.random_range(0..set.len())];
        ratio *= p.pmf()[x as usize] * set.len() as f64 / set_mass(p, &set);
        path.push(x);
    }
    if rng.random::<f64>() < (delta * ratio).min(1.0) {
        Ok(WalkOutcome::Accept(path.into_iter().map(|x| Sample::from_index(p.n(), x)).collect()))
    } else {
        Ok(WalkOutcome::Reject)
    }
}

/// A root-to-leaf path with its probabilities under E_{p,T} and E_{U,T}.
#[derive(Debug, Clone, PartialEq)]
pub struct PathLaw {
    pub path: Vec<u64>,
    pub p_prob: f64,
    pub u_prob: f64,
}

/// All root-to-leaf paths with their exact probabilities.
pub fn enumerate_paths(p: &ExplicitPmf, tree: &QueryTree) -> Result<Vec<PathLaw>> {
    check_tree(p, tree)?;
    fn walk(
        p: &ExplicitPmf,
        tree: &QueryTree,
        prefix: &mut Vec<u64>,
        probs: (f64, f64),
        out: &mut Vec<PathLaw>,
    ) -> Result<()> {
        if prefix.len() == tree.depth() {
            out.push(PathLaw {
                path: prefix.clone(),
                p_prob: probs.0,
                u_prob: probs.1,
            });
            return Ok(());
        }
        let set = tree.set_at(prefix)?;
        if set.len() > AUDIT_SET_CAP {
            return invalid(format!("conditioning set of size {} exceeds {AUDIT_SET_CAP}", set.len()));
        }
        let mass = set_mass(p, &set);
        if mass <= 0.0 {
            return Err(JuntaError::ZeroMass);
        }
        for x in set.iter().copied() {
            prefix.push(x);
            let next = (probs.0 * p.pmf()[x as usize] / mass, probs.1 / set.len() as f64);
            walk(p, tree, prefix, next, out)?;
            prefix.pop();
        }
        Ok(())
    }
    if p.n() > AUDIT_DIM_CAP {
        return Err(JuntaError::DimensionCap {
            n: p.n(),
            cap: AUDIT_DIM_CAP,
        });
    }
    if tree.depth() > AUDIT_DEPTH_CAP {
        return invalid(format!("depth {} exceeds {AUDIT_DEPTH_CAP}", tree.depth()));
    }
    let mut out = vec![];
    walk(p, tree, &mut vec![], (1.0, 1.0), &mut out)?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CompressionAudit {
    pub eps: f64,
    pub delta: f64,
    pub depth: usize,
    /// Pr_{E_U}[R] and Pr_{E_p}[R] for R = {E_p < E_U/δ}.
    pub alpha: f64,
    pub beta: f64,
    pub tv_exact: f64,
    pub reject_prob_exact: f64,
    /// α − δβ, the closed form of the reject probability.
    pub reject_prob_closed_form: f64,
    /// Largest gap between the enumerated accepted law and its closed form.
    pub closed_form_gap: f64,
    pub trials: u64,
    pub reject_rate_empirical: f64,
    /// q ≤ ⌊ζ·ln(1/δ)/ε²⌋ with ε, δ < 1/2.
    pub hypothesis_holds: bool,
}

/// Exact law of SampleWalk's accepted output against E_{p,T}, plus an
/// empirical reject rate over `trials` walks.
pub fn compression_audit(
    p: &ExplicitPmf,
    tree: &QueryTree,
    eps: f64,
    delta: f64,
    trials: u64,
    zeta: f64,
    rng: &mut impl Rng,
) -> Result<CompressionAudit> {
    if !almost_uniform_check(p, eps) {
        return invalid(format!("p is not {eps}-almost uniform"));
    }
    let paths = enumerate_paths(p, tree)?;
    let accept: Vec<f64> = paths.iter().map(|l| l.u_prob * (delta * l.p_prob / l.u_prob).min(1.0)).collect();
    let accept_total: f64 = accept.iter().sum();
    let in_r = |l: &PathLaw| l.p_prob < l.u_prob / delta;
    let alpha: f64 = paths.iter().filter(|l| in_r(l)).map(|l| l.u_prob).sum();
    let beta: f64 = paths.iter().filter(|l| in_r(l)).map(|l| l.p_prob).sum();
    let norm = 1.0 - alpha + delta * beta;
    let mut tv = 0.0;
    let mut gap = 0.0f64;
    for (l, a) in paths.iter().zip(&accept) {
        let d = a / accept_total;
        let closed = if in_r(l) { delta * l.p_prob / norm } else { l.u_prob / norm };
        gap = gap.max((d - closed).abs());
        tv += (d - l.p_prob).abs();
    }
    let mut rejects = 0u64;
    for _ in 0..trials {
        if sample_walk(p, tree, delta, rng)? == WalkOutcome::Reject {
            rejects += 1;
        }
    }
    let bound = (zeta * (1.0 / delta).ln() / (eps * eps)).floor();
    Ok(CompressionAudit {
        eps,
        delta,
        depth: tree.depth(),
        alpha,
        beta,
        tv_exact: tv / 2.0,
        reject_prob_exact: 1.0 - accept_total,
        reject_prob_closed_form: alpha - delta * beta,
        closed_form_gap: gap,
        trials,
        reject_rate_empirical: if trials == 0 { f64::NAN } else { rejects as f64 / trials as f64 },
        hypothesis_holds: eps < 0.5 && delta < 0.5 && tree.depth() as f64 <= bound,
    })
}
