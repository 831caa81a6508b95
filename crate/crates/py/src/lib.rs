//! Python bindings: distributions, the finder, learner and testers, exact
//! oracles and lower-bound instances. Variables are 1-based on this side.

use std::collections::BTreeMap;

use junta_core::compression::{compression_audit as audit_walk, QueryTree};
use junta_core::exact;
use junta_core::hard_instances::{build_gadget, parity_instance, sample_dno, sample_dyes};
use junta_core::junta_tester::{test_junta as run_tester, TestVerdict};
use junta_core::mean_tester::{make_plan, robust_mean_test, OracleSource, Verdict};
use junta_core::oracle::Cube;
use junta_core::relevant_vars::{find_relevant_variables, learn_junta as run_learner};
use junta_core::{rng, AlgoConfig, CondOracle, DistributionSpec, ExplicitPmf, JuntaDist, JuntaError, ProductDist, ZeroMassPolicy};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn py_err(e: JuntaError) -> PyErr {
    match e {
        JuntaError::ZeroMass | JuntaError::SourceExhausted { .. } => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn zero_based(vars: &[usize], n: usize) -> PyResult<Vec<usize>> {
    if vars.iter().any(|&v| v == 0 || v > n) {
        return Err(PyValueError::new_err(format!("variables must lie in 1..={n}")));
    }
    let mut out: Vec<usize> = vars.iter().map(|v| v - 1).collect();
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

fn one_based(vars: &[usize]) -> Vec<usize> {
    let mut out: Vec<usize> = vars.iter().map(|v| v + 1).collect();
    out.sort_unstable();
    out
}

/// A distribution over {-1,1}^n.
#[pyclass(name = "Distribution", from_py_object)]
#[derive(Clone)]
struct PyDistribution {
    inner: DistributionSpec,
}

#[pymethods]
impl PyDistribution {
    #[staticmethod]
    fn explicit(n: usize, pmf: Vec<f64>) -> PyResult<Self> {
        Ok(ExplicitPmf::new(n, pmf).map_err(py_err)?.into())
    }

    #[staticmethod]
    fn product(bias: Vec<f64>) -> PyResult<Self> {
        Ok(ProductDist::new(bias).map_err(py_err)?.into())
    }

    #[staticmethod]
    fn junta(n: usize, vars: Vec<usize>, inner: Vec<f64>) -> PyResult<Self> {
        let vars = zero_based(&vars, n)?;
        let inner = ExplicitPmf::new(vars.len(), inner).map_err(py_err)?;
        Ok(JuntaDist::new(n, vars, inner).map_err(py_err)?.into())
    }

    #[staticmethod]
    fn uniform(n: usize) -> Self {
        Self {
            inner: DistributionSpec::uniform(n),
        }
    }

    #[staticmethod]
    fn parity(n: usize, vars: Vec<usize>, eps: f64) -> PyResult<Self> {
        Ok(parity_instance(n, &zero_based(&vars, n)?, eps).map_err(py_err)?.into())
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: DistributionSpec::from_json(text).map_err(py_err)?,
        })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    fn pmf(&self) -> PyResult<Vec<f64>> {
        Ok(self.inner.to_explicit().map_err(py_err)?.pmf().to_vec())
    }

    fn mean_vector(&self) -> Vec<f64> {
        self.inner.mean_vector().0
    }

    fn relevant_variables(&self) -> Vec<usize> {
        one_based(&self.inner.relevant_variables())
    }

    fn tv(&self, other: &PyDistribution) -> PyResult<f64> {
        junta_core::tv_distance(&self.inner, &other.inner).map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!("Distribution({})", self.inner.to_json())
    }
}

impl<T: Into<DistributionSpec>> From<T> for PyDistribution {
    fn from(d: T) -> Self {
        Self { inner: d.into() }
    }
}

/// Algorithm constants; `Config.from_json` accepts camelCase keys.
#[pyclass(name = "Config", from_py_object)]
#[derive(Clone, Default)]
struct PyConfig {
    inner: AlgoConfig,
}

#[pymethods]
impl PyConfig {
    #[new]
    fn new() -> Self {
        Self::default()
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner = serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(Self { inner })
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.inner).expect("config serializes")
    }
}

fn cfg(c: Option<&PyConfig>) -> AlgoConfig {
    c.map(|c| c.inner.clone()).unwrap_or_default()
}

fn oracle(d: &PyDistribution, seed: u64, trial: u64) -> PyResult<(CondOracle, rng::ChaCha8Rng)> {
    let (o, a) = rng::trial_streams(seed, trial);
    Ok((CondOracle::new(d.inner.clone(), ZeroMassPolicy::default(), o).map_err(py_err)?, a))
}

/// Relevant-variable search; returns (found, queries, cumulative budget).
#[pyfunction]
#[pyo3(signature = (dist, k, eps, config=None, seed=0, trial=0))]
fn find_variables(
    dist: &PyDistribution,
    k: usize,
    eps: f64,
    config: Option<&PyConfig>,
    seed: u64,
    trial: u64,
) -> PyResult<(Vec<usize>, u64, usize)> {
    let (mut o, mut a) = oracle(dist, seed, trial)?;
    let rep = find_relevant_variables(&mut o, k, eps, &cfg(config), &mut a).map_err(py_err)?;
    Ok((rep.sorted_one_based(), rep.queries, rep.cumulative_budget))
}

/// Learn the junta over `vars` from unconditioned samples.
#[pyfunction]
#[pyo3(signature = (dist, vars, eps, config=None, seed=0, trial=0))]
fn learn_junta(
    dist: &PyDistribution,
    vars: Vec<usize>,
    eps: f64,
    config: Option<&PyConfig>,
    seed: u64,
    trial: u64,
) -> PyResult<PyDistribution> {
    let vars = zero_based(&vars, dist.inner.n())?;
    let (mut o, _) = oracle(dist, seed, trial)?;
    Ok(run_learner(&mut o, &vars, eps, &cfg(config)).map_err(py_err)?.into())
}

/// The junta tester; returns (accepted, found, queries).
#[pyfunction]
#[pyo3(signature = (dist, k, eps, config=None, seed=0, trial=0))]
fn test_junta(
    dist: &PyDistribution,
    k: usize,
    eps: f64,
    config: Option<&PyConfig>,
    seed: u64,
    trial: u64,
) -> PyResult<(bool, Vec<usize>, u64)> {
    let (mut o, mut a) = oracle(dist, seed, trial)?;
    let rep = run_tester(&mut o, k, eps, &cfg(config), &mut a).map_err(py_err)?;
    Ok((rep.verdict == TestVerdict::Accept, rep.finder.sorted_one_based(), rep.queries))
}

/// One robust mean test on the whole cube; returns (is_junta, Z statistics).
#[pyfunction]
#[pyo3(signature = (dist, k, eps, config=None, seed=0, trial=0))]
fn mean_test(
    dist: &PyDistribution,
    k: usize,
    eps: f64,
    config: Option<&PyConfig>,
    seed: u64,
    trial: u64,
) -> PyResult<(bool, Vec<f64>)> {
    let n = dist.inner.n();
    let plan = make_plan(n, k, eps, &cfg(config)).map_err(py_err)?;
    let (mut o, _) = oracle(dist, seed, trial)?;
    let out = robust_mean_test(&mut OracleSource::new(&mut o, Cube::full(n)), &plan).map_err(py_err)?;
    Ok((out.verdict == Verdict::IsJunta, out.z))
}

fn explicit(d: &PyDistribution) -> PyResult<ExplicitPmf> {
    d.inner.to_explicit().map_err(py_err)
}

#[pyfunction]
fn closest_junta_distance(dist: &PyDistribution, vars: Vec<usize>) -> PyResult<f64> {
    let p = explicit(dist)?;
    exact::closest_junta_distance(&p, &zero_based(&vars, p.n())?).map_err(py_err)
}

/// Exact distance to the nearest k-junta and a minimizing variable set.
#[pyfunction]
fn distance_to_k_junta(dist: &PyDistribution, k: usize) -> PyResult<(f64, Vec<usize>)> {
    let (d, j) = exact::distance_to_k_junta(&explicit(dist)?, k).map_err(py_err)?;
    Ok((d, one_based(&j)))
}

#[pyfunction]
#[pyo3(signature = (dist, vars, c_exponent=3.0))]
fn structural_audit(dist: &PyDistribution, vars: Vec<usize>, c_exponent: f64) -> PyResult<BTreeMap<String, f64>> {
    let p = explicit(dist)?;
    let a = exact::structural_audit(&p, &zero_based(&vars, p.n())?, c_exponent).map_err(py_err)?;
    Ok(BTreeMap::from([
        ("lhs".into(), a.lhs),
        ("rhsSum".into(), a.rhs_sum),
        ("impliedExponent".into(), a.implied_exponent.unwrap_or(f64::NAN)),
    ]))
}

/// (bound, exact TV) for a product distribution.
#[pyfunction]
#[pyo3(signature = (dist, config=None))]
fn product_tv_lower_bound(dist: &PyDistribution, config: Option<&PyConfig>) -> PyResult<(f64, f64)> {
    let DistributionSpec::Product(p) = &dist.inner else {
        return Err(PyValueError::new_err("a product distribution is required"));
    };
    let c = exact::product_tv_lower_bound(p, &cfg(config)).map_err(py_err)?;
    Ok((c.bound, c.exact_tv))
}

/// A D_yes or D_no product instance of the moment gadget.
#[pyfunction]
#[pyo3(signature = (n, eps, yes, seed=0))]
fn gadget_instance(n: usize, eps: f64, yes: bool, seed: u64) -> PyResult<PyDistribution> {
    let g = build_gadget(n, eps).map_err(py_err)?;
    let mut r = rng::stream(seed, 0);
    let draw = if yes { sample_dyes(&g, &mut r) } else { sample_dno(&g, &mut r) }.map_err(py_err)?;
    Ok(draw.dist.into())
}

/// Audit of the rejection-sampling walk on a random query tree.
#[pyfunction]
#[pyo3(signature = (dist, depth, eps, delta, trials=10_000, seed=0, config=None))]
fn compression_audit(
    dist: &PyDistribution,
    depth: usize,
    eps: f64,
    delta: f64,
    trials: u64,
    seed: u64,
    config: Option<&PyConfig>,
) -> PyResult<BTreeMap<String, f64>> {
    let p = explicit(dist)?;
    let tree = QueryTree::random(p.n(), depth, seed).map_err(py_err)?;
    let mut r = rng::stream(seed, 1);
    let a = audit_walk(&p, &tree, eps, delta, trials, cfg(config).zeta, &mut r).map_err(py_err)?;
    Ok(BTreeMap::from([
        ("alpha".into(), a.alpha),
        ("beta".into(), a.beta),
        ("tv".into(), a.tv_exact),
        ("rejectExact".into(), a.reject_prob_exact),
        ("rejectEmpirical".into(), a.reject_rate_empirical),
    ]))
}

#[pymodule]
fn junta(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDistribution>()?;
    m.add_class::<PyConfig>()?;
    m.add_function(wrap_pyfunction!(find_variables, m)?)?;
    m.add_function(wrap_pyfunction!(learn_junta, m)?)?;
    m.add_function(wrap_pyfunction!(test_junta, m)?)?;
    m.add_function(wrap_pyfunction!(mean_test, m)?)?;
    m.add_function(wrap_pyfunction!(closest_junta_distance, m)?)?;
    m.add_function(wrap_pyfunction!(distance_to_k_junta, m)?)?;
    m.add_function(wrap_pyfunction!(structural_audit, m)?)?;
    m.add_function(wrap_pyfunction!(product_tv_lower_bound, m)?)?;
    m.add_function(wrap_pyfunction!(gadget_instance, m)?)?;
    m.add_function(wrap_pyfunction!(compression_audit, m)?)?;
    Ok(())
}
