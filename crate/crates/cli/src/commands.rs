//! Subcommand drivers. Trial t draws from the seed's streams 2t (oracle)
//! and 2t + 1 (algorithm), or stream t for audits.

use junta_core::compression::{compression_audit, random_almost_uniform, QueryTree};
use junta_core::exact::{
    canonical_junta_distance, canonical_junta_distance_by_restrictions, closest_junta_distance, product_tv_lower_bound,
    sigma_monotonicity_check, structural_audit,
};
use junta_core::junta_tester::{test_junta, TestVerdict};
use junta_core::mean_tester::{make_plan, robust_mean_test, OracleSource, Verdict};
use junta_core::oracle::Cube;
use junta_core::relevant_vars::{find_relevant_variables, learn_junta, learner_sample_count};
use junta_core::{rng, CondOracle, DistributionSpec, ExplicitPmf, ProductDist, ZeroMassPolicy};
use rand::seq::index::sample as index_sample;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{config_err, CliError, CliResult};
use crate::instances::{generate, load_instance, random_pmf};
use crate::options::*;
use crate::output::{emit, opt_cell, vars_cell, Table};

/// Largest n for which reports include exact TV against the hidden spec.
const EXACT_TV_CAP: usize = 16;
/// Redraws allowed when a random audit instance must meet a distance floor.
const MAX_REDRAWS: u32 = 100_000;

pub fn dispatch(cmd: Command) -> CliResult<()> {
    match cmd {
        Command::Gen(a) => gen(&resolve(&a, a.config.as_deref())?),
        Command::Find(a) => find(&resolve(&a, a.base.run.config.as_deref())?),
        Command::Learn(a) => learn(&resolve(&a, a.base.run.config.as_deref())?),
        Command::Test(a) => test(&resolve(&a, a.run.config.as_deref())?),
        Command::Meantest(a) => meantest(&resolve(&a, a.run.config.as_deref())?),
        Command::Audit(AuditCommand::Structural(a)) => structural(&resolve(&a, a.run.config.as_deref())?),
        Command::Audit(AuditCommand::ProductTv(a)) => product_tv(&resolve(&a, a.run.config.as_deref())?),
        Command::Audit(AuditCommand::Monotonicity(a)) => monotonicity(&resolve(&a, a.run.config.as_deref())?),
        Command::CompressAudit(a) => compress(&resolve(&a, a.run.config.as_deref())?),
    }
}

/// Run trials 0..T, on a pool when `--jobs` > 1; results stay in trial order.
fn run_trials<T: Send>(run: &RunArgs, f: impl Fn(u64) -> CliResult<T> + Sync + Send) -> CliResult<Vec<T>> {
    let trials = run.trials()?;
    if run.jobs() == 1 {
        return (0..trials).map(f).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(run.jobs())
        .build()
        .map_err(|e| CliError::Config(e.to_string()))?;
    pool.install(|| (0..trials).into_par_iter().map(&f).collect())
}

fn write(run: &RunArgs, table: Table) -> CliResult<()> {
    emit(run.output.as_deref(), |w| table.write_to(w))
}

fn oracle(spec: &DistributionSpec, args: &InstanceArgs, seed: u64, trial: u64) -> CliResult<(CondOracle, rng::ChaCha8Rng)> {
    let (o, a) = rng::trial_streams(seed, trial);
    let policy = args.zero_mass.map(ZeroMassPolicy::from).unwrap_or_default();
    Ok((CondOracle::new(spec.clone(), policy, o)?, a))
}

fn exact_tv(spec: &DistributionSpec, other: &DistributionSpec) -> CliResult<Option<f64>> {
    if spec.n() > EXACT_TV_CAP {
        return Ok(None);
    }
    Ok(Some(junta_core::tv_distance(spec, other)?))
}

fn gen(a: &GenArgs) -> CliResult<()> {
    let mut r = rng::stream(a.seed.unwrap_or(0), 0);
    let spec = generate(a, &mut r)?;
    emit(a.output.as_deref(), |w| {
        writeln!(w, "{}", spec.to_json())?;
        Ok(())
    })
}

fn find(a: &FindArgs) -> CliResult<()> {
    let b = &a.base;
    let spec = load_instance(b.instance.as_deref())?;
    let (k, eps) = (required(b.k, "k")?, required(b.eps, "eps")?);
    let cfg = b.run.algo.config();
    let seed = b.run.seed();
    let relevant = spec.relevant_variables();
    let rows = run_trials(&b.run, |t| {
        let (mut o, mut r) = oracle(&spec, b, seed, t)?;
        let rep = find_relevant_variables(&mut o, k, eps, &cfg, &mut r)?;
        let mut found = rep.found.clone();
        found.sort_unstable();
        Ok(vec![
            t.to_string(),
            seed.to_string(),
            vars_cell(&found),
            rep.queries.to_string(),
            rep.cumulative_budget.to_string(),
            (found == relevant).to_string(),
        ])
    })?;
    let mut table = Table::new("junta-find/1", &["trial", "seed", "J", "queries", "budget", "correct"]);
    table.rows = rows;
    write(&b.run, table)
}

fn learn(a: &LearnArgs) -> CliResult<()> {
    let b = &a.base;
    let spec = load_instance(b.instance.as_deref())?;
    let eps = required(b.eps, "eps")?;
    let cfg = b.run.algo.config();
    let seed = b.run.seed();
    let given = a.vars.as_deref().map(|v| parse_vars(v, spec.n())).transpose()?;
    let k = match &given {
        Some(_) => 0,
        None => required(b.k, "k")?,
    };
    let rows = run_trials(&b.run, |t| {
        let (mut o, mut r) = oracle(&spec, b, seed, t)?;
        let vars = match &given {
            Some(v) => v.clone(),
            None => find_relevant_variables(&mut o, k, eps.min(0.25), &cfg, &mut r)?.found,
        };
        let learned = learn_junta(&mut o, &vars, eps, &cfg)?;
        let tv = exact_tv(&spec, &learned.into())?;
        Ok(vec![
            t.to_string(),
            seed.to_string(),
            vars_cell(&vars),
            learner_sample_count(vars.len(), eps, &cfg).to_string(),
            o.queries().to_string(),
            opt_cell(tv),
        ])
    })?;
    let mut table = Table::new("junta-learn/1", &["trial", "seed", "J", "samples", "queries", "tv"]);
    table.rows = rows;
    write(&b.run, table)
}

fn test(a: &InstanceArgs) -> CliResult<()> {
    let spec = load_instance(a.instance.as_deref())?;
    let (k, eps) = (required(a.k, "k")?, required(a.eps, "eps")?);
    let cfg = a.run.algo.config();
    let seed = a.run.seed();
    let rows = run_trials(&a.run, |t| {
        let (mut o, mut r) = oracle(&spec, a, seed, t)?;
        let rep = test_junta(&mut o, k, eps, &cfg, &mut r)?;
        let verdict = match rep.verdict {
            TestVerdict::Accept => "accept",
            TestVerdict::Reject => "reject",
        };
        Ok(vec![
            t.to_string(),
            seed.to_string(),
            verdict.to_string(),
            vars_cell(&rep.finder.found),
            rep.finder.queries.to_string(),
            rep.mean_tests.to_string(),
            rep.blocks.len().to_string(),
            rep.queries.to_string(),
        ])
    })?;
    let mut table = Table::new(
        "junta-test/1",
        &["trial", "seed", "verdict", "found", "finder_queries", "mean_tests", "blocks", "queries"],
    );
    table.rows = rows;
    write(&a.run, table)
}

fn meantest(a: &InstanceArgs) -> CliResult<()> {
    let spec = load_instance(a.instance.as_deref())?;
    let (k, eps) = (required(a.k, "k")?, required(a.eps, "eps")?);
    let cfg = a.run.algo.config();
    let seed = a.run.seed();
    let plan = make_plan(spec.n(), k, eps, &cfg)?;
    let rows = run_trials(&a.run, |t| {
        let (mut o, _) = oracle(&spec, a, seed, t)?;
        let out = robust_mean_test(&mut OracleSource::new(&mut o, Cube::full(spec.n())), &plan)?;
        let verdict = match out.verdict {
            Verdict::IsJunta => "is-junta",
            Verdict::NotJunta => "not-junta",
        };
        Ok(vec![
            t.to_string(),
            seed.to_string(),
            verdict.to_string(),
            opt_cell(out.rejected_at),
            plan.q.to_string(),
            o.queries().to_string(),
            out.z.iter().map(f64::to_string).collect::<Vec<_>>().join(";"),
        ])
    })?;
    let mut table = Table::new("junta-meantest/1", &["trial", "seed", "verdict", "rejected_at", "q", "queries", "z"]);
    table.rows = rows;
    write(&a.run, table)
}

fn explicit_instance(path: Option<&std::path::Path>) -> CliResult<Option<ExplicitPmf>> {
    path.map(|p| Ok(load_instance(Some(p))?.to_explicit()?)).transpose()
}

fn structural(a: &StructuralArgs) -> CliResult<()> {
    let cfg = a.run.algo.config();
    let seed = a.run.seed();
    let given = explicit_instance(a.instance.as_deref())?;
    let mut run = a.run.clone();
    if given.is_some() {
        run.trials = Some(1);
    }
    let rows = run_trials(&run, |t| {
        let (p, j) = match &given {
            Some(p) => (p.clone(), parse_vars(a.vars.as_deref().unwrap_or(""), p.n())?),
            None => random_audit_instance(a, seed, t)?,
        };
        let rep = structural_audit(&p, &j, cfg.c_exponent)?;
        Ok(vec![
            t.to_string(),
            seed.to_string(),
            p.n().to_string(),
            vars_cell(&j),
            rep.lhs.to_string(),
            rep.rhs_sum.to_string(),
            opt_cell(rep.implied_exponent),
            opt_cell(rep.predicted_rhs),
            canonical_junta_distance(&p, &j)?.to_string(),
            canonical_junta_distance_by_restrictions(&p, &j)?.to_string(),
        ])
    })?;
    let mut table = Table::new(
        "junta-audit-structural/1",
        &[
            "trial",
            "seed",
            "n",
            "J",
            "lhs",
            "rhs_sum",
            "implied_c",
            "predicted_rhs",
            "canonical",
            "canonical_by_restrictions",
        ],
    );
    table.rows = rows;
    write(&a.run, table)
}

fn random_audit_instance(a: &StructuralArgs, seed: u64, t: u64) -> CliResult<(ExplicitPmf, Vec<usize>)> {
    let n = required(a.n, "n")?;
    let k = a.k.unwrap_or(1);
    if k > n {
        return config_err(format!("k = {k} exceeds n = {n}"));
    }
    let mut r = rng::stream(seed, t);
    for _ in 0..MAX_REDRAWS {
        let p = random_pmf(n, &mut r)?;
        let mut j = index_sample(&mut r, n, k).into_vec();
        j.sort_unstable();
        if a.min_distance.is_none_or(|d| closest_junta_distance(&p, &j).is_ok_and(|v| v >= d)) {
            return Ok((p, j));
        }
    }
    config_err("no random instance met --min-distance")
}

fn product_tv(a: &ProductTvArgs) -> CliResult<()> {
    let cfg = a.run.algo.config();
    let seed = a.run.seed();
    let given = match a.instance.as_deref() {
        Some(p) => match load_instance(Some(p))? {
            DistributionSpec::Product(d) => Some(d),
            _ => return config_err("product-tv audits need a product instance"),
        },
        None => None,
    };
    let (lo, hi) = (a.bias_low.unwrap_or(0.4), a.bias_high.unwrap_or(0.6));
    if !(0.0..=hi).contains(&lo) || hi > 1.0 {
        return config_err(format!("bias range [{lo}, {hi}] is not inside [0, 1]"));
    }
    let mut run = a.run.clone();
    if given.is_some() {
        run.trials = Some(1);
    }
    let rows = run_trials(&run, |t| {
        let p = match &given {
            Some(p) => p.clone(),
            None => {
                let n = required(a.n, "n")?;
                let mut r = rng::stream(seed, t);
                ProductDist::new((0..n).map(|_| r.random_range(lo..=hi)).collect())?
            }
        };
        let mu = p.mean_vector();
        let c = product_tv_lower_bound(&p, &cfg)?;
        Ok(vec![
            t.to_string(),
            seed.to_string(),
            p.n().to_string(),
            mu.l2().to_string(),
            mu.linf().to_string(),
            c.bound.to_string(),
            c.exact_tv.to_string(),
            c.holds.to_string(),
        ])
    })?;
    let mut table = Table::new(
        "junta-audit-product-tv/1",
        &["trial", "seed", "n", "l2", "linf", "bound", "exact_tv", "holds"],
    );
    table.rows = rows;
    write(&a.run, table)
}

fn monotonicity(a: &MonotonicityArgs) -> CliResult<()> {
    let seed = a.run.seed();
    let grid = a.grid.unwrap_or(5);
    if grid < 2 {
        return config_err("--grid needs at least 2 points");
    }
    let given = explicit_instance(a.instance.as_deref())?;
    let mut run = a.run.clone();
    if given.is_some() {
        run.trials = Some(1);
    }
    let rows = run_trials(&run, |t| {
        let h = match &given {
            Some(h) => h.clone(),
            None => random_pmf(required(a.n, "n")?, &mut rng::stream(seed, t))?,
        };
        let m = h.n().max(1) as f64;
        let sigmas: Vec<f64> = (0..grid).map(|i| i as f64 / ((grid - 1) as f64 * m)).collect();
        let mut pairs = 0u32;
        let mut margin = f64::INFINITY;
        let mut holds = true;
        for (i, &s1) in sigmas.iter().enumerate() {
            for &s2 in &sigmas[..=i] {
                let c = sigma_monotonicity_check(&h, s1, s2)?;
                pairs += 1;
                margin = margin.min(c.at_sigma1 - c.at_sigma2);
                holds &= c.holds;
            }
        }
        Ok(vec![
            t.to_string(),
            seed.to_string(),
            h.n().to_string(),
            pairs.to_string(),
            margin.to_string(),
            holds.to_string(),
        ])
    })?;
    let mut table = Table::new(
        "junta-audit-monotonicity/1",
        &["trial", "seed", "m", "pairs", "min_margin", "holds"],
    );
    table.rows = rows;
    write(&a.run, table)
}

fn compress(a: &CompressArgs) -> CliResult<()> {
    let cfg = a.run.algo.config();
    let seed = a.run.seed();
    let eps = a.eps.unwrap_or(0.05);
    let delta = a.delta.unwrap_or(0.25);
    let depth = a.depth.unwrap_or(2);
    let runs = a.runs.unwrap_or(10_000);
    let given = explicit_instance(a.instance.as_deref())?;
    let rows = run_trials(&a.run, |t| {
        let mut r = rng::stream(seed, t);
        let p = match &given {
            Some(p) => p.clone(),
            None => random_almost_uniform(a.n.unwrap_or(2), eps, &mut r)?,
        };
        let tree = QueryTree::random(p.n(), depth, r.random())?;
        let au = compression_audit(&p, &tree, eps, delta, runs, cfg.zeta, &mut r)?;
        let sd = (au.reject_prob_exact * (1.0 - au.reject_prob_exact) / runs as f64).sqrt();
        let z = if sd > 0.0 {
            (au.reject_rate_empirical - au.reject_prob_exact) / sd
        } else {
            0.0
        };
        Ok(vec![
            t.to_string(),
            seed.to_string(),
            au.alpha.to_string(),
            au.beta.to_string(),
            au.tv_exact.to_string(),
            au.reject_prob_exact.to_string(),
            au.reject_prob_closed_form.to_string(),
            au.reject_rate_empirical.to_string(),
            z.to_string(),
            au.hypothesis_holds.to_string(),
        ])
    })?;
    let mut table = Table::new(
        "junta-compress-audit/1",
        &[
            "trial",
            "seed",
            "alpha",
            "beta",
            "tv",
            "reject_exact",
            "reject_closed_form",
            "reject_empirical",
            "reject_z",
            "hypothesis",
        ],
    );
    table.rows = rows;
    write(&a.run, table)
}
