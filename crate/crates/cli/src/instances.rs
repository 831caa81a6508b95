//! Instance generation and loading.

use std::path::Path;

use junta_core::hard_instances::{build_gadget, parity_instance, pmf_instance_from_boolean, sample_dno, sample_dyes};
use junta_core::{DistributionSpec, ExplicitPmf, JuntaDist, ProductDist};
use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::error::{config_err, CliError, CliResult};
use crate::options::{parse_list, parse_vars, required, GenArgs, GenKind};

pub fn load_instance(path: Option<&Path>) -> CliResult<DistributionSpec> {
    let Some(path) = path else {
        return config_err("--instance is required");
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    Ok(DistributionSpec::from_json(&text)?)
}

/// A Dirichlet(1, …, 1) pmf over {-1,1}^n.
pub fn random_pmf(n: usize, rng: &mut impl Rng) -> CliResult<ExplicitPmf> {
    let w: Vec<f64> = (0..1usize << n).map(|_| Exp1.sample(rng)).collect();
    Ok(ExplicitPmf::from_weights(n, w)?)
}

pub fn generate(args: &GenArgs, rng: &mut impl Rng) -> CliResult<DistributionSpec> {
    let kind = required(args.kind, "kind")?;
    let n = required(args.n, "n")?;
    let vars = |rng_free: bool| -> CliResult<Vec<usize>> {
        match &args.vars {
            Some(v) => parse_vars(v, n),
            None if rng_free => config_err("--vars is required"),
            None => Ok(vec![]),
        }
    };
    Ok(match kind {
        GenKind::Parity => parity_instance(n, &vars(true)?, required(args.eps, "eps")?)?.into(),
        GenKind::BooleanPmf => {
            let table: Vec<i8> = parse_list(args.table.as_deref().unwrap_or(""), "table")?;
            pmf_instance_from_boolean(&table, n, required(args.eps, "eps")?)?.into()
        }
        GenKind::Dyes | GenKind::Dno => {
            let g = build_gadget(n, required(args.eps, "eps")?)?;
            let draw = if kind == GenKind::Dyes {
                sample_dyes(&g, rng)?
            } else {
                sample_dno(&g, rng)?
            };
            draw.dist.into()
        }
        GenKind::Junta => {
            let vars = vars(true)?;
            let inner = match &args.inner {
                Some(text) => ExplicitPmf::new(vars.len(), parse_list(text, "inner pmf")?)?,
                None => random_pmf(vars.len(), rng)?,
            };
            JuntaDist::new(n, vars, inner)?.into()
        }
        GenKind::Product => {
            let bias: Vec<f64> = parse_list(required(args.bias.as_deref(), "bias")?, "bias")?;
            let bias = if bias.len() == 1 { vec![bias[0]; n] } else { bias };
            if bias.len() != n {
                return config_err(format!("expected {n} biases, got {}", bias.len()));
            }
            ProductDist::new(bias)?.into()
        }
        GenKind::Explicit => match &args.pmf {
            Some(text) => ExplicitPmf::new(n, parse_list(text, "pmf")?)?.into(),
            None => random_pmf(n, rng)?.into(),
        },
    })
}
