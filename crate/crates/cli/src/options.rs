//! Command-line flags. Every flag may also come from a JSON `--config` file
//! (camelCase keys); flags given on the command line override the file.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use junta_core::{AlgoConfig, ZeroMassPolicy};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{config_err, CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "junta", version, about = "Learn and test junta distributions with subcube conditioning")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Emit an instance as JSON.
    Gen(GenArgs),
    /// Run the relevant-variable finder.
    Find(FindArgs),
    /// Learn the junta over given or found variables.
    Learn(LearnArgs),
    /// Run the junta tester.
    Test(InstanceArgs),
    /// Run the robust mean tester on the whole cube.
    Meantest(InstanceArgs),
    /// Exact audits on small instances.
    #[command(subcommand)]
    Audit(AuditCommand),
    /// Audit the rejection-sampling walk over random query trees.
    CompressAudit(CompressArgs),
}

#[derive(Debug, Subcommand)]
pub enum AuditCommand {
    /// Structural lemma: closest-junta distance against restricted mean norms.
    Structural(StructuralArgs),
    /// Product TV lower bound against exact TV.
    ProductTv(ProductTvArgs),
    /// Expected restricted mean norm is nondecreasing in σ.
    Monotonicity(MonotonicityArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GenKind {
    Parity,
    BooleanPmf,
    Dyes,
    Dno,
    Junta,
    Product,
    Explicit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ZeroMass {
    Uniform,
    Error,
}

impl From<ZeroMass> for ZeroMassPolicy {
    fn from(z: ZeroMass) -> Self {
        match z {
            ZeroMass::Uniform => ZeroMassPolicy::UniformFallback,
            ZeroMass::Error => ZeroMassPolicy::Error,
        }
    }
}

/// Overrides of the algorithm constants.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct AlgoArgs {
    /// Multiplier of the finder's pair and ε₀ constants.
    #[arg(long = "scale", visible_alias = "budget-constant-scale")]
    #[serde(alias = "scale")]
    pub budget_constant_scale: Option<f64>,
    /// Multiplier of the finder's per-pair sample constant.
    #[arg(long)]
    pub sample_scale: Option<f64>,
    /// Exponent of the log factor in ε₀.
    #[arg(long)]
    pub eps0_log_power: Option<i32>,
    #[arg(long)]
    pub tester_scale: Option<f64>,
    #[arg(long)]
    #[serde(alias = "Rconstant")]
    pub r_constant: Option<f64>,
    #[arg(long)]
    pub mean_tester_c: Option<f64>,
    #[arg(long)]
    pub mean_tester_a: Option<f64>,
    /// Fixes the mean tester's per-side sample count.
    #[arg(long)]
    pub mean_tester_q: Option<u64>,
    #[arg(long)]
    pub c_exponent: Option<f64>,
    #[arg(long)]
    #[serde(alias = "c1star")]
    pub c1_star: Option<f64>,
    #[arg(long)]
    pub learn_constant: Option<f64>,
    #[arg(long)]
    pub zeta: Option<f64>,
}

impl AlgoArgs {
    pub fn config(&self) -> AlgoConfig {
        let d = AlgoConfig::default();
        AlgoConfig {
            budget_constant_scale: self.budget_constant_scale.unwrap_or(d.budget_constant_scale),
            sample_scale: self.sample_scale.unwrap_or(d.sample_scale),
            eps0_log_power: self.eps0_log_power.unwrap_or(d.eps0_log_power),
            tester_scale: self.tester_scale.unwrap_or(d.tester_scale),
            r_constant: self.r_constant.unwrap_or(d.r_constant),
            mean_tester_c: self.mean_tester_c.unwrap_or(d.mean_tester_c),
            mean_tester_a: self.mean_tester_a.unwrap_or(d.mean_tester_a),
            mean_tester_q_override: self.mean_tester_q.or(d.mean_tester_q_override),
            c_exponent: self.c_exponent.unwrap_or(d.c_exponent),
            c1_star: self.c1_star.unwrap_or(d.c1_star),
            learn_constant: self.learn_constant.unwrap_or(d.learn_constant),
            zeta: self.zeta.unwrap_or(d.zeta),
        }
    }
}

/// Seed, trial count, parallelism and output shared by the trial commands.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct RunArgs {
    /// JSON file supplying any flag.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of trials (or random instances for audits).
    #[arg(long, visible_alias = "random")]
    #[serde(alias = "random")]
    pub trials: Option<u64>,
    /// Worker threads; rows stay in trial order.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Output path; standard output when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub algo: AlgoArgs,
}

impl RunArgs {
    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn trials(&self) -> CliResult<u64> {
        match self.trials.unwrap_or(1) {
            0 => config_err("trials must be at least 1"),
            t => Ok(t),
        }
    }

    pub fn jobs(&self) -> usize {
        self.jobs.unwrap_or(1).max(1)
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct GenArgs {
    #[arg(long, value_enum)]
    pub kind: Option<GenKind>,
    #[arg(long)]
    pub n: Option<usize>,
    /// 1-based comma-separated variables.
    #[arg(long)]
    pub vars: Option<String>,
    #[arg(long)]
    pub eps: Option<f64>,
    /// ±1 truth table over the first coordinates, comma-separated.
    #[arg(long, allow_hyphen_values = true)]
    pub table: Option<String>,
    /// Biases Pr[x_i = +1]; a single value is repeated n times.
    #[arg(long)]
    pub bias: Option<String>,
    /// Inner pmf of a junta; random when absent.
    #[arg(long)]
    pub inner: Option<String>,
    /// Explicit pmf; random when absent.
    #[arg(long)]
    pub pmf: Option<String>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct InstanceArgs {
    /// Instance JSON file.
    #[arg(long)]
    pub instance: Option<PathBuf>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long, value_enum)]
    pub zero_mass: Option<ZeroMass>,
    #[command(flatten)]
    #[serde(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct FindArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub base: InstanceArgs,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct LearnArgs {
    /// 1-based variables to learn over; found with the finder when absent.
    #[arg(long)]
    pub vars: Option<String>,
    #[command(flatten)]
    #[serde(flatten)]
    pub base: InstanceArgs,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct StructuralArgs {
    /// Explicit instance; random Dirichlet pmfs when absent.
    #[arg(long)]
    pub instance: Option<PathBuf>,
    /// 1-based J for a given instance.
    #[arg(long)]
    pub vars: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    /// |J| for random instances.
    #[arg(long)]
    pub k: Option<usize>,
    /// Redraw random instances until the closest-junta distance reaches this.
    #[arg(long)]
    pub min_distance: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct ProductTvArgs {
    /// Product instance; random biases when absent.
    #[arg(long)]
    pub instance: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub bias_low: Option<f64>,
    #[arg(long)]
    pub bias_high: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct MonotonicityArgs {
    /// Explicit instance; random Dirichlet pmfs when absent.
    #[arg(long)]
    pub instance: Option<PathBuf>,
    /// Dimension m of random instances.
    #[arg(long)]
    pub n: Option<usize>,
    /// Grid points on [0, 1/m].
    #[arg(long)]
    pub grid: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct CompressArgs {
    /// Explicit instance; random almost-uniform pmfs when absent.
    #[arg(long)]
    pub instance: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Query count q (tree depth).
    #[arg(long)]
    pub depth: Option<usize>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    /// Walks per instance for the empirical reject rate.
    #[arg(long)]
    pub runs: Option<u64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub run: RunArgs,
}

/// Overlay the non-null flags on the config file's object and parse the
/// result back. Unknown keys in the file are rejected.
pub fn resolve<T: Serialize + DeserializeOwned + Clone>(flags: &T, config: Option<&Path>) -> CliResult<T> {
    let Some(path) = config else {
        return Ok(flags.clone());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let file: Value = serde_json::from_str(&text).map_err(json_err)?;
    let Value::Object(mut merged) = file else {
        return config_err("config file must hold a JSON object");
    };
    let Value::Object(over) = to_value(flags)? else {
        return config_err("flags do not form an object");
    };
    let known: BTreeSet<&String> = over.keys().collect();
    let aliases = ["scale", "random", "Rconstant", "c1star"];
    if let Some(bad) = merged.keys().find(|k| !known.contains(k) && !aliases.contains(&k.as_str())) {
        return config_err(format!("unknown config key {bad:?}"));
    }
    for (k, v) in over {
        if !v.is_null() {
            merged.insert(k, v);
        }
    }
    serde_json::from_value(Value::Object(merged)).map_err(json_err)
}

fn to_value<T: Serialize>(v: &T) -> CliResult<Value> {
    serde_json::to_value(v).map_err(json_err)
}

fn json_err(e: serde_json::Error) -> CliError {
    CliError::Config(e.to_string())
}

/// Parse a comma-separated list.
pub fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> CliResult<Vec<T>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| CliError::Config(format!("bad {what} entry {s:?}"))))
        .collect()
}

/// Parse 1-based variables into sorted 0-based indices below n.
pub fn parse_vars(text: &str, n: usize) -> CliResult<Vec<usize>> {
    let mut vars: Vec<usize> = parse_list(text, "variable")?;
    if vars.iter().any(|&v| v == 0 || v > n) {
        return config_err(format!("variables must lie in 1..={n}"));
    }
    vars.iter_mut().for_each(|v| *v -= 1);
    vars.sort_unstable();
    vars.dedup();
    Ok(vars)
}

pub fn required<T: Copy>(v: Option<T>, name: &str) -> CliResult<T> {
    v.ok_or_else(|| CliError::Config(format!("--{name} is required")))
}
