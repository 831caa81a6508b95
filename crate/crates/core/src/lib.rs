//! Learning and testing junta distributions over {-1,1}^n with subcube
//! conditioning queries.
//!
//! The crate provides distribution representations and a query-counting
//! conditional oracle, the relevant-variable finder and junta learner, the
//! robust mean tester and the junta tester, lower-bound instance generators,
//! brute-force exact oracles for small n, and a simulator for the
//! rejection-sampling walk over query trees.

pub mod compression;
pub mod config;
pub mod dist;
pub mod error;
pub mod exact;
pub mod hard_instances;
pub mod junta_tester;
pub mod mean_tester;
pub mod oracle;
pub mod relevant_vars;
pub mod restriction;
pub mod rng;

pub use config::AlgoConfig;
pub use dist::{
    empirical_mean, project_exact, restrict_exact, tv_distance, DistributionSpec, ExplicitPmf,
    JuntaDist, MeanVector, ProductDist, Restriction, Sample,
};
pub use error::{JuntaError, Result};
pub use oracle::{CondOracle, ZeroMassPolicy};
