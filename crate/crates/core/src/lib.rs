//! Luria-Delbrück mutant-count distributions under Bellman-Harris models of
//! cell proliferation.
//!
//! The crate solves for the clone-size generating function `g(s)` of a
//! mutant clone with arbitrary offspring and life-time laws, inverts
//! `exp(m (g(s) - 1))` into the mutant-count PMF, compares its normalized
//! form with the index-1 stable limit law, simulates fluctuation experiments
//! exactly, and fits mutation parameters to observed counts.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bhpgf;
pub mod config;
pub mod error;
pub mod estimate;
pub mod gwscenario;
pub mod lddist;
pub mod lifetime;
pub mod malthus;
pub mod numeric;
pub mod offspring;
pub mod simulate;

pub use num_complex::Complex64;

pub use bhpgf::{
    compute_g, default_probe_points, delta_probe, markov_gamma_ode, solve_renewal, CloneSizePgf,
    DeltaProbe, GEstimate, PgfGrid, PgfMethod,
};
pub use config::{ModelConfig, Numerics};
pub use error::{Error, Result};
pub use estimate::{
    bootstrap_ci, mle_fit, mle_fit_with, p0_estimate, rho_from_fit, BootstrapCi, ExperimentData,
    FitResult, MleOptions, P0Estimate,
};
pub use gwscenario::{harmonic_identity_check, GwSeries};
pub use lddist::{ldd_pmf, limit_check, stable_cdf, stable_cf, CircleSample, LddPmf, LimitCheck};
pub use lifetime::{LifetimeDistribution, TabulatedCdf};
pub use malthus::{
    check_neutrality, compute_n1, n1_lower_bound, solve_beta, Neutrality, ProliferationModel,
};
pub use offspring::OffspringDistribution;
pub use simulate::{
    grow_culture, run_experiment, CellType, CultureResult, Experiment, SimConfig, StopRule,
};
