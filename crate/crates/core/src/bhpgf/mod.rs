//! Clone-size generating function `g(s)` of a Bellman-Harris mutant clone.

mod pgf;
mod phase;
mod probe;
mod renewal;

pub use pgf::{CloneSizePgf, PgfMethod};
pub use probe::{
    default_probe_points, delta_probe, markov_gamma_ode, zbar, DeltaProbe, PRECISION_FLOOR,
};
pub use renewal::{compute_g, default_discretization, solve_renewal, GEstimate, PgfGrid};
