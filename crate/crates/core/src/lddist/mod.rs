//! The mutant-count distribution and its stable limit.

mod limit;
mod pmf;
mod stable;

pub use limit::{ks_to_stable, limit_check, limit_rmax, xi_map, KsRow, LimitCheck, LARGE_R};
pub use pmf::{fft_size, inversion_radius, ldd_pmf, pmf_rmax, CircleSample, LddPmf, NOISE_FLOOR};
pub use stable::{
    stable_cdf, stable_cdf_integral, stable_cf, stable_density, stable_survival_integral,
    StableCdfTable, CDF_DOMAIN, THETA_MAX,
};
