//! Malthusian growth rate, the correction factor `n₁`, and neutrality.

use crate::error::{Error, Result};
use crate::lifetime::LifetimeDistribution;
use crate::offspring::OffspringDistribution;

/// Residual below which a mutant/non-mutant pair is declared neutral.
pub const NEUTRALITY_TOL: f64 = 1e-9;

/// A mutant proliferation model: offspring law, life-time law, and the
/// derived Malthusian parameter and correction factor.
#[derive(Debug, Clone, PartialEq)]
pub struct ProliferationModel {
    offspring: OffspringDistribution,
    lifetime: LifetimeDistribution,
    beta: f64,
    n1: f64,
}

impl ProliferationModel {
    pub fn new(offspring: OffspringDistribution, lifetime: LifetimeDistribution) -> Result<Self> {
        let beta = solve_beta(&offspring, &lifetime)?;
        let n1 = compute_n1(offspring.mean(), &lifetime, beta);
        Ok(ProliferationModel {
            offspring,
            lifetime,
            beta,
            n1,
        })
    }

    /// Binary fission with exponential life-times: the Lea-Coulson model.
    pub fn lea_coulson(rate: f64) -> Result<Self> {
        Self::new(
            OffspringDistribution::binary(),
            LifetimeDistribution::exponential(rate)?,
        )
    }

    pub fn offspring(&self) -> &OffspringDistribution {
        &self.offspring
    }

    pub fn lifetime(&self) -> &LifetimeDistribution {
        &self.lifetime
    }

    pub fn mean(&self) -> f64 {
        self.offspring.mean()
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn n1(&self) -> f64 {
        self.n1
    }

    pub fn extinction_prob(&self) -> f64 {
        self.offspring.extinction_prob()
    }

    /// `|μ L(β) - 1|`.
    pub fn malthus_residual(&self) -> f64 {
        (self.mean() * self.lifetime.laplace_stieltjes(self.beta) - 1.0).abs()
    }
}

/// Unique `β > 0` with `μ ∫ e^{-βt} dG(t) = 1`.
pub fn solve_beta(
    offspring: &OffspringDistribution,
    lifetime: &LifetimeDistribution,
) -> Result<f64> {
    malthusian_rate(offspring.mean(), lifetime)
}

/// [`solve_beta`] for a bare offspring mean.
///
/// Brackets the root by doubling, bisects to an absolute width of `1e-12`,
/// then polishes with two safeguarded Newton steps using the discounted mean
/// as the derivative.
pub fn malthusian_rate(mu: f64, lifetime: &LifetimeDistribution) -> Result<f64> {
    if !(mu > 1.0 && mu.is_finite()) {
        return Err(Error::invalid(format!(
            "Malthusian equation needs 1 < mu < inf, got {mu}"
        )));
    }
    let excess = |beta: f64| mu * lifetime.laplace_stieltjes(beta) - 1.0;
    let mut hi = 1.0;
    while excess(hi) > 0.0 {
        hi *= 2.0;
        if hi > 2f64.powi(60) {
            return Err(Error::numerical(
                "no sign change in the Malthusian equation up to beta = 2^60 (defective life-time transform?)",
            ));
        }
    }
    let lo = if hi > 1.0 { hi / 2.0 } else { 0.0 };
    let mut beta = crate::numeric::bisect(excess, lo, hi, 1e-12);
    for _ in 0..2 {
        let slope = mu * lifetime.discounted_mean(beta);
        if slope > 0.0 {
            let next = beta + excess(beta) / slope;
            if next > 0.0 && (next - beta).abs() < 1e-9 * beta.max(1.0) {
                beta = next;
            }
        }
    }
    Ok(beta)
}

/// `n₁ = (μ - 1) / (β μ² ∫ t e^{-βt} dG(t))`.
pub fn compute_n1(mu: f64, lifetime: &LifetimeDistribution, beta: f64) -> f64 {
    (mu - 1.0) / (beta * mu * mu * lifetime.discounted_mean(beta))
}

/// `(μ - 1) / (μ ln μ)`, valid for every life-time law.
pub fn n1_lower_bound(mu: f64) -> f64 {
    (mu - 1.0) / (mu * mu.ln())
}

/// Loose approximation `β ≈ α (k + 1)(μ^{1/k} - 1) / 2` for Rahn life-times.
/// Diagnostic only; never substituted for [`malthusian_rate`].
pub fn rahn_beta_heuristic(alpha: f64, stages: u32, mu: f64) -> f64 {
    let k = stages as f64;
    alpha * (k + 1.0) * (mu.powf(1.0 / k) - 1.0) / 2.0
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neutrality {
    /// β solved from the non-mutant pair.
    pub beta: f64,
    /// `|μ• L•(β) - 1|`.
    pub residual: f64,
}

impl Neutrality {
    pub fn is_neutral(&self) -> bool {
        self.residual < NEUTRALITY_TOL
    }
}

pub fn check_neutrality(
    mutant: (&OffspringDistribution, &LifetimeDistribution),
    nonmutant: (&OffspringDistribution, &LifetimeDistribution),
) -> Result<Neutrality> {
    let beta = solve_beta(nonmutant.0, nonmutant.1)?;
    let residual = (mutant.0.mean() * mutant.1.laplace_stieltjes(beta) - 1.0).abs();
    Ok(Neutrality { beta, residual })
}
