//! Galton-Watson analogue of the clone PGF,
//! `g_f(s) = ((μ-1)/μ) Σ_{i≥0} f_i(s) / μ^i` with `f_i` the `i`-th iterate of
//! the offspring PGF, and the behaviour of `γ_f(s) + κ ln(1 - s)` near 1.

use crate::error::{Error, Result};
use crate::numeric::{integrate, KahanSum};
use crate::offspring::OffspringDistribution;

/// Target accuracy for automatically chosen truncations.
const SERIES_TOL: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq)]
pub struct GwSeries {
    offspring: OffspringDistribution,
    /// Fixed number of iterates, or `None` to pick one per evaluation.
    terms: Option<usize>,
    kappa: f64,
    /// `Some(μ)` when `f(s) = s^μ`, evaluated through `s^{μ^i}` exactly.
    power: Option<u32>,
}

/// A truncated series value with a bound on what was cut off.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GwValue {
    pub value: f64,
    pub remainder_bound: f64,
    pub terms: usize,
}

impl GwSeries {
    pub fn new(offspring: OffspringDistribution) -> Self {
        let mu = offspring.mean();
        let probs = offspring.probs();
        let last = probs.len() - 1;
        let power = (probs[last] == 1.0).then_some(last as u32);
        GwSeries {
            kappa: (mu - 1.0) / (mu * mu.ln()),
            offspring,
            terms: None,
            power,
        }
    }

    /// `f(s) = s^μ` for integer `μ ≥ 2`.
    pub fn power(mu: u32) -> Result<Self> {
        if mu < 2 {
            return Err(Error::invalid(format!(
                "power offspring law needs mu >= 2, got {mu}"
            )));
        }
        let mut probs = vec![0.0; mu as usize + 1];
        probs[mu as usize] = 1.0;
        Ok(Self::new(OffspringDistribution::new(probs)?))
    }

    pub fn fractional_linear(mu: f64) -> Result<Self> {
        Ok(Self::new(OffspringDistribution::fractional_linear(mu)?))
    }

    /// Uses exactly `terms` iterates instead of an automatic truncation.
    pub fn with_terms(mut self, terms: usize) -> Self {
        self.terms = Some(terms.max(1));
        self
    }

    pub fn offspring(&self) -> &OffspringDistribution {
        &self.offspring
    }

    /// `κ = (μ - 1) / (μ ln μ)`.
    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    fn mu(&self) -> f64 {
        self.offspring.mean()
    }

    /// Iterates needed so that `μ^{-N} / (1 - s) < SERIES_TOL`.
    fn auto_terms(&self, d0: f64) -> usize {
        let need = (1.0 / SERIES_TOL / d0.max(f64::MIN_POSITIVE)).ln() / self.mu().ln();
        need.ceil().max(1.0) as usize + 2
    }

    /// `γ_f(s) = (1 - g_f(s)) / (1 - s)` for `s ∈ [0, 1)`.
    pub fn gamma_f(&self, s: f64) -> Result<GwValue> {
        if !(0.0..1.0).contains(&s) {
            return Err(Error::invalid(format!(
                "gamma_f needs s in [0, 1), got {s}"
            )));
        }
        let d0 = 1.0 - s;
        let mu = self.mu();
        let n = self.terms.unwrap_or_else(|| self.auto_terms(d0));
        let log_s = (-d0).ln_1p();
        let mut sum = KahanSum::default();
        // E_i = (1 - f_i(s)) / (1 - s)
        let mut e = 1.0;
        let mut weight = 1.0;
        for i in 0..n {
            if i > 0 {
                e = match self.power {
                    Some(p) => -((p as f64).powi(i as i32) * log_s).exp_m1() / d0,
                    None => e * self.offspring.h_real(1.0 - d0 * e),
                };
            }
            sum.add(weight * e);
            weight /= mu;
        }
        // Once E_i has saturated the omitted terms sum to E_{N-1} μ^{-N} / (1 - 1/μ).
        sum.add(weight * e / (1.0 - 1.0 / mu));
        let scale = (mu - 1.0) / mu;
        // E_i ≤ 1/(1 - s), so the omitted terms are below μ^{-N} / (1 - s).
        let remainder_bound = mu.powi(-(n as i32)) / d0;
        Ok(GwValue {
            value: scale * sum.value(),
            remainder_bound,
            terms: n,
        })
    }

    /// `g_f(s)` on `[0, 1]`.
    pub fn g_f(&self, s: f64) -> Result<GwValue> {
        if s == 1.0 {
            return Ok(GwValue {
                value: 1.0,
                remainder_bound: 0.0,
                terms: 0,
            });
        }
        let terms = self
            .terms
            .unwrap_or_else(|| ((1.0 / SERIES_TOL).ln() / self.mu().ln()).ceil() as usize + 2);
        let gamma = self.clone().with_terms(terms).gamma_f(s)?;
        let d0 = 1.0 - s;
        Ok(GwValue {
            value: 1.0 - d0 * gamma.value,
            remainder_bound: self.mu().powi(-(terms as i32)),
            terms,
        })
    }

    /// `γ_f(s) + κ ln(1 - s)` for `s ∈ (q, 1)`.
    pub fn delta_gw(&self, s: f64) -> Result<f64> {
        let q = self.offspring.extinction_prob();
        if !(s > q && s < 1.0) {
            return Err(Error::invalid(format!(
                "delta_gw needs s in (q, 1) = ({q}, 1), got {s}"
            )));
        }
        let gamma = self.gamma_f(s)?;
        if gamma.remainder_bound > 1e-9 * gamma.value {
            return Err(Error::numerical(format!(
                "series truncation too short at s = {s}"
            )));
        }
        Ok(gamma.value + self.kappa * (1.0 - s).ln())
    }

    /// Power-series coefficients `[s^0 … s^kmax]` of `γ_f`, computed from
    /// truncated compositions `f_{i+1} = f ∘ f_i`.
    pub fn gamma_coefficients(&self, kmax: usize) -> Vec<f64> {
        let mu = self.mu();
        let len = kmax + 1;
        let probs = self.offspring.probs();
        let mut iterate = vec![0.0; len];
        if len > 1 {
            iterate[1] = 1.0;
        }
        let mut out = vec![KahanSum::default(); len];
        let mut weight = 1.0;
        while weight > 1e-18 {
            // (1 - f_i(s)) / (1 - s) has coefficients 1 - Σ_{j≤k} [f_i]_j.
            let mut cum = 0.0;
            for k in 0..len {
                cum += iterate[k];
                out[k].add(weight * (1.0 - cum));
            }
            iterate = compose(probs, &iterate);
            weight /= mu;
        }
        let scale = (mu - 1.0) / mu;
        out.iter().map(|c| scale * c.value()).collect()
    }
}

/// `f(p(s))` truncated to the length of `p`.
fn compose(probs: &[f64], inner: &[f64]) -> Vec<f64> {
    let len = inner.len();
    let mut acc = vec![0.0; len];
    for &p in probs.iter().rev() {
        let mut next = vec![0.0; len];
        for (i, &a) in acc.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for (j, &b) in inner.iter().enumerate().take(len - i) {
                next[i + j] += a * b;
            }
        }
        next[0] += p;
        acc = next;
    }
    acc
}

/// `γ_f` for the fractional-linear law from the closed form of its iterates,
/// `((μ-1)/μ) Σ_i 1 / (μ^i + (1 - μ^i) s)`.
pub fn fraclin_gamma_closed_form(mu: f64, s: f64) -> f64 {
    let mut sum = KahanSum::default();
    let mut pow = 1.0;
    loop {
        let term = 1.0 / (pow + (1.0 - pow) * s);
        sum.add(term);
        if term < 1e-18 * sum.value() {
            break;
        }
        pow *= mu;
    }
    (mu - 1.0) / mu * sum.value()
}

/// `H_n`, summed from the small end.
pub fn harmonic_number(n: u64) -> f64 {
    (1..=n)
        .rev()
        .map(|k| 1.0 / k as f64)
        .collect::<KahanSum>()
        .value()
}

/// `∫_0^∞ 1 - (1 - μ^{-u})^n du` by adaptive quadrature.
pub fn harmonic_integral(mu: f64, n: u64) -> f64 {
    let ln_mu = mu.ln();
    let nf = n as f64;
    let integrand = |u: f64| -(nf * (-(-u * ln_mu).exp()).ln_1p()).exp_m1();
    let centre = nf.ln() / ln_mu;
    let end = centre + 45.0 / ln_mu;
    let mut total = KahanSum::default();
    let mut a = 0.0;
    for b in [centre, centre + 5.0 / ln_mu, end] {
        if b > a {
            total.add(integrate(integrand, a, b, 1e-14, 1e-15, 2000).value);
            a = b;
        }
    }
    // Beyond `end` the integrand is n μ^{-u} to double precision.
    total.add(nf * (-end * ln_mu).exp() / ln_mu);
    total.value()
}

/// `|∫_0^∞ (1 - (1 - μ^{-u})^n) du - H_n / ln μ|`.
pub fn harmonic_identity_check(mu: u32, n: u64) -> Result<f64> {
    if mu < 2 {
        return Err(Error::invalid(format!(
            "harmonic identity needs integer mu >= 2, got {mu}"
        )));
    }
    if n == 0 || n > 1_000_000 {
        return Err(Error::invalid(format!(
            "harmonic identity needs 1 <= n <= 10^6, got {n}"
        )));
    }
    let mu = mu as f64;
    Ok((harmonic_integral(mu, n) - harmonic_number(n) / mu.ln()).abs())
}

/// `Σ_{i≥0} (1 - (1 - μ^{-i})^n) - H_n / ln μ`, whose convergence in `n`
/// carries the fractional-linear limit through Abel's theorem.
pub fn fraclin_discounted_partial_sum(mu: f64, n: u64) -> f64 {
    let nf = n as f64;
    let mut sum = KahanSum::default();
    let mut inv = 1.0f64;
    loop {
        let term = -(nf * (-inv).ln_1p()).exp_m1();
        sum.add(term);
        if term < 1e-18 {
            break;
        }
        inv /= mu;
    }
    sum.value() - harmonic_number(n) / mu.ln()
}
