//! Independent closed forms and samplers used as test oracles.
#![allow(dead_code)]

use fluctuate_core::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Poisson};

/// `F_t(s)` of the Yule process with splitting rate `rate`.
pub fn yule_pgf(t: f64, s: Complex64, rate: f64) -> Complex64 {
    let e = (-rate * t).exp();
    s * e / (1.0 - s * (1.0 - e))
}

/// Lea–Coulson clone-size PGF `1 + ((1 - s)/s) ln(1 - s)`.
pub fn lea_coulson_g(s: f64) -> f64 {
    1.0 + (1.0 - s) / s * (-s).ln_1p()
}

/// Lea–Coulson mutant-count PMF by `r p_r = m Σ_j p_j / (r - j + 1)`.
pub fn lea_coulson_recursion(m: f64, rmax: usize) -> Vec<f64> {
    let mut p = Vec::with_capacity(rmax + 1);
    p.push((-m).exp());
    for r in 1..=rmax {
        let sum: f64 = (0..r).map(|j| p[j] / (r - j + 1) as f64).sum();
        p.push(m / r as f64 * sum);
    }
    p
}

/// The same PMF as a Poisson mixture of convolution powers of the clone-size
/// law `1/(k(k+1))`, truncated at `rmax`.
pub fn lea_coulson_compound_poisson(m: f64, rmax: usize) -> Vec<f64> {
    let clone: Vec<f64> = (0..=rmax)
        .map(|k| {
            if k == 0 {
                0.0
            } else {
                1.0 / (k * (k + 1)) as f64
            }
        })
        .collect();
    let mut power = vec![0.0; rmax + 1];
    power[0] = 1.0;
    let mut weight = (-m).exp();
    let mut out = vec![0.0; rmax + 1];
    for k in 0..=rmax {
        if k > 0 {
            weight *= m / k as f64;
            power = (0..=rmax)
                .map(|r| (0..=r).map(|j| power[j] * clone[r - j]).sum())
                .collect();
        }
        for (o, &q) in out.iter_mut().zip(&power) {
            *o += weight * q;
        }
    }
    out
}

/// `β = kλ(μ^{1/k} - 1)` for Gamma life-times with `k` stages and mean `1/λ`.
pub fn kendall_beta(k: u32, rate: f64, mu: f64) -> f64 {
    let k = k as f64;
    k * rate * (mu.powf(1.0 / k) - 1.0)
}

/// `n₁ = (μ - 1) / (k(μ - μ^{1 - 1/k}))`.
pub fn kendall_n1(k: u32, mu: f64) -> f64 {
    let k = k as f64;
    (mu - 1.0) / (k * (mu - mu.powf(1.0 - 1.0 / k)))
}

/// A mutant count from the Lea–Coulson law: Poisson(`m`) clones whose sizes
/// satisfy `P(X ≥ k) = 1/k`.
pub fn sample_lea_coulson<R: Rng + ?Sized>(m: f64, rng: &mut R) -> u64 {
    let clones = Poisson::new(m).expect("positive mean").sample(rng) as u64;
    (0..clones)
        .map(|_| {
            let u: f64 = 1.0 - rng.random::<f64>();
            (1.0 / u).floor().min(1e18) as u64
        })
        .fold(0u64, u64::saturating_add)
}

/// Offspring probabilities `[p0, p1, ...]` with the given integer or
/// half-integer mean and no deaths.
pub fn offspring_with_mean(mu: f64) -> Vec<f64> {
    let lo = mu.floor() as usize;
    let frac = mu - lo as f64;
    let mut p = vec![0.0; lo + 2];
    p[lo] = 1.0 - frac;
    p[lo + 1] = frac;
    if frac == 0.0 {
        p.pop();
    }
    p
}
