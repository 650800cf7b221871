//! Convergence of `ξ_m = r/(n₁ m) - ln(n₁ m) - δ/n₁` to the stable law,
//! measured by Kolmogorov-Smirnov distances.

use super::pmf::{CircleSample, LddPmf};
use super::stable::StableCdfTable;
use crate::bhpgf::{default_probe_points, delta_probe, CloneSizePgf, DeltaProbe};
use crate::error::{Error, Result};

/// Truncations above this many lattice points trigger a warning.
pub const LARGE_R: usize = 1_000_000;

/// `R(m) = ceil(50 n₁ m (ln m + 5))`.
pub fn limit_rmax(n1: f64, m: f64) -> usize {
    (50.0 * n1 * m * (m.ln() + 5.0)).ceil().max(1.0) as usize
}

pub fn xi_map(r: f64, n1: f64, m: f64, delta: f64) -> f64 {
    r / (n1 * m) - (n1 * m).ln() - delta / n1
}

/// Two-sided KS distance between the lattice law of `ξ_m` (from `pmf`) and
/// the stable CDF, over the lattice points `r ≤ R`.
pub fn ks_to_stable(pmf: &LddPmf, n1: f64, delta: f64) -> Result<f64> {
    let table = StableCdfTable::shared()?;
    let cdf = pmf.cdf();
    let mut prev = 0.0;
    let mut worst = 0.0f64;
    for (r, &c) in cdf.iter().enumerate() {
        let phi = table.cdf(xi_map(r as f64, n1, pmf.m, delta));
        worst = worst.max((c - phi).abs()).max((phi - prev).abs());
        prev = c;
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq)]
pub struct KsRow {
    pub m: f64,
    pub rmax: usize,
    pub captured_mass: f64,
    pub ks: f64,
    /// KS with `δ` moved down and up by the probe's last increment.
    pub ks_delta_low: f64,
    pub ks_delta_high: f64,
    /// KS with `2 n₁` in place of `n₁` in the `ξ` map.
    pub ks_double_n1: f64,
    pub large_r_warning: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitCheck {
    pub n1: f64,
    pub delta: f64,
    pub probe: DeltaProbe,
    pub rows: Vec<KsRow>,
}

impl LimitCheck {
    /// Whether KS strictly decreases along the `m` list.
    pub fn decreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].ks < w[0].ks)
    }
}

/// KS distance for each `m`, with `δ` taken from [`delta_probe`].
pub fn limit_check(pgf: &CloneSizePgf, m_list: &[f64]) -> Result<LimitCheck> {
    if m_list.iter().any(|&m| !(m > 0.0 && m.is_finite())) {
        return Err(Error::invalid("limit check needs positive m values"));
    }
    let n1 = pgf.model().n1();
    let probe = delta_probe(pgf, &default_probe_points())?;
    let delta = probe.limit;
    let spread = probe.last_increment();
    let mut rows = Vec::with_capacity(m_list.len());
    for &m in m_list {
        let rmax = limit_rmax(n1, m);
        let pmf = CircleSample::new(pgf, rmax, None)?.pmf(m, rmax)?;
        rows.push(KsRow {
            m,
            rmax,
            captured_mass: pmf.captured_mass,
            ks: ks_to_stable(&pmf, n1, delta)?,
            ks_delta_low: ks_to_stable(&pmf, n1, delta - spread)?,
            ks_delta_high: ks_to_stable(&pmf, n1, delta + spread)?,
            ks_double_n1: ks_to_stable(&pmf, 2.0 * n1, delta)?,
            large_r_warning: rmax > LARGE_R,
        });
    }
    Ok(LimitCheck {
        n1,
        delta,
        probe,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn truncation_formula() {
        assert_eq!(limit_rmax(1.0, 1.0), 250);
        assert_eq!(
            limit_rmax(1.0, 4.0),
            (200.0 * (4f64.ln() + 5.0)).ceil() as usize
        );
    }

    #[test]
    fn xi_map_shifts_and_scales() {
        assert!((xi_map(0.0, 1.0, 1.0, 0.0)).abs() < 1e-15);
        assert!((xi_map(8.0, 2.0, 2.0, 1.0) - (2.0 - 4f64.ln() - 0.5)).abs() < 1e-15);
    }
}
