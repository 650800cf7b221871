//! First-generation offspring laws `f(s) = Σ π_k s^k` and the objects derived
//! from them: mean, extinction probability and `h(s) = (1 - f(s)) / (1 - s)`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};

const NORMALIZATION_TOL: f64 = 1e-12;
const DOMAIN_TOL: f64 = 1e-12;
const FRACLIN_TAIL: f64 = 1e-16;

/// How a law was specified, kept so configuration can be written back out.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OffspringKind {
    Explicit,
    FractionalLinear { mu: f64 },
}

/// A supercritical offspring law with finite support.
#[derive(Debug, Clone, PartialEq)]
pub struct OffspringDistribution {
    probs: Vec<f64>,
    /// `tails[k] = P(X > k)`; these are the power-series coefficients of `h`.
    tails: Vec<f64>,
    mean: f64,
    extinction: f64,
    kind: OffspringKind,
}

impl OffspringDistribution {
    /// Builds a law from `π_0 … π_K`. The law must be normalized and
    /// supercritical (`1 < μ`).
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        Self::build(probs, OffspringKind::Explicit)
    }

    /// Binary fission, `f(s) = s²`.
    pub fn binary() -> Self {
        Self::new(vec![0.0, 0.0, 1.0]).expect("binary splitting is valid")
    }

    /// The fractional-linear law `f(s) = s / (s + μ(1 - s))`, truncated once
    /// the geometric tail mass is below `1e-16`.
    pub fn fractional_linear(mu: f64) -> Result<Self> {
        if !(mu > 1.0 && mu.is_finite()) {
            return Err(Error::invalid(format!(
                "fractional-linear law needs mu > 1, got {mu}"
            )));
        }
        let ratio = (mu - 1.0) / mu;
        let mut probs = vec![0.0];
        let mut term = 1.0 / mu;
        let mut tail = 1.0;
        while tail >= FRACLIN_TAIL {
            probs.push(term);
            tail *= ratio;
            term *= ratio;
        }
        let total: f64 = probs.iter().sum();
        for p in &mut probs {
            *p /= total;
        }
        Self::build(probs, OffspringKind::FractionalLinear { mu })
    }

    fn build(mut probs: Vec<f64>, kind: OffspringKind) -> Result<Self> {
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::invalid(
                "offspring probabilities must be finite and nonnegative",
            ));
        }
        while probs.len() > 1 && probs.last() == Some(&0.0) {
            probs.pop();
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::invalid(format!(
                "offspring probabilities sum to {total}, not 1"
            )));
        }
        let mut tails = vec![0.0; probs.len().saturating_sub(1).max(1)];
        let mut acc = 0.0;
        for k in (1..probs.len()).rev() {
            acc += probs[k];
            tails[k - 1] = acc;
        }
        let mean: f64 = tails.iter().sum();
        if mean <= 1.0 {
            return Err(Error::invalid(format!(
                "offspring law must be supercritical (mean > 1), got mean {mean}"
            )));
        }
        let mut dist = OffspringDistribution {
            probs,
            tails,
            mean,
            extinction: 0.0,
            kind,
        };
        dist.extinction = dist.solve_extinction()?;
        Ok(dist)
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn kind(&self) -> OffspringKind {
        self.kind
    }

    /// `μ = f'(1)`.
    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// The smallest fixed point `q` of `f` in `[0, 1)`.
    pub fn extinction_prob(&self) -> f64 {
        self.extinction
    }

    /// `f(s)` for `|s| ≤ 1`.
    pub fn pgf_eval(&self, s: Complex64) -> Result<Complex64> {
        check_disk(s)?;
        Ok(self.pgf(s))
    }

    /// `h(s) = (1 - f(s)) / (1 - s)` with `h(1) = μ`.
    pub fn h_eval(&self, s: Complex64) -> Result<Complex64> {
        check_disk(s)?;
        if s == Complex64::new(1.0, 0.0) {
            return Ok(Complex64::new(self.mean, 0.0));
        }
        Ok(self.h(s))
    }

    pub(crate) fn pgf(&self, s: Complex64) -> Complex64 {
        horner(&self.probs, s)
    }

    pub(crate) fn pgf_real(&self, s: f64) -> f64 {
        self.probs.iter().rev().fold(0.0, |acc, &p| acc * s + p)
    }

    /// `h` through its power series `Σ P(X > k) s^k`, which avoids the
    /// cancellation of `1 - f(s)` near `s = 1`.
    pub(crate) fn h(&self, s: Complex64) -> Complex64 {
        horner(&self.tails, s)
    }

    pub(crate) fn h_real(&self, s: f64) -> f64 {
        self.tails.iter().rev().fold(0.0, |acc, &p| acc * s + p)
    }

    /// `μ - h(1 - x)` for real `x ∈ (0, 1]`, computed without cancellation.
    pub fn mu_minus_h(&self, x: f64) -> f64 {
        let log1m = (-x).ln_1p();
        self.tails
            .iter()
            .enumerate()
            .map(|(k, t)| -t * (k as f64 * log1m).exp_m1())
            .sum()
    }

    fn solve_extinction(&self) -> Result<f64> {
        let mut q = 0.0;
        for _ in 0..1_000_000 {
            let next = self.pgf_real(q);
            if (next - q).abs() < 1e-14 {
                return Ok(next);
            }
            q = next;
        }
        Err(Error::numerical(
            "extinction-probability iteration did not converge in 10^6 steps",
        ))
    }

    /// Probes the local exponent of `μ - h(1 - s) ~ s^ω` over a decreasing
    /// grid in `(0, 0.5]`.
    pub fn star_probe(&self, s_grid: &[f64]) -> Result<StarProbe> {
        if s_grid.len() < 2 {
            return Err(Error::invalid("star probe needs at least two grid points"));
        }
        if s_grid.iter().any(|&s| !(s > 0.0 && s <= 0.5)) {
            return Err(Error::invalid("star probe grid must lie in (0, 0.5]"));
        }
        if s_grid.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::invalid(
                "star probe grid must be strictly decreasing",
            ));
        }
        let mut rows: Vec<StarRow> = Vec::with_capacity(s_grid.len());
        let mut truncated_at = None;
        for (i, &s) in s_grid.iter().enumerate() {
            let gap = self.mu_minus_h(s);
            if !(gap > f64::MIN_POSITIVE) {
                truncated_at = Some(i);
                break;
            }
            let local_slope = rows
                .last()
                .map(|prev| (gap.ln() - prev.gap.ln()) / (s.ln() - prev.s.ln()));
            rows.push(StarRow {
                s,
                gap,
                local_slope,
            });
        }
        let omega = rows.last().and_then(|r| r.local_slope).ok_or_else(|| {
            Error::numerical("star probe degenerate: fewer than two usable points")
        })?;
        Ok(StarProbe {
            omega,
            rows,
            truncated_at,
        })
    }
}

fn horner(coeffs: &[f64], s: Complex64) -> Complex64 {
    coeffs
        .iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * s + c)
}

fn check_disk(s: Complex64) -> Result<()> {
    if !(s.norm() <= 1.0 + DOMAIN_TOL) {
        return Err(Error::invalid(format!("|s| = {} exceeds 1", s.norm())));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StarRow {
    pub s: f64,
    /// `μ - h(1 - s)`.
    pub gap: f64,
    /// Log-log slope against the previous row.
    pub local_slope: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StarProbe {
    /// Slope between the two smallest usable grid points.
    pub omega: f64,
    pub rows: Vec<StarRow>,
    /// Index of the first grid point dropped because the gap underflowed.
    pub truncated_at: Option<usize>,
}

impl fmt::Display for OffspringDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            OffspringKind::FractionalLinear { mu } => write!(f, "fractional_linear({mu})"),
            OffspringKind::Explicit => {
                write!(f, "[")?;
                for (i, p) in self.probs.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{p}")?;
                }
                write!(f, "]")
            }
        }
    }
}

impl FromStr for OffspringDistribution {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let t = text.trim().trim_matches('"').trim();
        if let Some(inner) = t.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
            let probs = inner
                .split(',')
                .map(str::trim)
                .filter(|p| !p.is_empty())
                .map(|p| {
                    p.parse::<f64>()
                        .map_err(|e| Error::parse(format!("bad probability {p:?}: {e}")))
                })
                .collect::<Result<Vec<_>>>()?;
            return Self::new(probs);
        }
        let (name, args) = crate::config::split_call(t)?;
        match name {
            "fractional_linear" | "fraclin" => {
                let [mu] = crate::config::parse_args::<1>(name, &args)?;
                Self::fractional_linear(mu)
            }
            "binary" if args.is_empty() => Ok(Self::binary()),
            _ => Err(Error::parse(format!("unknown offspring law {t:?}"))),
        }
    }
}
