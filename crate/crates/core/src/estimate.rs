//! Mutation-parameter estimators from per-culture mutant counts: the `p₀`
//! method and a maximum-likelihood fit of `A = n₁ m` against the exact PMF
//! of a proliferation model.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bhpgf::{default_probe_points, delta_probe, CloneSizePgf};
use crate::error::{Error, Result};
use crate::lddist::{inversion_radius, CircleSample};
use crate::numeric::{bisect, golden_max};

/// Half-width of the 95% profile interval on the log-likelihood scale.
pub const PROFILE_DROP: f64 = 3.84 / 2.0;
/// Smallest default jackpot cutoff.
pub const MIN_DEFAULT_CUTOFF: u64 = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentData {
    pub counts: Vec<u64>,
    /// Counts above this are only known to exceed it.
    pub jackpot_cutoff: Option<u64>,
    /// Mean final population size per culture.
    pub n_final: Option<f64>,
}

impl ExperimentData {
    pub fn new(counts: Vec<u64>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::data("experiment has no cultures"));
        }
        Ok(ExperimentData {
            counts,
            jackpot_cutoff: None,
            n_final: None,
        })
    }

    /// Parses one count per line, or comma-separated rows whose second
    /// field is the count. A non-numeric first line is taken as a header.
    pub fn parse_counts(text: &str) -> Result<Self> {
        let mut counts = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let field = if fields.len() >= 2 {
                fields[1]
            } else {
                fields[0]
            };
            match field.parse::<u64>() {
                Ok(c) => counts.push(c),
                Err(_) if counts.is_empty() && i == 0 => continue,
                Err(_) => {
                    return Err(Error::data(format!(
                        "line {}: {field:?} is not a mutant count",
                        i + 1
                    )))
                }
            }
        }
        Self::new(counts)
    }

    pub fn from_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse_counts(&text).map_err(|e| Error::data(format!("{}: {e}", path.display())))
    }

    pub fn cultures(&self) -> usize {
        self.counts.len()
    }

    pub fn zeros(&self) -> usize {
        self.counts.iter().filter(|&&c| c == 0).count()
    }

    /// 99th percentile of the counts, not below 50.
    pub fn default_cutoff(&self) -> u64 {
        let mut sorted = self.counts.clone();
        sorted.sort_unstable();
        let idx = ((0.99 * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len()) - 1;
        sorted[idx].max(MIN_DEFAULT_CUTOFF)
    }

    pub fn cutoff(&self) -> u64 {
        self.jackpot_cutoff.unwrap_or_else(|| self.default_cutoff())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct P0Estimate {
    pub rho: f64,
    /// Delta-method standard error; zero when every culture is mutant-free.
    pub se: f64,
    pub p0: f64,
    pub zeros: usize,
    pub cultures: usize,
    /// One-sided 95% upper bound on `ρ`, given when all counts are zero.
    pub upper_bound: Option<f64>,
}

/// `ρ̂ = -ln p̂₀ / n` with `p̂₀` the fraction of mutant-free cultures.
pub fn p0_estimate(data: &ExperimentData, n: f64) -> Result<P0Estimate> {
    if !(n > 0.0 && n.is_finite()) {
        return Err(Error::invalid(format!(
            "final population size must be positive, got {n}"
        )));
    }
    let cultures = data.cultures();
    let zeros = data.zeros();
    if zeros == 0 {
        return Err(Error::data(
            "p0-method inapplicable: no culture is free of mutants",
        ));
    }
    let c = cultures as f64;
    let p0 = zeros as f64 / c;
    if zeros == cultures {
        return Ok(P0Estimate {
            rho: 0.0,
            se: 0.0,
            p0,
            zeros,
            cultures,
            upper_bound: Some(-(0.05f64).ln() / (c * n)),
        });
    }
    Ok(P0Estimate {
        rho: -p0.ln() / n,
        se: ((1.0 - p0) / (c * p0)).sqrt() / n,
        p0,
        zeros,
        cultures,
        upper_bound: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MleOptions {
    pub a_min: f64,
    pub a_max: f64,
    pub grid_points: usize,
    /// Relative tolerance of the golden-section refinement.
    pub rel_tol: f64,
    /// Multiplies every grid node; used to check grid independence.
    pub grid_offset: f64,
}

impl Default for MleOptions {
    fn default() -> Self {
        MleOptions {
            a_min: 1e-3,
            a_max: 1e4,
            grid_points: 141,
            rel_tol: 1e-6,
            grid_offset: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    /// Estimate of `n₁ m`.
    pub a_hat: f64,
    /// `δ / n₁` of the fitted model, a diagnostic.
    pub b_hat: f64,
    pub loglik: f64,
    /// `Â / n₁`.
    pub m_hat: f64,
    pub rho_hat: Option<f64>,
    /// 95% profile-likelihood interval for `A`.
    pub ci_a: [f64; 2],
    /// From the curvature of the log-likelihood at `Â`.
    pub se_a: Option<f64>,
    /// The maximum sits on an end of the search interval.
    pub boundary: bool,
    /// The interval reached an end of the search interval.
    pub ci_truncated: bool,
    /// The lumped jackpot mass was not positive somewhere it was needed.
    pub tail_mass_flag: bool,
    pub cutoff: u64,
    pub n1: f64,
    pub cultures: usize,
}

/// Log-likelihood of `A` for binned counts.
struct Likelihood<'a> {
    circle: &'a CircleSample,
    n1: f64,
    cutoff: usize,
    histogram: Vec<u64>,
    jackpots: u64,
}

impl<'a> Likelihood<'a> {
    fn new(circle: &'a CircleSample, n1: f64, cutoff: u64, counts: &[u64]) -> Self {
        let mut histogram = vec![0u64; cutoff as usize + 1];
        let mut jackpots = 0;
        for &c in counts {
            match histogram.get_mut(c as usize) {
                Some(h) if c <= cutoff => *h += 1,
                _ => jackpots += 1,
            }
        }
        Likelihood {
            circle,
            n1,
            cutoff: cutoff as usize,
            histogram,
            jackpots,
        }
    }

    fn eval(&self, a: f64) -> Result<(f64, bool)> {
        let pmf = self.circle.pmf(a / self.n1, self.cutoff)?;
        let mut ll = 0.0;
        for (&h, &p) in self.histogram.iter().zip(&pmf.probs) {
            if h > 0 {
                ll += h as f64 * p.max(f64::MIN_POSITIVE).ln();
            }
        }
        let mut flag = false;
        if self.jackpots > 0 {
            let tail = 1.0 - pmf.captured_mass;
            flag = tail <= 0.0;
            ll += self.jackpots as f64 * tail.max(f64::MIN_POSITIVE).ln();
        }
        Ok((ll, flag))
    }

    fn value(&self, a: f64) -> f64 {
        self.eval(a).map(|(ll, _)| ll).unwrap_or(f64::NEG_INFINITY)
    }

    /// Grid search followed by golden section; returns `(Â, loglik, boundary)`.
    fn maximize(&self, opts: &MleOptions, parallel: bool) -> (f64, f64, bool) {
        let (lo, hi) = (opts.a_min.ln(), opts.a_max.ln());
        let grid: Vec<f64> = (0..opts.grid_points)
            .map(|i| {
                let node = match i {
                    0 => opts.a_min,
                    _ if i == opts.grid_points - 1 => opts.a_max,
                    _ => (lo + (hi - lo) * i as f64 / (opts.grid_points - 1) as f64).exp(),
                };
                (node * opts.grid_offset).clamp(opts.a_min, opts.a_max)
            })
            .collect();
        let values: Vec<f64> = if parallel {
            grid.par_iter().map(|&a| self.value(a)).collect()
        } else {
            grid.iter().map(|&a| self.value(a)).collect()
        };
        let best = values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .expect("grid is nonempty");
        let boundary = best == 0 || best == grid.len() - 1;
        let left = grid[best.saturating_sub(1)];
        let right = grid[(best + 1).min(grid.len() - 1)];
        let (a_hat, loglik) = golden_max(|a| self.value(a), left, right, opts.rel_tol);
        if values[best] > loglik {
            (grid[best], values[best], boundary)
        } else {
            (a_hat, loglik, boundary)
        }
    }
}

/// Circle samples for PMFs up to `cutoff`. The radius is that of a PMF twice
/// as long: with at least `4R` points aliasing stays below `1e-14`, and the
/// `c^{-r}` amplification of rounding errors drops from `1e7` to about `3e3`,
/// which keeps the log-likelihood smooth enough to locate its maximum.
fn likelihood_circle(pgf: &CloneSizePgf, cutoff: u64) -> Result<CircleSample> {
    let rmax = (cutoff as usize).max(1);
    CircleSample::with_radius(pgf, rmax, None, inversion_radius(2 * rmax))
}

fn check_options(opts: &MleOptions) -> Result<()> {
    if !(opts.a_min > 0.0 && opts.a_max > opts.a_min && opts.grid_points >= 3) {
        return Err(Error::invalid(
            "MLE search needs 0 < a_min < a_max and at least 3 grid points",
        ));
    }
    Ok(())
}

pub fn mle_fit(data: &ExperimentData, pgf: &CloneSizePgf) -> Result<FitResult> {
    mle_fit_with(data, pgf, &MleOptions::default())
}

/// Maximizes the likelihood of `A = n₁ m` on a log grid, refines by golden
/// section and brackets the 95% profile interval by bisection.
pub fn mle_fit_with(
    data: &ExperimentData,
    pgf: &CloneSizePgf,
    opts: &MleOptions,
) -> Result<FitResult> {
    check_options(opts)?;
    let n1 = pgf.model().n1();
    let cutoff = data.cutoff();
    let circle = likelihood_circle(pgf, cutoff)?;
    let lik = Likelihood::new(&circle, n1, cutoff, &data.counts);
    let (a_hat, loglik, boundary) = lik.maximize(opts, true);
    if !loglik.is_finite() {
        return Err(Error::numerical(
            "log-likelihood is not finite at the maximum",
        ));
    }
    let (_, tail_mass_flag) = lik.eval(a_hat)?;

    let (lo, hi) = (opts.a_min.ln(), opts.a_max.ln());
    let target = loglik - PROFILE_DROP;
    let excess = |log_a: f64| lik.value(log_a.exp()) - target;
    let mut ci_truncated = false;
    let lower = if a_hat <= opts.a_min || excess(lo) >= 0.0 {
        ci_truncated = true;
        opts.a_min
    } else {
        bisect(excess, lo, a_hat.ln(), 1e-7).exp()
    };
    let upper = if a_hat >= opts.a_max || excess(hi) >= 0.0 {
        ci_truncated = true;
        opts.a_max
    } else {
        bisect(excess, a_hat.ln(), hi, 1e-7).exp()
    };

    let h = 1e-3 * a_hat;
    let curvature = (lik.value(a_hat + h) - 2.0 * loglik
        + lik.value((a_hat - h).max(f64::MIN_POSITIVE)))
        / (h * h);
    let se_a = (curvature < 0.0).then(|| 1.0 / (-curvature).sqrt());

    let probe = delta_probe(pgf, &default_probe_points())?;
    let m_hat = a_hat / n1;
    Ok(FitResult {
        a_hat,
        b_hat: probe.limit / n1,
        loglik,
        m_hat,
        rho_hat: data.n_final.map(|n| m_hat / n),
        ci_a: [lower.min(a_hat), upper.max(a_hat)],
        se_a,
        boundary,
        ci_truncated,
        tail_mass_flag,
        cutoff,
        n1,
        cultures: data.cultures(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BootstrapCi {
    pub replicates: usize,
    /// 2.5% and 97.5% percentiles of the resampled `Â`.
    pub ci_a: [f64; 2],
    pub se_a: f64,
}

/// Percentile bootstrap for `Â`: resamples cultures with replacement and
/// refits, keeping the jackpot cutoff of the original data. Replicate `i`
/// uses stream `i` of a generator seeded with `seed`.
pub fn bootstrap_ci(
    data: &ExperimentData,
    pgf: &CloneSizePgf,
    opts: &MleOptions,
    replicates: usize,
    seed: u64,
) -> Result<BootstrapCi> {
    check_options(opts)?;
    if replicates < 2 {
        return Err(Error::invalid("bootstrap needs at least 2 replicates"));
    }
    let n1 = pgf.model().n1();
    let cutoff = data.cutoff();
    let circle = likelihood_circle(pgf, cutoff)?;
    let n = data.counts.len();
    let mut fits: Vec<f64> = (0..replicates as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i);
            let sample: Vec<u64> = (0..n)
                .map(|_| data.counts[rng.random_range(0..n)])
                .collect();
            Likelihood::new(&circle, n1, cutoff, &sample)
                .maximize(opts, false)
                .0
        })
        .collect();
    fits.sort_by(f64::total_cmp);
    let quantile = |p: f64| {
        let pos = p * (replicates - 1) as f64;
        let (i, frac) = (pos.floor() as usize, pos.fract());
        let next = fits[(i + 1).min(replicates - 1)];
        fits[i] + frac * (next - fits[i])
    };
    let mean = fits.iter().sum::<f64>() / replicates as f64;
    let var = fits.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (replicates - 1) as f64;
    Ok(BootstrapCi {
        replicates,
        ci_a: [quantile(0.025), quantile(0.975)],
        se_a: var.sqrt(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RhoEstimate {
    /// `Â / n₁`.
    pub m_hat: f64,
    /// `m̂ / n_final`, when the final population size is known.
    pub rho: Option<f64>,
}

/// `ρ̂ = (Â / n₁) / n_final`.
pub fn rho_from_fit(fit: &FitResult, n1: f64, n_final: Option<f64>) -> Result<RhoEstimate> {
    if !(n1 > 0.0 && n1.is_finite()) {
        return Err(Error::invalid(format!("n1 must be positive, got {n1}")));
    }
    if let Some(n) = n_final {
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::invalid(format!(
                "final population size must be positive, got {n}"
            )));
        }
    }
    let m_hat = fit.a_hat / n1;
    Ok(RhoEstimate {
        m_hat,
        rho: n_final.map(|n| m_hat / n),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data(counts: &[u64]) -> ExperimentData {
        ExperimentData::new(counts.to_vec()).unwrap()
    }

    #[test]
    fn p0_examples() {
        let all_zero = p0_estimate(&data(&[0; 20]), 1e7).unwrap();
        assert_eq!(all_zero.rho, 0.0);
        assert!((all_zero.upper_bound.unwrap() - 2.995_732_273_553_991 / 2e8).abs() < 1e-20);

        let mut counts = vec![0u64; 50];
        counts.extend([3u64; 50]);
        let half = p0_estimate(&data(&counts), 1e7).unwrap();
        assert!((half.rho - 2f64.ln() / 1e7).abs() < 1e-20);
        assert!((half.rho - 6.93e-8).abs() < 1e-10);
        // sqrt((1 - p)/(C p)) / n with p = 1/2
        assert!((half.se - 0.1 / 1e7).abs() < 1e-20);

        let err = p0_estimate(&data(&[1, 2, 3]), 1e7).unwrap_err();
        assert!(err.to_string().contains("p0-method inapplicable"));
    }

    #[test]
    fn count_parsing() {
        let d =
            ExperimentData::parse_counts("culture_id,mutants,total\n0,5,100\n1,0,100\n").unwrap();
        assert_eq!(d.counts, vec![5, 0]);
        let d = ExperimentData::parse_counts("3\n\n# comment\n7\n").unwrap();
        assert_eq!(d.counts, vec![3, 7]);
        assert!(ExperimentData::parse_counts("3\n-1\n").is_err());
        assert!(ExperimentData::parse_counts("").is_err());
    }

    #[test]
    fn default_cutoff_is_percentile_with_floor() {
        let small = data(&[1, 2, 3]);
        assert_eq!(small.default_cutoff(), 50);
        let big: Vec<u64> = (1..=1000).collect();
        assert_eq!(data(&big).default_cutoff(), 990);
    }

    #[test]
    fn rho_arithmetic() {
        let fit = FitResult {
            a_hat: 4.0,
            b_hat: 0.0,
            loglik: -1.0,
            m_hat: 4.0,
            rho_hat: None,
            ci_a: [3.0, 5.0],
            se_a: None,
            boundary: false,
            ci_truncated: false,
            tail_mass_flag: false,
            cutoff: 50,
            n1: 1.0,
            cultures: 10,
        };
        assert!((rho_from_fit(&fit, 1.0, Some(1e7)).unwrap().rho.unwrap() - 4e-7).abs() < 1e-20);
        let r = rho_from_fit(&fit, 0.8536, Some(1e7)).unwrap().rho.unwrap();
        assert!((r - 4.686e-7).abs() < 1e-10);
        assert_eq!(rho_from_fit(&fit, 1.0, None).unwrap().rho, None);
        let bound = crate::malthus::n1_lower_bound(2.0);
        assert!(rho_from_fit(&fit, bound, Some(1e7)).unwrap().rho.unwrap() > r);
    }
}
