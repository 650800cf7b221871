//! Cell life-time distributions `G(t)` with their Laplace-Stieltjes
//! transforms, discounted means and exact samplers.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Exp};

use crate::error::{Error, Result};

/// Life-time law of a newborn cell. All built-in families are non-lattice
/// and satisfy `G(0) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub enum LifetimeDistribution {
    Exponential {
        rate: f64,
    },
    /// Gamma law with integer shape `stages` and rate `stages * rate`, so the
    /// mean life-time is `1 / rate`.
    KendallGamma {
        stages: u32,
        rate: f64,
    },
    /// Maximum of `stages` independent exponentials with rate `rate`.
    Rahn {
        rate: f64,
        stages: u32,
    },
    Tabulated(TabulatedCdf),
}

impl LifetimeDistribution {
    pub fn exponential(rate: f64) -> Result<Self> {
        check_rate(rate)?;
        Ok(Self::Exponential { rate })
    }

    pub fn kendall(stages: u32, rate: f64) -> Result<Self> {
        check_rate(rate)?;
        check_stages(stages)?;
        Ok(Self::KendallGamma { stages, rate })
    }

    pub fn rahn(rate: f64, stages: u32) -> Result<Self> {
        check_rate(rate)?;
        check_stages(stages)?;
        Ok(Self::Rahn { rate, stages })
    }

    pub fn tabulated(times: Vec<f64>, cdf: Vec<f64>) -> Result<Self> {
        Ok(Self::Tabulated(TabulatedCdf::new(times, cdf, None)?))
    }

    /// Reads a `t,G` CSV (header optional).
    pub fn from_csv(path: impl AsRef<Path>) -> Result<Self> {
        Ok(Self::Tabulated(TabulatedCdf::from_csv(path)?))
    }

    pub fn cdf(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::invalid(format!(
                "life-time CDF needs t >= 0, got {t}"
            )));
        }
        Ok(self.cdf_at(t))
    }

    pub(crate) fn cdf_at(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match self {
            Self::Exponential { rate } => -(-rate * t).exp_m1(),
            Self::KendallGamma { stages, rate } => {
                gamma_p_integer(*stages, *stages as f64 * rate * t)
            }
            Self::Rahn { rate, stages } => (*stages as f64 * (-(-rate * t).exp_m1()).ln()).exp(),
            Self::Tabulated(table) => table.cdf(t),
        }
    }

    /// `∫ e^{-βt} dG(t)` for `β ≥ 0`.
    pub fn laplace_stieltjes(&self, beta: f64) -> f64 {
        match self {
            Self::Exponential { rate } => rate / (rate + beta),
            Self::KendallGamma { stages, rate } => {
                let kr = *stages as f64 * rate;
                (kr / (kr + beta)).powi(*stages as i32)
            }
            Self::Rahn { rate, stages } => {
                let b = beta / rate;
                (1..=*stages).map(|i| i as f64 / (b + i as f64)).product()
            }
            Self::Tabulated(table) => table.laplace_stieltjes(beta),
        }
    }

    /// `∫ t e^{-βt} dG(t)`, i.e. `-d/dβ` of the transform.
    pub fn discounted_mean(&self, beta: f64) -> f64 {
        match self {
            Self::Exponential { rate } => rate / ((rate + beta) * (rate + beta)),
            Self::KendallGamma { stages, rate } => {
                let k = *stages as f64;
                let kr = k * rate;
                k * (kr / (kr + beta)).powi(*stages as i32) / (kr + beta)
            }
            Self::Rahn { rate, stages } => {
                // Logarithmic derivative of the finite product.
                let b = beta / rate;
                let weight: f64 = (1..=*stages).map(|i| 1.0 / (b + i as f64)).sum();
                self.laplace_stieltjes(beta) * weight / rate
            }
            Self::Tabulated(table) => table.discounted_mean(beta),
        }
    }

    pub fn mean(&self) -> f64 {
        self.discounted_mean(0.0)
    }

    /// Smallest `t` with `G(t) ≥ p`.
    pub fn quantile(&self, p: f64) -> f64 {
        let p = p.clamp(0.0, 1.0);
        if let Self::Tabulated(table) = self {
            return table.quantile(p);
        }
        let mut hi = self.mean().max(1e-12);
        while self.cdf_at(hi) < p && hi < 1e300 {
            hi *= 2.0;
        }
        crate::numeric::bisect(|t| self.cdf_at(t) - p, 0.0, hi, 1e-14 * hi)
    }

    pub fn median(&self) -> f64 {
        self.quantile(0.5)
    }

    /// Rates of the sequential exponential phases for phase-type families;
    /// `None` for tabulated laws.
    pub fn stage_rates(&self) -> Option<Vec<f64>> {
        match self {
            Self::Exponential { rate } => Some(vec![*rate]),
            Self::KendallGamma { stages, rate } => {
                Some(vec![*stages as f64 * rate; *stages as usize])
            }
            // max of k Exp(α) = Exp(kα) + Exp((k-1)α) + … + Exp(α)
            Self::Rahn { rate, stages } => {
                Some((1..=*stages).rev().map(|i| i as f64 * rate).collect())
            }
            Self::Tabulated(_) => None,
        }
    }

    pub fn is_lattice(&self) -> bool {
        matches!(self, Self::Tabulated(t) if t.is_lattice())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Self::Exponential { rate } => Exp::new(*rate).expect("validated rate").sample(rng),
            Self::KendallGamma { stages, rate } => {
                let stage = Exp::new(*stages as f64 * rate).expect("validated rate");
                (0..*stages).map(|_| stage.sample(rng)).sum()
            }
            Self::Rahn { rate, stages } => {
                let stage = Exp::new(*rate).expect("validated rate");
                (0..*stages).map(|_| stage.sample(rng)).fold(0.0, f64::max)
            }
            Self::Tabulated(table) => table.quantile(rng.random::<f64>()),
        }
    }
}

fn check_rate(rate: f64) -> Result<()> {
    if rate > 0.0 && rate.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "life-time rate must be positive and finite, got {rate}"
        )))
    }
}

fn check_stages(stages: u32) -> Result<()> {
    if stages >= 1 {
        Ok(())
    } else {
        Err(Error::invalid("life-time stage count must be at least 1"))
    }
}

/// Regularized lower incomplete gamma `P(k, x)` for integer `k`.
fn gamma_p_integer(k: u32, x: f64) -> f64 {
    let k_f = k as f64;
    if x < k_f + 1.0 {
        // Series e^{-x} Σ_{j≥k} x^j / j!, no cancellation for small x.
        let mut term = (-x).exp();
        for j in 1..=k {
            term *= x / j as f64;
        }
        let mut sum = 0.0;
        let mut j = k_f;
        while term > 1e-18 * sum || sum == 0.0 {
            sum += term;
            j += 1.0;
            term *= x / j;
            if term == 0.0 {
                break;
            }
        }
        sum.min(1.0)
    } else {
        let mut term = (-x).exp();
        let mut sum = term;
        for j in 1..k {
            term *= x / j as f64;
            sum += term;
        }
        1.0 - sum
    }
}

/// Piecewise-linear CDF through `(t_i, G_i)` knots starting at `(0, 0)` and
/// ending at `G = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedCdf {
    times: Vec<f64>,
    cdf: Vec<f64>,
    source: Option<PathBuf>,
    lattice: bool,
}

impl TabulatedCdf {
    pub fn new(times: Vec<f64>, cdf: Vec<f64>, source: Option<PathBuf>) -> Result<Self> {
        if times.len() != cdf.len() || times.len() < 2 {
            return Err(Error::invalid(
                "life-time table needs at least two (t, G) knots",
            ));
        }
        if times[0] != 0.0 || cdf[0] != 0.0 {
            return Err(Error::invalid("life-time table must start at (0, 0)"));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) || times.iter().any(|t| !t.is_finite()) {
            return Err(Error::invalid(
                "life-time table times must be strictly increasing",
            ));
        }
        if cdf.windows(2).any(|w| w[1] < w[0])
            || cdf.iter().any(|g| !(0.0..=1.0 + 1e-9).contains(g))
        {
            return Err(Error::invalid(
                "life-time table CDF must be nondecreasing within [0, 1]",
            ));
        }
        let last = *cdf.last().expect("nonempty");
        if (last - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!(
                "life-time table must reach G = 1 (defective law, G(∞) = {last})"
            )));
        }
        let mut cdf = cdf;
        *cdf.last_mut().expect("nonempty") = 1.0;
        let lattice = detect_lattice(&times, &cdf);
        Ok(TabulatedCdf {
            times,
            cdf,
            source,
            lattice,
        })
    }

    pub fn from_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut times = Vec::new();
        let mut cdf = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut cols = line.split(',').map(str::trim);
            let (Some(a), Some(b)) = (cols.next(), cols.next()) else {
                return Err(Error::data(format!(
                    "{}:{}: expected t,G",
                    path.display(),
                    lineno + 1
                )));
            };
            match (a.parse::<f64>(), b.parse::<f64>()) {
                (Ok(t), Ok(g)) => {
                    times.push(t);
                    cdf.push(g);
                }
                _ if lineno == 0 => continue, // header
                _ => {
                    return Err(Error::data(format!(
                        "{}:{}: unparsable row {line:?}",
                        path.display(),
                        lineno + 1
                    )))
                }
            }
        }
        Self::new(times, cdf, Some(path.to_path_buf()))
    }

    pub fn source(&self) -> Option<&Path> {
        self.source.as_deref()
    }

    pub fn knots(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.times.iter().copied().zip(self.cdf.iter().copied())
    }

    /// Step-function heuristic: more than 99% of the mass sits on fewer than
    /// ten narrow intervals.
    pub fn is_lattice(&self) -> bool {
        self.lattice
    }

    fn segment(&self, t: f64) -> usize {
        // Index i with times[i] <= t < times[i+1].
        self.times.partition_point(|&x| x <= t).saturating_sub(1)
    }

    fn cdf(&self, t: f64) -> f64 {
        let last = *self.times.last().expect("nonempty");
        if t >= last {
            return 1.0;
        }
        let i = self.segment(t);
        let w = (t - self.times[i]) / (self.times[i + 1] - self.times[i]);
        self.cdf[i] + w * (self.cdf[i + 1] - self.cdf[i])
    }

    fn quantile(&self, p: f64) -> f64 {
        let i = self.cdf.partition_point(|&g| g < p);
        if i == 0 {
            return 0.0;
        }
        if i >= self.cdf.len() {
            return *self.times.last().expect("nonempty");
        }
        let (g0, g1) = (self.cdf[i - 1], self.cdf[i]);
        let (t0, t1) = (self.times[i - 1], self.times[i]);
        t0 + (t1 - t0) * (p - g0) / (g1 - g0)
    }

    fn segments(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.times
            .windows(2)
            .zip(self.cdf.windows(2))
            .map(|(t, g)| (t[0], t[1] - t[0], g[1] - g[0]))
            .filter(|&(_, _, dg)| dg > 0.0)
    }

    // Exact transforms of the piecewise-linear law.
    fn laplace_stieltjes(&self, beta: f64) -> f64 {
        self.segments()
            .map(|(a, width, dg)| dg / width * (-beta * a).exp() * exp_integral_0(beta, width))
            .sum()
    }

    fn discounted_mean(&self, beta: f64) -> f64 {
        self.segments()
            .map(|(a, width, dg)| {
                dg / width
                    * (-beta * a).exp()
                    * (a * exp_integral_0(beta, width) + exp_integral_1(beta, width))
            })
            .sum()
    }
}

/// `∫_0^w e^{-βx} dx`.
fn exp_integral_0(beta: f64, w: f64) -> f64 {
    let z = beta * w;
    if z == 0.0 {
        w
    } else {
        -(-z).exp_m1() / beta
    }
}

/// `∫_0^w x e^{-βx} dx`.
fn exp_integral_1(beta: f64, w: f64) -> f64 {
    let z = beta * w;
    if z < 0.5 {
        // w² Σ (-z)^n / (n! (n + 2))
        let mut term = 1.0;
        let mut sum = 0.0;
        for n in 0..30 {
            sum += term / (n as f64 + 2.0);
            term *= -z / (n as f64 + 1.0);
        }
        w * w * sum
    } else {
        (1.0 - (-z).exp() * (1.0 + z)) / (beta * beta)
    }
}

fn detect_lattice(times: &[f64], cdf: &[f64]) -> bool {
    let span = times.last().expect("nonempty") - times[0];
    let mut pieces: Vec<(f64, f64)> = times
        .windows(2)
        .zip(cdf.windows(2))
        .map(|(t, g)| (g[1] - g[0], t[1] - t[0]))
        .collect();
    pieces.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut mass = 0.0;
    let mut width = 0.0;
    for (count, (dg, w)) in pieces.iter().enumerate() {
        mass += dg;
        width += w;
        if mass > 0.99 {
            return count + 1 < 10 && width < 0.05 * span;
        }
    }
    false
}

impl fmt::Display for LifetimeDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Exponential { rate } => write!(f, "exponential({rate})"),
            Self::KendallGamma { stages, rate } => write!(f, "kendall({stages}, {rate})"),
            Self::Rahn { rate, stages } => write!(f, "rahn({rate}, {stages})"),
            Self::Tabulated(t) => match t.source() {
                Some(p) => write!(f, "table({})", p.display()),
                None => write!(f, "table(<inline>)"),
            },
        }
    }
}

impl FromStr for LifetimeDistribution {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let t = text.trim().trim_matches('"').trim();
        let (name, args) = crate::config::split_call(t)?;
        match name {
            "exponential" | "exp" => {
                let [rate] = crate::config::parse_args::<1>(name, &args)?;
                Self::exponential(rate)
            }
            "kendall" | "gamma" => {
                let [k, rate] = crate::config::parse_args::<2>(name, &args)?;
                Self::kendall(crate::config::as_stages(k)?, rate)
            }
            "rahn" => {
                let [alpha, k] = crate::config::parse_args::<2>(name, &args)?;
                Self::rahn(alpha, crate::config::as_stages(k)?)
            }
            "table" => {
                let [path] = <[String; 1]>::try_from(args)
                    .map_err(|_| Error::parse("table(...) takes exactly one path"))?;
                Self::from_csv(path.trim_matches('"'))
            }
            _ => Err(Error::parse(format!("unknown life-time law {t:?}"))),
        }
    }
}
