//! Mutant-count PMF from `Σ p_r s^r = exp(m (g(s) - 1))` by discrete Cauchy
//! integrals on a circle of radius `c < 1`.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::bhpgf::CloneSizePgf;
use crate::error::{Error, Result};
use crate::numeric::KahanSum;

/// Negative coefficients above this are inversion noise and clamped to 0.
pub const NOISE_FLOOR: f64 = 1e-9;

/// `c = exp(ln(1e-14) / (2R))`, not below 0.8.
pub fn inversion_radius(rmax: usize) -> f64 {
    ((1e-14f64).ln() / (2.0 * rmax.max(1) as f64))
        .exp()
        .max(0.8)
}

/// Truncation that captures at least 0.999 of the mass: the tail beyond `R`
/// is about `n₁ m / R`.
pub fn pmf_rmax(n1: f64, m: f64) -> usize {
    ((2000.0 * n1 * m).ceil() as usize).max(64)
}

/// Smallest `M ≥ n` of the form `2^a 3^b 5^c`.
pub fn fft_size(n: usize) -> usize {
    let mut best = n.next_power_of_two();
    let mut p5 = 1;
    while p5 < best {
        let mut p35 = p5;
        while p35 < best {
            let mut m = p35;
            while m < n {
                m *= 2;
            }
            best = best.min(m);
            p35 *= 3;
        }
        p5 *= 5;
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct LddPmf {
    pub m: f64,
    /// `p_0 … p_R`.
    pub probs: Vec<f64>,
    pub captured_mass: f64,
    pub inversion_radius: f64,
    pub points: usize,
    pub model_tag: String,
    /// Slightly negative coefficients set to zero.
    pub clamped: usize,
    /// Coefficients below `-NOISE_FLOOR` (also set to zero).
    pub below_floor: usize,
    /// `|p_R| > 1e-6 max p_r`: `R` is short for this `m`.
    pub aliasing_warning: bool,
}

impl LddPmf {
    pub fn rmax(&self) -> usize {
        self.probs.len() - 1
    }

    pub fn cdf(&self) -> Vec<f64> {
        let mut acc = KahanSum::default();
        self.probs
            .iter()
            .map(|&p| {
                acc.add(p);
                acc.value()
            })
            .collect()
    }
}

/// `g` sampled on the circle `|s| = c` at the `M`-th roots of unity; one
/// sample serves every `m`.
#[derive(Clone)]
pub struct CircleSample {
    radius: f64,
    /// `g(c ω^j)`.
    values: Vec<Complex64>,
    g0: f64,
    model_tag: String,
    fft: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for CircleSample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CircleSample")
            .field("radius", &self.radius)
            .field("points", &self.values.len())
            .field("g0", &self.g0)
            .field("model_tag", &self.model_tag)
            .finish()
    }
}

impl CircleSample {
    /// Samples `g` for PMFs up to `rmax` using `points` nodes (default: the
    /// smallest FFT-friendly size `≥ 4 rmax`).
    pub fn new(pgf: &CloneSizePgf, rmax: usize, points: Option<usize>) -> Result<Self> {
        Self::with_radius(pgf, rmax, points, inversion_radius(rmax))
    }

    pub fn with_radius(
        pgf: &CloneSizePgf,
        rmax: usize,
        points: Option<usize>,
        radius: f64,
    ) -> Result<Self> {
        if rmax < 1 {
            return Err(Error::invalid("PMF truncation R must be at least 1"));
        }
        if !(radius > 0.0 && radius < 1.0) {
            return Err(Error::invalid(format!(
                "inversion radius must lie in (0, 1), got {radius}"
            )));
        }
        let m_points = points.unwrap_or_else(|| fft_size(4 * rmax));
        if m_points < 4 * rmax {
            return Err(Error::invalid(format!(
                "need at least 4R = {} circle points, got {m_points}",
                4 * rmax
            )));
        }
        // g has real coefficients, so the lower half circle is the mirror image.
        let half: Vec<Complex64> = (0..=m_points / 2)
            .map(|j| {
                Complex64::from_polar(radius, std::f64::consts::TAU * j as f64 / m_points as f64)
            })
            .collect();
        let upper = pgf.eval_many(&half)?;
        let mut values = vec![Complex64::new(0.0, 0.0); m_points];
        for (j, v) in values.iter_mut().enumerate() {
            *v = if j <= m_points / 2 {
                upper[j]
            } else {
                upper[m_points - j].conj()
            };
        }
        let g0 = pgf.eval(Complex64::new(0.0, 0.0))?.re;
        let model = pgf.model();
        let fft = FftPlanner::new().plan_fft_forward(m_points);
        Ok(CircleSample {
            radius,
            values,
            g0,
            model_tag: format!("{} | {}", model.offspring(), model.lifetime()),
            fft,
        })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn points(&self) -> usize {
        self.values.len()
    }

    /// `g(0)`: probability that a clone has no living cells when observed.
    pub fn g0(&self) -> f64 {
        self.g0
    }

    /// `p_0 … p_rmax` for expected mutation count `m`.
    pub fn pmf(&self, m: f64, rmax: usize) -> Result<LddPmf> {
        if !(m >= 0.0 && m.is_finite()) {
            return Err(Error::invalid(format!(
                "m must be finite and nonnegative, got {m}"
            )));
        }
        let n = self.values.len();
        if rmax >= n {
            return Err(Error::invalid(format!(
                "R = {rmax} needs more than {n} circle points"
            )));
        }
        let mut buf: Vec<Complex64> = self.values.iter().map(|&g| (m * (g - 1.0)).exp()).collect();
        self.fft.process(&mut buf);
        let log_c = self.radius.ln();
        let mut probs = Vec::with_capacity(rmax + 1);
        probs.push((m * (self.g0 - 1.0)).exp());
        let (mut clamped, mut below_floor) = (0, 0);
        for (r, b) in buf.iter().enumerate().take(rmax + 1).skip(1) {
            let mut p = b.re / n as f64 * (-(r as f64) * log_c).exp();
            if p < 0.0 {
                if p >= -NOISE_FLOOR {
                    clamped += 1;
                } else {
                    below_floor += 1;
                }
                p = 0.0;
            }
            probs.push(p);
        }
        let captured_mass = probs.iter().copied().collect::<KahanSum>().value();
        let max = probs.iter().copied().fold(0.0, f64::max);
        let aliasing_warning = probs[rmax] > 1e-6 * max;
        Ok(LddPmf {
            m,
            probs,
            captured_mass,
            inversion_radius: self.radius,
            points: n,
            model_tag: self.model_tag.clone(),
            clamped,
            below_floor,
            aliasing_warning,
        })
    }
}

/// `p_0 … p_R` for one `m`.
pub fn ldd_pmf(pgf: &CloneSizePgf, m: f64, rmax: usize, points: Option<usize>) -> Result<LddPmf> {
    CircleSample::new(pgf, rmax, points)?.pmf(m, rmax)
}
