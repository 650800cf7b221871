//! Forward-marching solver for the Bellman-Harris renewal equation
//!
//! ```text
//! F_u(s) = (1 - G(u)) s + ∫_0^u f(F_{u-y}(s)) dG(y)
//! ```
//!
//! written for the scaled complement `E_u = (1 - F_u(s)) / (1 - s)`, which
//! satisfies `E_u = 1 - G(u) + ∫_0^u Ψ(E_{u-y}) dG(y)` with
//! `Ψ(E) = E h(1 - (1 - s) E)`. Working with `E` keeps full relative
//! precision for `s` close to 1.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::malthus::ProliferationModel;
use crate::offspring::OffspringDistribution;

/// Largest `G(h)` accepted for the first Stieltjes increment.
const MAX_FIRST_INCREMENT: f64 = 0.1;
/// `|F|` beyond this signals an unstable step size.
const STABILITY_BOUND: f64 = 1.0 + 1e-8;
const TAIL_WARNING: f64 = 1e-8;

/// `F_{i h}(s_j)` on a uniform time grid for a set of evaluation points.
#[derive(Debug, Clone)]
pub struct PgfGrid {
    step: f64,
    horizon: f64,
    points: Vec<Complex64>,
    /// `scaled[j][i] = E_{i h}(s_j)`.
    scaled: Vec<Vec<Complex64>>,
}

impl PgfGrid {
    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    /// Number of time rows, including `u = 0`.
    pub fn rows(&self) -> usize {
        self.scaled.first().map_or(0, Vec::len)
    }

    pub fn time(&self, row: usize) -> f64 {
        row as f64 * self.step
    }

    /// `F_{row h}(s_point)`.
    pub fn value(&self, row: usize, point: usize) -> Complex64 {
        let d0 = Complex64::new(1.0, 0.0) - self.points[point];
        Complex64::new(1.0, 0.0) - d0 * self.scaled[point][row]
    }

    /// The column `u ↦ F_u(s_point)`.
    pub fn column(&self, point: usize) -> Vec<Complex64> {
        (0..self.rows()).map(|row| self.value(row, point)).collect()
    }

    /// `(1 - F_u(s)) / (1 - s)` along the grid.
    pub fn scaled_complement(&self, point: usize) -> &[Complex64] {
        &self.scaled[point]
    }

    fn index_of(&self, s: Complex64) -> Option<usize> {
        self.points.iter().position(|&p| p == s)
    }
}

/// Default `(h, U)`: `U = 30/β`, `h = min(1e-2/β, t_med/50)`.
pub fn default_discretization(model: &ProliferationModel) -> (f64, f64) {
    let beta = model.beta();
    let step = (1e-2 / beta).min(model.lifetime().median() / 50.0);
    (step, 30.0 / beta)
}

/// Solves the renewal equation on `[0, horizon]` with step `step` for every
/// point, in parallel over points.
pub fn solve_renewal(
    model: &ProliferationModel,
    points: &[Complex64],
    step: f64,
    horizon: f64,
) -> Result<PgfGrid> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::invalid(format!(
            "renewal step must be positive, got {step}"
        )));
    }
    if !(horizon >= step && horizon.is_finite()) {
        return Err(Error::invalid(format!(
            "renewal horizon {horizon} must be at least one step ({step})"
        )));
    }
    if let Some(bad) = points.iter().find(|s| !(s.norm() <= 1.0 + 1e-12)) {
        return Err(Error::invalid(format!(
            "evaluation point {bad} lies outside the unit disk"
        )));
    }
    let kernel = Kernel::new(model, step, horizon)?;
    let scaled = points
        .par_iter()
        .map(|&s| kernel.march(model.offspring(), s))
        .collect::<Result<Vec<_>>>()?;
    Ok(PgfGrid {
        step,
        horizon: (kernel.rows - 1) as f64 * step,
        points: points.to_vec(),
        scaled,
    })
}

/// `β ∫_0^∞ e^{-βu} F_u(s) du` together with `γ(s) = (1 - g(s)) / (1 - s)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GEstimate {
    pub g: Complex64,
    pub gamma: Complex64,
    /// Contribution of `u > U`, relative to `|γ|`.
    pub tail_fraction: f64,
}

impl GEstimate {
    pub fn tail_warning(&self) -> bool {
        self.tail_fraction > TAIL_WARNING
    }
}

/// `g(s)` from a solved grid. Piecewise-linear `F` is integrated exactly
/// against `β e^{-βu}`; beyond the horizon `F` is held at `F_U`.
pub fn compute_g(model: &ProliferationModel, grid: &PgfGrid, s: Complex64) -> Result<GEstimate> {
    let j = grid
        .index_of(s)
        .ok_or_else(|| Error::invalid(format!("s = {s} is not a grid point")))?;
    let (integral, tail) = discounted_integral(model.beta(), grid.step, &grid.scaled[j]);
    let gamma = integral + tail;
    let d0 = Complex64::new(1.0, 0.0) - s;
    let tail_fraction = if gamma.norm() > 0.0 {
        tail.norm() / gamma.norm()
    } else {
        0.0
    };
    Ok(GEstimate {
        g: Complex64::new(1.0, 0.0) - d0 * gamma,
        gamma,
        tail_fraction,
    })
}

/// `β ∫_0^U e^{-βu} E(u) du` for piecewise-linear `E`, and the tail
/// `E(U) e^{-βU}`.
pub(crate) fn discounted_integral(beta: f64, step: f64, e: &[Complex64]) -> (Complex64, Complex64) {
    let x = beta * step;
    let decay = (-x).exp();
    let total = -(-x).exp_m1();
    // β ∫_0^h e^{-βt} (t/h) dt
    let slope_w = (total - x * decay) / x;
    let left_w = total - slope_w;
    let mut acc = Complex64::new(0.0, 0.0);
    let mut weight = 1.0;
    for pair in e.windows(2) {
        acc += weight * (left_w * pair[0] + slope_w * pair[1]);
        weight *= decay;
    }
    let last = e.last().copied().unwrap_or(Complex64::new(1.0, 0.0));
    (acc, weight * last)
}

/// Stieltjes weights of the trapezoid rule on the life-time CDF.
struct Kernel {
    step: f64,
    rows: usize,
    /// `1 - G(i h)`.
    survival: Vec<f64>,
    /// `ΔG_i = G(i h) - G((i-1) h)`, index 0 unused.
    increments: Vec<f64>,
    /// `w_n = (ΔG_n + ΔG_{n+1}) / 2` stored reversed, so that the history
    /// sum is a forward dot product.
    weights_rev: Vec<f64>,
}

impl Kernel {
    fn new(model: &ProliferationModel, step: f64, horizon: f64) -> Result<Self> {
        let rows = (horizon / step).round() as usize + 1;
        let life = model.lifetime();
        let cdf: Vec<f64> = (0..=rows).map(|i| life.cdf_at(i as f64 * step)).collect();
        if cdf[1] >= MAX_FIRST_INCREMENT {
            return Err(Error::invalid(format!(
                "renewal step {step} too coarse: G(h) = {} must stay below {MAX_FIRST_INCREMENT}",
                cdf[1]
            )));
        }
        let survival = cdf[..rows].iter().map(|g| 1.0 - g).collect();
        let mut increments = vec![0.0; rows + 1];
        for i in 1..=rows {
            increments[i] = cdf[i] - cdf[i - 1];
        }
        let mut weights_rev = vec![0.0; rows];
        for n in 1..rows {
            weights_rev[rows - n] = 0.5 * (increments[n] + increments[n + 1]);
        }
        Ok(Kernel {
            step,
            rows,
            survival,
            increments,
            weights_rev,
        })
    }

    /// Scaled complement `E_{i h}(s)` for `i = 0 .. rows`.
    fn march(&self, offspring: &OffspringDistribution, s: Complex64) -> Result<Vec<Complex64>> {
        let one = Complex64::new(1.0, 0.0);
        let d0 = one - s;
        let psi = |e: Complex64| e * offspring.h(one - d0 * e);
        let n = self.rows;
        let mut out = vec![one; n];
        // Ψ history split into real and imaginary parts for the dot products.
        let mut hist_re = vec![0.0; n];
        let mut hist_im = vec![0.0; n];
        let psi0 = psi(one);
        hist_re[0] = psi0.re;
        hist_im[0] = psi0.im;
        let real = s.im == 0.0;
        let c = 0.5 * self.increments[1];
        for i in 1..n {
            let w = &self.weights_rev[n - i + 1..n];
            let mut a = Complex64::new(self.survival[i], 0.0) + 0.5 * self.increments[i] * psi0;
            a.re += dot(w, &hist_re[1..i]);
            if !real {
                a.im += dot(w, &hist_im[1..i]);
            }
            let mut e = if i >= 2 {
                2.0 * out[i - 1] - out[i - 2]
            } else {
                out[i - 1]
            };
            let mut converged = false;
            for _ in 0..60 {
                let next = a + c * psi(e);
                let change = (next - e).norm();
                e = next;
                if change <= 1e-15 * (1.0 + e.norm()) {
                    converged = true;
                    break;
                }
            }
            if !converged {
                return Err(Error::numerical(format!(
                    "renewal corrector did not converge at u = {}",
                    i as f64 * self.step
                )));
            }
            let f = one - d0 * e;
            if !(f.norm() <= STABILITY_BOUND) {
                return Err(Error::numerical(format!(
                    "renewal step rejected: |F| = {} at row {i} for s = {s}; reduce the step",
                    f.norm()
                )));
            }
            out[i] = e;
            let p = psi(e);
            hist_re[i] = p.re;
            hist_im[i] = p.im;
        }
        Ok(out)
    }
}

/// Dot product with four independent accumulators so it vectorizes.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let chunks_a = a.chunks_exact(4);
    let chunks_b = b.chunks_exact(4);
    let rest: f64 = chunks_a
        .remainder()
        .iter()
        .zip(chunks_b.remainder())
        .map(|(x, y)| x * y)
        .sum();
    for (x, y) in chunks_a.zip(chunks_b) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + rest
}
