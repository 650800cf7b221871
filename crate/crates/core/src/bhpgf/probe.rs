//! The centering function `δ(s) = γ(s) + n₁ ln(1 - s)` near `s = 1`, and the
//! first-order ODE for `γ` in the Markov case.

use super::pgf::{CloneSizePgf, PgfMethod};
use crate::error::{Error, Result};
use crate::lifetime::LifetimeDistribution;
use crate::malthus::ProliferationModel;
use crate::numeric::Dopri5;
use crate::offspring::OffspringDistribution;

/// Absolute accuracy assumed for `1 - g(s)`; probing stops once `1 - g` is
/// within a factor 100 of it.
pub const PRECISION_FLOOR: f64 = 1e-13;

/// `s_j = 1 - 2^{-j}` for `j = 3 ..= 20`.
pub fn default_probe_points() -> Vec<f64> {
    (3..=20).map(|j| 1.0 - 2f64.powi(-j)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeltaProbe {
    pub s: Vec<f64>,
    pub delta: Vec<f64>,
    /// Last computed value.
    pub limit: f64,
    /// Whether successive increments shrank monotonically.
    pub cauchy: bool,
    /// Index into the requested sequence where probing stopped early.
    pub exhausted_at: Option<usize>,
}

impl DeltaProbe {
    pub fn increments(&self) -> Vec<f64> {
        self.delta.windows(2).map(|w| (w[1] - w[0]).abs()).collect()
    }

    /// Size of the last increment, used as the uncertainty of [`limit`](Self::limit).
    pub fn last_increment(&self) -> f64 {
        self.increments().last().copied().unwrap_or(f64::INFINITY)
    }
}

/// Evaluates `δ` along an increasing real sequence approaching 1.
pub fn delta_probe(pgf: &CloneSizePgf, s_sequence: &[f64]) -> Result<DeltaProbe> {
    if s_sequence.len() < 2 {
        return Err(Error::invalid("delta probe needs at least two points"));
    }
    if s_sequence.iter().any(|&s| !(s > 0.0 && s < 1.0))
        || s_sequence.windows(2).any(|w| w[1] <= w[0])
    {
        return Err(Error::invalid(
            "delta probe points must increase strictly inside (0, 1)",
        ));
    }
    let n1 = pgf.model().n1();
    let mut s_used = Vec::new();
    let mut delta = Vec::new();
    let mut exhausted_at = None;
    for (i, &s) in s_sequence.iter().enumerate() {
        let gamma = pgf.gamma_real(s)?;
        if (1.0 - s) * gamma.abs() < 100.0 * PRECISION_FLOOR {
            exhausted_at = Some(i);
            break;
        }
        s_used.push(s);
        delta.push(gamma + n1 * (-s).ln_1p());
    }
    if delta.len() < 2 {
        return Err(Error::numerical(
            "delta probe exhausted precision before two points",
        ));
    }
    let steps: Vec<f64> = delta.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let cauchy = steps.windows(2).all(|w| w[1] <= w[0]);
    Ok(DeltaProbe {
        limit: *delta.last().unwrap(),
        s: s_used,
        delta,
        cauchy,
        exhausted_at,
    })
}

/// `z̄(s) = (λ/β)(s - f(s))/(1 - s)`, evaluated as `(λ/β)(h(s) - 1)`.
pub fn zbar(offspring: &OffspringDistribution, rate: f64, beta: f64, s: f64) -> f64 {
    rate / beta * (offspring.h_real(s) - 1.0)
}

/// `γ` on an increasing mesh in `[s_start, 1)` for exponential life-times,
/// from `γ = 1 + z̄ (γ - γ'(1 - s))` in `t = -ln(1 - s)`. The initial value at
/// `s_start` comes from the renewal solver (Richardson-extrapolated over two
/// step sizes).
pub fn markov_gamma_ode(
    model: &ProliferationModel,
    s_start: f64,
    mesh: &[f64],
) -> Result<Vec<f64>> {
    let LifetimeDistribution::Exponential { rate } = *model.lifetime() else {
        return Err(Error::invalid(
            "the Markov gamma ODE needs an exponential life-time",
        ));
    };
    let q = model.extinction_prob();
    if !(s_start > q && s_start < 1.0) {
        return Err(Error::invalid(format!(
            "s_start must lie in (q, 1) = ({q}, 1), got {s_start}"
        )));
    }
    if mesh.iter().any(|&s| !(s >= s_start && s < 1.0)) || mesh.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::invalid(
            "gamma mesh must increase within [s_start, 1)",
        ));
    }
    let beta = model.beta();
    let coarse = 2e-3 / beta;
    let gamma_at = |step: f64| -> Result<f64> {
        let pgf = CloneSizePgf::new(
            model,
            PgfMethod::Renewal {
                step: Some(step),
                horizon: None,
            },
        )?;
        pgf.gamma_real(s_start)
    };
    let g_coarse = gamma_at(coarse)?;
    let g_fine = gamma_at(coarse / 2.0)?;
    let start = (4.0 * g_fine - g_coarse) / 3.0;

    let off = model.offspring();
    let rhs = |t: f64, y: &[f64], dy: &mut [f64]| {
        let s = -(-t).exp_m1();
        let z = zbar(off, rate, beta, s);
        dy[0] = y[0] - (y[0] - 1.0) / z;
    };
    let outputs: Vec<f64> = mesh.iter().map(|&s| -(-s).ln_1p()).collect();
    let mut y = [start];
    let mut out = vec![0.0; mesh.len()];
    Dopri5::with_tolerances(1e-12, 1e-14).integrate_to_points(
        rhs,
        -(-s_start).ln_1p(),
        &mut y,
        &outputs,
        |i, y| out[i] = y[0],
    )?;
    Ok(out)
}
