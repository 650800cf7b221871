//! Backward Kolmogorov system for phase-type life-times.
//!
//! When the life-time is a sum of independent exponential phases with rates
//! `r_1 … r_k`, the clone PGF started at phase `j` obeys
//! `F_j' = r_j (F_{j+1} - F_j)` with `F_{k+1} = f(F_1)`. In scaled complement
//! form `E_j = (1 - F_j) / (1 - s)` this reads
//! `E_j' = r_j (E_{j+1} - E_j)`, `E_{k+1} = Ψ(E_1)`, all `E_j(0) = 1`, and
//! `γ(s) = β ∫ e^{-βu} E_1(u) du` is carried as one more state component.

use num_complex::Complex64;

use crate::error::Result;
use crate::numeric::Dopri5;
use crate::offspring::OffspringDistribution;

#[derive(Debug, Clone)]
pub(crate) struct PhaseTypeSolver {
    rates: Vec<f64>,
    beta: f64,
    ode: Dopri5,
}

impl PhaseTypeSolver {
    pub(crate) fn new(rates: Vec<f64>, beta: f64) -> Self {
        PhaseTypeSolver {
            rates,
            beta,
            ode: Dopri5::with_tolerances(1e-11, 1e-14),
        }
    }

    /// `(γ(s), tail fraction)` for `s ≠ 1`.
    pub(crate) fn gamma(
        &self,
        offspring: &OffspringDistribution,
        s: Complex64,
    ) -> Result<(Complex64, f64)> {
        let one = Complex64::new(1.0, 0.0);
        let d0 = one - s;
        let k = self.rates.len();
        let beta = self.beta;
        // E grows until it saturates near (1 - q) / |1 - s|; the horizon
        // leaves e^{-30} of discounting after that.
        let horizon = (30.0 + (1.0 / d0.norm()).ln().max(0.0)) / beta;
        // Layout: E_1 … E_k (re, im), ∫ β e^{-βu} E_1 (re, im), e^{-βu}.
        let mut y = vec![0.0; 2 * k + 3];
        for j in 0..k {
            y[2 * j] = 1.0;
        }
        y[2 * k + 2] = 1.0;
        let rates = &self.rates;
        let rhs = |_u: f64, y: &[f64], dy: &mut [f64]| {
            let e1 = Complex64::new(y[0], y[1]);
            for j in 0..k {
                let here = Complex64::new(y[2 * j], y[2 * j + 1]);
                let next = if j + 1 < k {
                    Complex64::new(y[2 * j + 2], y[2 * j + 3])
                } else {
                    e1 * offspring.h(one - d0 * e1)
                };
                let d = rates[j] * (next - here);
                dy[2 * j] = d.re;
                dy[2 * j + 1] = d.im;
            }
            let w = beta * y[2 * k + 2];
            dy[2 * k] = w * e1.re;
            dy[2 * k + 1] = w * e1.im;
            dy[2 * k + 2] = -w;
        };
        self.ode.integrate(rhs, 0.0, horizon, &mut y)?;
        let integral = Complex64::new(y[2 * k], y[2 * k + 1]);
        let tail = Complex64::new(y[0], y[1]) * (-beta * horizon).exp();
        let gamma = integral + tail;
        Ok((gamma, tail.norm() / gamma.norm().max(f64::MIN_POSITIVE)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lea_coulson_gamma() {
        let solver = PhaseTypeSolver::new(vec![1.0], 1.0);
        let off = OffspringDistribution::binary();
        for s in [0.1, 0.5, 0.9, 0.999, 1.0 - 2f64.powi(-20)] {
            let (gamma, _) = solver.gamma(&off, Complex64::new(s, 0.0)).unwrap();
            let exact = -(-s).ln_1p() / s;
            assert!(
                (gamma.re - exact).abs() < 1e-8 * exact,
                "s = {s}: {} vs {exact}",
                gamma.re
            );
            assert!(gamma.im.abs() < 1e-14);
        }
    }

    #[test]
    fn lea_coulson_complex_points() {
        let solver = PhaseTypeSolver::new(vec![2.0], 2.0);
        let off = OffspringDistribution::binary();
        for s in [
            Complex64::new(0.3, 0.4),
            Complex64::new(-0.9, 0.1),
            Complex64::from_polar(0.999, 0.01),
        ] {
            let (gamma, _) = solver.gamma(&off, s).unwrap();
            let exact = -(Complex64::new(1.0, 0.0) - s).ln() / s;
            assert!((gamma - exact).norm() < 1e-8, "s = {s}");
        }
    }
}
