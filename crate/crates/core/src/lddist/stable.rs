//! The totally skewed stable law of index 1 with characteristic function
//! `ψ(θ) = (-iθ)^{-iθ} = exp(-iθ ln|θ| - (π/2)|θ|)`. Its right tail is
//! `P(ξ > x) ~ 1/x`; the left tail decays doubly exponentially.

use std::f64::consts::{FRAC_2_PI, FRAC_PI_2, PI};
use std::sync::OnceLock;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numeric::{bisect, integrate};

/// Upper limit of the Gil-Pelaez integrals.
pub const THETA_MAX: f64 = 200.0;
/// Domain on which [`stable_cdf`] is supported.
pub const CDF_DOMAIN: f64 = 200.0;

const BREAKS: [f64; 6] = [0.0, 0.5, 2.0, 8.0, 30.0, THETA_MAX];

pub fn stable_cf(theta: f64) -> Complex64 {
    if theta == 0.0 {
        return Complex64::new(1.0, 0.0);
    }
    Complex64::new(-FRAC_PI_2 * theta.abs(), -theta * theta.abs().ln()).exp()
}

fn piecewise<F: Fn(f64) -> f64 + Copy>(f: F, what: &str, x: f64) -> Result<f64> {
    let mut total = 0.0;
    for w in BREAKS.windows(2) {
        let r = integrate(f, w[0], w[1], 1e-14, 1e-13, 20_000);
        if !r.converged && r.error > 1e-10 {
            return Err(Error::numerical(format!(
                "stable {what} quadrature failed at x = {x} on [{}, {}] (residual {:.2e})",
                w[0], w[1], r.error
            )));
        }
        total += r.value;
    }
    Ok(total)
}

/// Gil-Pelaez inversion
/// `F(x) = 1/2 - (1/π) ∫_0^Θ Im(e^{-iθx} ψ(θ)) / θ dθ`, clamped to `[0, 1]`.
pub fn stable_cdf(x: f64) -> Result<f64> {
    if !(x.abs() <= CDF_DOMAIN) {
        return Err(Error::invalid(format!(
            "stable_cdf supports |x| <= {CDF_DOMAIN}, got {x}"
        )));
    }
    // -Im(e^{-iθx} ψ(θ)) / θ = e^{-πθ/2} sin(θ (ln θ + x)) / θ
    let f = |t: f64| {
        if t == 0.0 {
            return 0.0;
        }
        (-FRAC_PI_2 * t).exp() * (t * (t.ln() + x)).sin() / t
    };
    let integral = piecewise(f, "CDF", x)?;
    Ok((0.5 + integral / PI).clamp(0.0, 1.0))
}

/// Density `(1/π) ∫_0^Θ Re(e^{-iθx} ψ(θ)) dθ`.
pub fn stable_density(x: f64) -> Result<f64> {
    if !(x.abs() <= CDF_DOMAIN) {
        return Err(Error::invalid(format!(
            "stable_density supports |x| <= {CDF_DOMAIN}, got {x}"
        )));
    }
    let f = |t: f64| {
        if t == 0.0 {
            return 1.0;
        }
        (-FRAC_PI_2 * t).exp() * (t * (t.ln() + x)).cos()
    };
    Ok((piecewise(f, "density", x)? / PI).max(0.0))
}

/// The CDF from the non-oscillatory single-integral representation of
/// index-1 stable laws,
/// `F_Z(z) = (1/π) ∫_{-π/2}^{π/2} exp(-e^{-πz/2} V(φ)) dφ` with
/// `V(φ) = (2/π) (π/2 + φ)/cos φ · exp((π/2 + φ) tan φ)`, for the standard
/// law `Z` with `E e^{itZ} = exp(-|t| - i(2/π) t ln|t|)`. Our `ξ` equals
/// `(π/2) Z - ln(2/π)`. Valid for every real `x`; for `x > 0` the survival
/// function is integrated directly so the `1/x` tail keeps its precision.
pub fn stable_cdf_integral(x: f64) -> f64 {
    if x > 0.0 {
        1.0 - zolotarev(x, true)
    } else {
        zolotarev(x, false)
    }
}

/// `1 - F(x)` from the same representation, accurate in the right tail.
pub fn stable_survival_integral(x: f64) -> f64 {
    if x > 0.0 {
        zolotarev(x, true)
    } else {
        1.0 - zolotarev(x, false)
    }
}

/// `(1/π) ∫ exp(-e^{L(φ)}) dφ`, or its complement when `survival` is set,
/// where `L = ln(e^{-πz/2} V(φ))` is increasing in `φ`.
fn zolotarev(x: f64, survival: bool) -> f64 {
    let z = FRAC_2_PI * (x + FRAC_2_PI.ln());
    let log_sv = move |phi: f64| {
        let a = FRAC_PI_2 + phi;
        -FRAC_PI_2 * z + FRAC_2_PI.ln() + a.ln() - phi.cos().ln() + a * phi.tan()
    };
    let (lo, hi) = (-FRAC_PI_2, FRAC_PI_2);
    // The integrand switches between 0 and 1 around the zero of L.
    let split = if log_sv(lo + 1e-12) >= 0.0 {
        lo
    } else {
        bisect(log_sv, lo + 1e-12, hi - 1e-12, 1e-15)
    };
    let f = move |phi: f64| {
        let e = log_sv(phi).exp();
        let v = if survival { -(-e).exp_m1() } else { (-e).exp() };
        if v.is_finite() {
            v
        } else {
            f64::from(u8::from(survival))
        }
    };
    let mut total = 0.0;
    for (a, b) in [(lo, split), (split, hi)] {
        if b > a {
            total += integrate(f, a, b, 1e-300, 1e-13, 20_000).value;
        }
    }
    (total / PI).clamp(0.0, 1.0)
}

/// Cubic Hermite table of the CDF (values and densities from the Gil-Pelaez
/// integrals) on `[x_min, 200]`, with [`stable_cdf_integral`] beyond.
#[derive(Debug, Clone)]
pub struct StableCdfTable {
    x_min: f64,
    step: f64,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl StableCdfTable {
    pub fn new(x_min: f64, step: f64) -> Result<Self> {
        use rayon::prelude::*;
        if !(x_min < CDF_DOMAIN && step > 0.0) {
            return Err(Error::invalid(
                "stable table needs x_min < 200 and a positive step",
            ));
        }
        let n = ((CDF_DOMAIN - x_min) / step).floor() as usize + 1;
        let rows = (0..n)
            .into_par_iter()
            .map(|i| {
                let x = x_min + i as f64 * step;
                Ok((stable_cdf(x)?, stable_density(x)?))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut values: Vec<f64> = rows.iter().map(|r| r.0).collect();
        // Rectify: quadrature noise must not make the CDF decrease.
        for i in 1..n {
            values[i] = values[i].max(values[i - 1]);
        }
        let slopes = rows.iter().map(|r| r.1).collect();
        Ok(StableCdfTable {
            x_min,
            step,
            values,
            slopes,
        })
    }

    /// Process-wide table on `[-12, 200]` with step `0.01`.
    pub fn shared() -> Result<&'static StableCdfTable> {
        static TABLE: OnceLock<StableCdfTable> = OnceLock::new();
        if let Some(t) = TABLE.get() {
            return Ok(t);
        }
        let table = StableCdfTable::new(-12.0, 0.01)?;
        Ok(TABLE.get_or_init(|| table))
    }

    pub fn x_max(&self) -> f64 {
        self.x_min + (self.values.len() - 1) as f64 * self.step
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.x_min {
            return if x == self.x_min { self.values[0] } else { 0.0 };
        }
        if x >= self.x_max() {
            return stable_cdf_integral(x);
        }
        let pos = (x - self.x_min) / self.step;
        let i = (pos.floor() as usize).min(self.values.len() - 2);
        let t = pos - i as f64;
        let (p0, p1) = (self.values[i], self.values[i + 1]);
        let (m0, m1) = (self.slopes[i] * self.step, self.slopes[i + 1] * self.step);
        let t2 = t * t;
        let t3 = t2 * t;
        let v = (2.0 * t3 - 3.0 * t2 + 1.0) * p0
            + (t3 - 2.0 * t2 + t) * m0
            + (-2.0 * t3 + 3.0 * t2) * p1
            + (t3 - t2) * m1;
        v.clamp(p0, p1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn characteristic_function_values() {
        assert_eq!(stable_cf(0.0), Complex64::new(1.0, 0.0));
        assert!((stable_cf(2.0).norm() - (-PI).exp()).abs() < 1e-15);
        assert!((stable_cf(2.0).norm() - 0.043214).abs() < 1e-6);
        for t in [0.5, 1.0, 3.0] {
            assert!((stable_cf(-t) - stable_cf(t).conj()).norm() < 1e-15);
            assert!((stable_cf(t).norm() - (-FRAC_PI_2 * t).exp()).abs() < 1e-15);
            // (-iθ)^{-iθ} through the principal logarithm
            let direct = (-Complex64::new(0.0, t) * Complex64::new(0.0, -t).ln()).exp();
            assert!((direct - stable_cf(t)).norm() < 1e-14);
        }
    }

    #[test]
    fn two_representations_agree() {
        for x in [
            -4.0, -1.5, -0.3, 0.0, 0.7, 2.0, 5.0, 20.0, 75.0, 150.0, 199.0,
        ] {
            let a = stable_cdf(x).unwrap();
            let b = stable_cdf_integral(x);
            assert!((a - b).abs() < 1e-10, "x = {x}: {a} vs {b}");
        }
    }

    #[test]
    fn tails() {
        assert!(stable_cdf(-150.0).unwrap() < 1e-3);
        assert!(stable_cdf(-12.0).unwrap() < 1e-14);
        assert!(stable_cdf_integral(-12.0) < 1e-300);
        // P(ξ > x) ~ 1/x
        let upper = 1.0 - stable_cdf(150.0).unwrap();
        assert!((upper - 1.0 / 150.0).abs() < 1e-3);
        let far = stable_survival_integral(1e4);
        assert!((far * 1e4 - 1.0).abs() < 2e-3, "{far}");
        assert!(stable_cdf(250.0).is_err());
    }

    #[test]
    fn table_interpolates() {
        let table = StableCdfTable::shared().unwrap();
        for x in [-5.0, -2.123, 0.0, 0.333, 3.25, 40.02, 199.99, 250.0, 600.0] {
            let exact = stable_cdf_integral(x);
            assert!((table.cdf(x) - exact).abs() < 1e-9, "x = {x}");
        }
    }
}
