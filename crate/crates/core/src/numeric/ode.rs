//! Dormand-Prince 5(4) explicit Runge-Kutta with step-size control.
//!
//! Complex-valued systems are integrated by interleaving real and imaginary
//! parts in the state slice.

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[derive(Debug, Clone, Copy)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    pub initial_step: Option<f64>,
}

impl Default for Dopri5 {
    fn default() -> Self {
        Dopri5 {
            rtol: 1e-10,
            atol: 1e-14,
            max_steps: 1_000_000,
            initial_step: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

struct Work {
    k: [Vec<f64>; 7],
    tmp: Vec<f64>,
    y_new: Vec<f64>,
}

impl Dopri5 {
    pub fn with_tolerances(rtol: f64, atol: f64) -> Self {
        Dopri5 {
            rtol,
            atol,
            ..Default::default()
        }
    }

    /// Integrates `y' = f(t, y)` from `t0` to `t1`, overwriting `y`.
    pub fn integrate<F>(&self, f: F, t0: f64, t1: f64, y: &mut [f64]) -> Result<OdeStats>
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        self.integrate_to_points(f, t0, y, &[t1], |_, _| {})
    }

    /// Integrates through the increasing `outputs`, calling `on_output(i, y)`
    /// when the solution reaches `outputs[i]` exactly.
    pub fn integrate_to_points<F, O>(
        &self,
        mut f: F,
        t0: f64,
        y: &mut [f64],
        outputs: &[f64],
        mut on_output: O,
    ) -> Result<OdeStats>
    where
        F: FnMut(f64, &[f64], &mut [f64]),
        O: FnMut(usize, &[f64]),
    {
        let n = y.len();
        let mut work = Work {
            k: std::array::from_fn(|_| vec![0.0; n]),
            tmp: vec![0.0; n],
            y_new: vec![0.0; n],
        };
        let mut stats = OdeStats::default();
        let mut t = t0;
        f(t, y, &mut work.k[0]);
        stats.evaluations += 1;
        let span = outputs.last().map_or(0.0, |&e| (e - t0).abs());
        let mut h = self
            .initial_step
            .unwrap_or_else(|| self.guess_step(y, &work.k[0], span));
        for (idx, &target) in outputs.iter().enumerate() {
            if target < t {
                return Err(Error::invalid("ODE output points must be increasing"));
            }
            while t < target {
                if stats.accepted + stats.rejected >= self.max_steps {
                    return Err(Error::numerical(format!(
                        "ODE integrator exceeded {} steps at t = {t}",
                        self.max_steps
                    )));
                }
                let last = t + h >= target;
                let step = if last { target - t } else { h };
                let err = self.trial_step(&mut f, t, step, y, &mut work);
                stats.evaluations += 6;
                if !err.is_finite() {
                    stats.rejected += 1;
                    h = step * 0.1;
                    if h < 1e-300 {
                        return Err(Error::numerical(
                            "ODE step size underflow (non-finite state)",
                        ));
                    }
                    continue;
                }
                let factor = if err == 0.0 {
                    5.0
                } else {
                    (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                };
                if err <= 1.0 {
                    t = if last { target } else { t + step };
                    y.copy_from_slice(&work.y_new);
                    work.k.swap(0, 6);
                    stats.accepted += 1;
                    // Keep the proposed size rather than the truncated final step.
                    h = if last {
                        h.max(step * factor)
                    } else {
                        step * factor
                    };
                } else {
                    stats.rejected += 1;
                    h = step * factor.min(1.0);
                    if h <= f64::EPSILON * t.abs().max(1.0) {
                        return Err(Error::numerical(format!(
                            "ODE step size underflow at t = {t}"
                        )));
                    }
                }
            }
            on_output(idx, y);
        }
        Ok(stats)
    }

    fn guess_step(&self, y: &[f64], dy: &[f64], span: f64) -> f64 {
        let mut d0 = 0.0f64;
        let mut d1 = 0.0f64;
        for (yi, di) in y.iter().zip(dy) {
            let sc = self.atol + self.rtol * yi.abs();
            d0 = d0.max(yi.abs() / sc);
            d1 = d1.max(di.abs() / sc);
        }
        let h = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6
        } else {
            0.01 * d0 / d1
        };
        h.min(span.max(1e-12)).max(1e-12)
    }

    fn trial_step<F>(&self, f: &mut F, t: f64, h: f64, y: &[f64], w: &mut Work) -> f64
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        let n = y.len();
        let Work { k, tmp, y_new } = w;
        let [k1, k2, k3, k4, k5, k6, k7] = k;
        for i in 0..n {
            tmp[i] = y[i] + h * A21 * k1[i];
        }
        f(t + C2 * h, tmp, k2);
        for i in 0..n {
            tmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        f(t + C3 * h, tmp, k3);
        for i in 0..n {
            tmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        f(t + C4 * h, tmp, k4);
        for i in 0..n {
            tmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        f(t + C5 * h, tmp, k5);
        for i in 0..n {
            tmp[i] =
                y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        f(t + h, tmp, k6);
        for i in 0..n {
            y_new[i] =
                y[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        f(t + h, y_new, k7);
        let mut acc = 0.0;
        for i in 0..n {
            let e =
                h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = self.atol + self.rtol * y[i].abs().max(y_new[i].abs());
            acc += (e / sc) * (e / sc);
        }
        (acc / n as f64).sqrt()
    }
}
