//! Point evaluation of the clone-size PGF `g(s) = β ∫ e^{-βu} F_u(s) du`.

use num_complex::Complex64;
use rayon::prelude::*;

use super::phase::PhaseTypeSolver;
use super::renewal::{compute_g, default_discretization, solve_renewal};
use crate::error::{Error, Result};
use crate::malthus::ProliferationModel;

/// How `g` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum PgfMethod {
    /// Phase-type ODE when the life-time has stages, renewal otherwise.
    #[default]
    Auto,
    /// Volterra renewal solver; `None` selects the default step or horizon.
    Renewal {
        step: Option<f64>,
        horizon: Option<f64>,
    },
    /// Backward Kolmogorov ODE; only for exponential, Kendall and Rahn
    /// life-times.
    PhaseType,
}

#[derive(Debug, Clone)]
enum Backend {
    Renewal { step: f64, horizon: f64 },
    PhaseType(PhaseTypeSolver),
}

/// `g` and `γ(s) = (1 - g(s)) / (1 - s)` for a fixed proliferation model.
#[derive(Debug, Clone)]
pub struct CloneSizePgf {
    model: ProliferationModel,
    backend: Backend,
}

impl CloneSizePgf {
    pub fn new(model: &ProliferationModel, method: PgfMethod) -> Result<Self> {
        let stages = model.lifetime().stage_rates();
        let renewal = |step: Option<f64>, horizon: Option<f64>| {
            let (h, u) = default_discretization(model);
            Backend::Renewal {
                step: step.unwrap_or(h),
                horizon: horizon.unwrap_or(u),
            }
        };
        let backend = match (method, stages) {
            (PgfMethod::Auto, Some(rates)) | (PgfMethod::PhaseType, Some(rates)) => {
                Backend::PhaseType(PhaseTypeSolver::new(rates, model.beta()))
            }
            (PgfMethod::PhaseType, None) => {
                return Err(Error::invalid(
                    "phase-type evaluation needs an exponential, Kendall or Rahn life-time",
                ))
            }
            (PgfMethod::Auto, None) => renewal(None, None),
            (PgfMethod::Renewal { step, horizon }, _) => renewal(step, horizon),
        };
        Ok(CloneSizePgf {
            model: model.clone(),
            backend,
        })
    }

    pub fn model(&self) -> &ProliferationModel {
        &self.model
    }

    pub fn method_name(&self) -> &'static str {
        match self.backend {
            Backend::Renewal { .. } => "renewal",
            Backend::PhaseType(_) => "phase-type",
        }
    }

    /// `γ(s)` and the relative size of the beyond-horizon correction.
    pub fn gamma_detailed(&self, s: Complex64) -> Result<(Complex64, f64)> {
        if !(s.norm() <= 1.0 + 1e-12) {
            return Err(Error::invalid(format!("|s| = {} exceeds 1", s.norm())));
        }
        if s == Complex64::new(1.0, 0.0) {
            return Ok((Complex64::new(f64::INFINITY, 0.0), 0.0));
        }
        match &self.backend {
            Backend::PhaseType(solver) => solver.gamma(self.model.offspring(), s),
            Backend::Renewal { step, horizon } => {
                let grid = solve_renewal(&self.model, &[s], *step, *horizon)?;
                let est = compute_g(&self.model, &grid, s)?;
                Ok((est.gamma, est.tail_fraction))
            }
        }
    }

    pub fn gamma(&self, s: Complex64) -> Result<Complex64> {
        self.gamma_detailed(s).map(|(g, _)| g)
    }

    pub fn gamma_real(&self, s: f64) -> Result<f64> {
        self.gamma(Complex64::new(s, 0.0)).map(|g| g.re)
    }

    pub fn eval(&self, s: Complex64) -> Result<Complex64> {
        if s == Complex64::new(1.0, 0.0) {
            return Ok(s);
        }
        let gamma = self.gamma(s)?;
        Ok(Complex64::new(1.0, 0.0) - (Complex64::new(1.0, 0.0) - s) * gamma)
    }

    /// `g` at many points, in parallel.
    pub fn eval_many(&self, points: &[Complex64]) -> Result<Vec<Complex64>> {
        points.par_iter().map(|&s| self.eval(s)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lifetime::LifetimeDistribution;
    use crate::offspring::OffspringDistribution;

    fn lea_coulson_g(s: f64) -> f64 {
        1.0 + (1.0 - s) / s * (-s).ln_1p()
    }

    #[test]
    fn both_routes_match_lea_coulson() {
        let model = ProliferationModel::lea_coulson(1.0).unwrap();
        let ode = CloneSizePgf::new(&model, PgfMethod::Auto).unwrap();
        let ren = CloneSizePgf::new(
            &model,
            PgfMethod::Renewal {
                step: Some(1e-3),
                horizon: None,
            },
        )
        .unwrap();
        assert_eq!(ode.method_name(), "phase-type");
        for s in [0.1, 0.5, 0.9] {
            let exact = lea_coulson_g(s);
            assert!((ode.eval(Complex64::new(s, 0.0)).unwrap().re - exact).abs() < 1e-9);
            assert!((ren.eval(Complex64::new(s, 0.0)).unwrap().re - exact).abs() < 1e-6);
        }
    }

    #[test]
    fn routes_agree_for_kendall_and_rahn() {
        let off = OffspringDistribution::new(vec![0.1, 0.2, 0.7]).unwrap();
        for life in [
            LifetimeDistribution::kendall(3, 1.0).unwrap(),
            LifetimeDistribution::rahn(1.0, 2).unwrap(),
        ] {
            let model = ProliferationModel::new(off.clone(), life).unwrap();
            let ode = CloneSizePgf::new(&model, PgfMethod::PhaseType).unwrap();
            let ren = CloneSizePgf::new(
                &model,
                PgfMethod::Renewal {
                    step: Some(2e-3),
                    horizon: None,
                },
            )
            .unwrap();
            for s in [
                Complex64::new(0.2, 0.0),
                Complex64::new(0.7, 0.2),
                Complex64::new(-0.5, -0.5),
            ] {
                let a = ode.eval(s).unwrap();
                let b = ren.eval(s).unwrap();
                assert!((a - b).norm() < 2e-6, "{s}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn zero_when_no_cell_dies_out() {
        let model = ProliferationModel::new(
            OffspringDistribution::new(vec![0.0, 0.3, 0.7]).unwrap(),
            LifetimeDistribution::kendall(2, 1.0).unwrap(),
        )
        .unwrap();
        let pgf = CloneSizePgf::new(&model, PgfMethod::Auto).unwrap();
        assert!(pgf.eval(Complex64::new(0.0, 0.0)).unwrap().norm() < 1e-12);
    }

    #[test]
    fn phase_type_needs_stages() {
        let model = ProliferationModel::new(
            OffspringDistribution::binary(),
            LifetimeDistribution::tabulated(vec![0.0, 1.0, 2.0], vec![0.0, 0.5, 1.0]).unwrap(),
        )
        .unwrap();
        assert!(CloneSizePgf::new(&model, PgfMethod::PhaseType).is_err());
        assert_eq!(
            CloneSizePgf::new(&model, PgfMethod::Auto)
                .unwrap()
                .method_name(),
            "renewal"
        );
    }
}
