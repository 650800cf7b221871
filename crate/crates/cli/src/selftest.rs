//! Oracle checks that need nothing but the library.

use std::fmt::Write as _;

use fluctuate_core::lddist::pmf_rmax;
use fluctuate_core::{
    harmonic_identity_check, ldd_pmf, solve_renewal, CloneSizePgf, Complex64, PgfMethod,
    ProliferationModel, Result,
};

struct Check {
    name: &'static str,
    error: f64,
    tol: f64,
}

/// Largest deviation of the renewal solution from the Yule closed form
/// `s e^{-t} / (1 - s (1 - e^{-t}))`.
fn yule() -> Result<f64> {
    let model = ProliferationModel::lea_coulson(1.0)?;
    let points: Vec<Complex64> = [0.1, 0.5, 0.9, -0.5]
        .iter()
        .map(|&s| Complex64::new(s, 0.0))
        .chain([Complex64::new(0.3, 0.6)])
        .collect();
    let grid = solve_renewal(&model, &points, 1e-3, 5.0)?;
    let mut worst = 0.0f64;
    for row in (0..grid.rows()).step_by(250) {
        let e = (-grid.time(row)).exp();
        for (j, &s) in points.iter().enumerate() {
            let exact = s * e / (1.0 - s * (1.0 - e));
            worst = worst.max((grid.value(row, j) - exact).norm());
        }
    }
    Ok(worst)
}

/// PMF by inversion against `r p_r = m Σ_{j<r} p_j / (r - j + 1)`.
fn lea_coulson() -> Result<f64> {
    let pgf = CloneSizePgf::new(&ProliferationModel::lea_coulson(1.0)?, PgfMethod::Auto)?;
    let mut worst = 0.0f64;
    for m in [0.5, 2.0] {
        let pmf = ldd_pmf(&pgf, m, pmf_rmax(1.0, m), None)?;
        let mut p = vec![(-m).exp()];
        for r in 1..=60 {
            let sum: f64 = (0..r).map(|j| p[j] / (r - j + 1) as f64).sum();
            p.push(m / r as f64 * sum);
        }
        for (a, b) in pmf.probs.iter().zip(&p) {
            worst = worst.max((a - b).abs());
        }
    }
    Ok(worst)
}

fn harmonic() -> Result<f64> {
    let mut worst = 0.0f64;
    for (mu, n) in [(2, 10), (2, 1000), (3, 100_000)] {
        worst = worst.max(harmonic_identity_check(mu, n)?);
    }
    Ok(worst)
}

/// Runs every check; the report has one line per check.
pub fn run() -> Result<(String, bool)> {
    let checks = [
        Check {
            name: "yule closed form",
            error: yule()?,
            tol: 1e-6,
        },
        Check {
            name: "lea-coulson recursion",
            error: lea_coulson()?,
            tol: 1e-8,
        },
        Check {
            name: "harmonic identity",
            error: harmonic()?,
            tol: 1e-8,
        },
    ];
    let mut report = String::new();
    let mut ok = true;
    for c in &checks {
        let pass = c.error < c.tol;
        ok &= pass;
        let _ = writeln!(
            report,
            "{} {}: max error {:.3e} (tol {:e})",
            if pass { "PASS" } else { "FAIL" },
            c.name,
            c.error,
            c.tol
        );
    }
    Ok((report, ok))
}
