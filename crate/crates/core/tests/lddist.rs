mod common;

use std::sync::OnceLock;

use fluctuate_core::lddist::{
    inversion_radius, ks_to_stable, limit_check, pmf_rmax, stable_cdf, stable_cdf_integral,
    stable_survival_integral, StableCdfTable,
};
use fluctuate_core::numeric::bisect;
use fluctuate_core::{
    ldd_pmf, stable_cf, CircleSample, CloneSizePgf, Complex64, LifetimeDistribution,
    OffspringDistribution, PgfMethod, ProliferationModel,
};
use proptest::prelude::*;

use common::*;

fn kendall2() -> CloneSizePgf {
    let model = ProliferationModel::new(
        OffspringDistribution::binary(),
        LifetimeDistribution::kendall(2, 1.0).unwrap(),
    )
    .unwrap();
    CloneSizePgf::new(&model, PgfMethod::Auto).unwrap()
}

fn lea_coulson() -> CloneSizePgf {
    CloneSizePgf::new(
        &ProliferationModel::lea_coulson(1.0).unwrap(),
        PgfMethod::Auto,
    )
    .unwrap()
}

#[test]
fn radius_independence() {
    let pgf = kendall2();
    let m = 4.0;
    let rmax = pmf_rmax(pgf.model().n1(), m);
    let c = inversion_radius(rmax);
    let base = CircleSample::with_radius(&pgf, rmax, None, c)
        .unwrap()
        .pmf(m, rmax)
        .unwrap();
    let squared = CircleSample::with_radius(&pgf, rmax, None, c * c)
        .unwrap()
        .pmf(m, rmax)
        .unwrap();
    let root = CircleSample::with_radius(&pgf, rmax, None, c.sqrt())
        .unwrap()
        .pmf(m, rmax)
        .unwrap();
    for r in 0..=rmax {
        assert!(
            (base.probs[r] - root.probs[r]).abs() < 1e-7,
            "sqrt c, r={r}"
        );
        if r <= rmax / 2 {
            assert!(
                (base.probs[r] - squared.probs[r]).abs() < 1e-7,
                "c^2, r={r}"
            );
        }
    }
}

#[test]
fn heavy_tail_band() {
    let pgf = lea_coulson();
    let m = 4.0;
    let rmax = pmf_rmax(1.0, m);
    let pmf = ldd_pmf(&pgf, m, rmax, None).unwrap();
    let scaled: Vec<f64> = (rmax / 4..=rmax / 2)
        .map(|r| pmf.probs[r] * (r * r) as f64)
        .collect();
    let lo = scaled.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = scaled.iter().copied().fold(0.0, f64::max);
    assert!(lo > 0.0 && hi < 2.0 * lo, "p_r r^2 in [{lo}, {hi}]");
    // For the Lea–Coulson law p_r r^2 tends to m.
    assert!((hi - m).abs() < 0.1 * m);
}

#[test]
fn vanishing_m_puts_all_mass_at_zero() {
    let pmf = ldd_pmf(&lea_coulson(), 1e-10, 200, None).unwrap();
    assert!((pmf.probs[0] - 1.0).abs() < 1e-9);
    assert!(pmf.probs[1..].iter().all(|&p| p < 1e-9));
}

#[test]
fn p0_from_direct_formula() {
    // No deaths: g(0) = 0 and p_0 = e^{-m}.
    let pmf = ldd_pmf(&kendall2(), 3.0, 400, None).unwrap();
    assert!((pmf.probs[0] - (-3.0f64).exp()).abs() < 1e-15);
    // With deaths, g(0) > 0.
    let model = ProliferationModel::new(
        OffspringDistribution::new(vec![0.2, 0.0, 0.8]).unwrap(),
        LifetimeDistribution::rahn(1.0, 2).unwrap(),
    )
    .unwrap();
    let pgf = CloneSizePgf::new(&model, PgfMethod::Auto).unwrap();
    let g0 = pgf.eval(Complex64::new(0.0, 0.0)).unwrap().re;
    assert!(g0 > 0.0);
    let pmf = ldd_pmf(&pgf, 3.0, 400, None).unwrap();
    assert!((pmf.probs[0] - (3.0 * (g0 - 1.0)).exp()).abs() < 1e-9);
}

#[test]
fn stable_cdf_shape() {
    let xs: Vec<f64> = (-100..=400).map(|i| i as f64 * 0.5).collect();
    let values: Vec<f64> = xs.iter().map(|&x| stable_cdf(x).unwrap()).collect();
    assert!(values.windows(2).all(|w| w[1] >= w[0] - 1e-12));
    assert!(stable_cdf(-150.0).unwrap() < 1e-3);
    // The right tail is 1/x, so F(150) sits near 1 - 1/150.
    assert!((1.0 - stable_cdf(150.0).unwrap() - 1.0 / 150.0).abs() < 1e-3);
    assert!((stable_survival_integral(1e3) * 1e3 - 1.0).abs() < 1e-2);
}

#[test]
fn stable_round_trip_recovers_characteristic_function() {
    // Differentiate the CDF on a fine grid and transform the density back.
    let table = StableCdfTable::shared().unwrap();
    let step = 1e-3;
    let n = ((table.x_max() + 12.0) / step) as usize;
    for theta in [0.5, 1.0] {
        let mut acc = Complex64::new(0.0, 0.0);
        let mut prev = table.cdf(-12.0);
        for k in 0..n {
            let right = -12.0 + (k + 1) as f64 * step;
            let next = table.cdf(right);
            let mid = right - step / 2.0;
            acc += Complex64::new(0.0, theta * mid).exp() * (next - prev);
            prev = next;
        }
        let err = (acc - stable_cf(theta)).norm();
        assert!(err < 1e-3, "theta={theta}: {err}");
    }
}

#[test]
fn stable_median_regression() {
    let median = bisect(|x| stable_cdf_integral(x) - 0.5, -2.0, 2.0, 1e-13);
    assert!((stable_cdf(median).unwrap() - 0.5).abs() < 1e-10);
    assert!((median - STABLE_MEDIAN).abs() < 1e-9, "{median}");
}

const STABLE_MEDIAN: f64 = 1.355_780_420_99;

#[test]
fn lea_coulson_limit_regression() {
    let report = limit_check(&lea_coulson(), &[4.0, 16.0]).unwrap();
    assert!(report.decreasing());
    assert!(report.delta.abs() < 1e-3);
    for (row, expected) in report.rows.iter().zip(LEA_COULSON_KS) {
        assert!((row.ks - expected).abs() < 1e-6, "m={}: {}", row.m, row.ks);
        assert!(row.ks_double_n1 > row.ks);
        assert!(row.captured_mass > 0.99);
        assert!(!row.large_r_warning);
    }
}

const LEA_COULSON_KS: [f64; 2] = [0.076_366_769_683, 0.021_112_379_179];

#[test]
fn ks_prefers_the_true_centering() {
    let pgf = lea_coulson();
    let pmf = ldd_pmf(&pgf, 16.0, 20_000, None).unwrap();
    let right = ks_to_stable(&pmf, 1.0, 0.0).unwrap();
    let shifted = ks_to_stable(&pmf, 1.0, 0.5).unwrap();
    assert!(right < shifted);
}

fn shared_circle() -> &'static CircleSample {
    static CIRCLE: OnceLock<CircleSample> = OnceLock::new();
    CIRCLE.get_or_init(|| CircleSample::new(&lea_coulson(), 2000, None).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pmf_invariants(m in 0.01f64..10.0) {
        let pmf = shared_circle().pmf(m, 2000).unwrap();
        prop_assert_eq!(pmf.below_floor, 0);
        prop_assert!(pmf.probs.iter().all(|&p| p >= 0.0));
        prop_assert!(pmf.captured_mass <= 1.0 + 1e-9);
        prop_assert!((pmf.probs[0] - (-m).exp()).abs() < 1e-9);
        let oracle = lea_coulson_recursion(m, 60);
        for (p, q) in pmf.probs.iter().zip(&oracle) {
            prop_assert!((p - q).abs() < 1e-8);
        }
    }

    #[test]
    fn characteristic_function_symmetry(theta in -50.0f64..50.0) {
        let psi = stable_cf(theta);
        prop_assert!((psi.norm() - (-std::f64::consts::FRAC_PI_2 * theta.abs()).exp()).abs() < 1e-15);
        prop_assert!((stable_cf(-theta) - psi.conj()).norm() < 1e-15);
    }
}
