mod common;

use fluctuate_core::bhpgf::{compute_g, default_probe_points, markov_gamma_ode, solve_renewal};
use fluctuate_core::{
    delta_probe, CloneSizePgf, Complex64, LifetimeDistribution, OffspringDistribution, PgfMethod,
    ProliferationModel,
};

use common::*;

fn model(probs: Vec<f64>, life: LifetimeDistribution) -> ProliferationModel {
    ProliferationModel::new(OffspringDistribution::new(probs).unwrap(), life).unwrap()
}

fn renewal(model: &ProliferationModel, step: f64) -> CloneSizePgf {
    CloneSizePgf::new(
        model,
        PgfMethod::Renewal {
            step: Some(step),
            horizon: None,
        },
    )
    .unwrap()
}

#[test]
fn grid_invariants() {
    let m = model(
        vec![0.25, 0.0, 0.75],
        LifetimeDistribution::kendall(2, 1.0).unwrap(),
    );
    let points = [
        Complex64::new(0.5, 0.0),
        Complex64::new(1.0, 0.0),
        Complex64::new(-0.3, 0.7),
        Complex64::new(0.0, -1.0),
    ];
    let grid = solve_renewal(&m, &points, 0.01, 40.0 / m.beta()).unwrap();
    for (j, &s) in points.iter().enumerate() {
        assert!((grid.value(0, j) - s).norm() < 1e-15);
        for row in 0..grid.rows() {
            assert!(grid.value(row, j).norm() <= 1.0 + 1e-12);
        }
    }
    assert!(grid
        .column(1)
        .iter()
        .all(|&f| f == Complex64::new(1.0, 0.0)));
    let real = grid.column(0);
    assert!(real.windows(2).all(|w| w[1].re <= w[0].re + 1e-15));
    let q = m.extinction_prob();
    assert!((q - 1.0 / 3.0).abs() < 1e-12);
    assert!((real.last().unwrap().re - q).abs() < 1e-4);
}

#[test]
fn g_at_zero_without_deaths() {
    let m = model(
        vec![0.0, 0.3, 0.7],
        LifetimeDistribution::rahn(1.0, 3).unwrap(),
    );
    let zero = Complex64::new(0.0, 0.0);
    let grid = solve_renewal(&m, &[zero], 0.01, 30.0 / m.beta()).unwrap();
    assert!(compute_g(&m, &grid, zero).unwrap().g.norm() < 1e-12);
}

#[test]
fn renewal_refinement_is_second_order() {
    let m = model(
        vec![0.1, 0.0, 0.9],
        LifetimeDistribution::kendall(3, 1.0).unwrap(),
    );
    let h = 1e-2 / m.beta();
    let s = Complex64::new(0.6, 0.3);
    let g: Vec<Complex64> = [h, h / 2.0, h / 4.0]
        .iter()
        .map(|&step| renewal(&m, step).eval(s).unwrap())
        .collect();
    let d1 = (g[0] - g[1]).norm();
    let d2 = (g[1] - g[2]).norm();
    assert!(d1 < 4e-5, "halving changed g by {d1}");
    assert!((3.0..5.0).contains(&(d1 / d2)), "ratio {}", d1 / d2);
    let exact = CloneSizePgf::new(&m, PgfMethod::PhaseType)
        .unwrap()
        .eval(s)
        .unwrap();
    assert!((g[2] - exact).norm() < 1e-6);
}

#[test]
fn g_is_a_proper_pgf_on_the_unit_interval() {
    let m = model(
        vec![0.2, 0.1, 0.7],
        LifetimeDistribution::rahn(2.0, 2).unwrap(),
    );
    let pgf = CloneSizePgf::new(&m, PgfMethod::Auto).unwrap();
    let values: Vec<f64> = (0..=40)
        .map(|i| pgf.eval(Complex64::new(i as f64 / 40.0, 0.0)).unwrap().re)
        .collect();
    assert!(values.windows(2).all(|w| w[1] >= w[0]));
    assert_eq!(*values.last().unwrap(), 1.0);
    assert!(values[0] >= 0.0);
}

#[test]
fn gamma_diverges_at_one() {
    for life in [
        LifetimeDistribution::exponential(1.0).unwrap(),
        LifetimeDistribution::kendall(2, 1.0).unwrap(),
    ] {
        let pgf = CloneSizePgf::new(&model(vec![0.0, 0.0, 1.0], life), PgfMethod::Auto).unwrap();
        let near = pgf.gamma_real(1.0 - 2f64.powi(-20)).unwrap();
        let far = pgf.gamma_real(1.0 - 2f64.powi(-10)).unwrap();
        assert!(near > far + 5.0, "{near} vs {far}");
    }
}

#[test]
fn kendall_delta_is_cauchy() {
    let m = model(
        vec![0.0, 0.0, 1.0],
        LifetimeDistribution::kendall(2, 1.0).unwrap(),
    );
    let pgf = CloneSizePgf::new(&m, PgfMethod::Auto).unwrap();
    let probe = delta_probe(&pgf, &default_probe_points()).unwrap();
    assert!(probe.cauchy, "{:?}", probe.delta);
    assert!(probe.exhausted_at.is_none());
    let inc = probe.increments();
    assert!(inc.windows(2).all(|w| w[1] < w[0]));
    assert!(probe.last_increment() < 1e-4);
    // Regression constant from this implementation.
    assert!(
        (probe.limit - KENDALL2_DELTA).abs() < 1e-4,
        "{}",
        probe.limit
    );
    // The renewal route lands on the same limit.
    let slow = delta_probe(&renewal(&m, 2e-3), &default_probe_points()).unwrap();
    assert!((slow.limit - probe.limit).abs() < 1e-4);
}

const KENDALL2_DELTA: f64 = 0.325_835_414;

#[test]
fn lattice_lifetime_negative_control() {
    // Two-point lattice: half the cells divide at t = 1, half at t = 2.
    let life = LifetimeDistribution::tabulated(
        vec![0.0, 0.999, 1.0, 1.999, 2.0],
        vec![0.0, 0.0, 0.5, 0.5, 1.0],
    )
    .unwrap();
    assert!(life.is_lattice());
    let m = model(vec![0.0, 0.0, 1.0], life);
    let pgf = CloneSizePgf::new(&m, PgfMethod::Auto).unwrap();
    let points: Vec<f64> = (3..=14).map(|j| 1.0 - 2f64.powi(-j)).collect();
    let probe = delta_probe(&pgf, &points).unwrap();
    println!("lattice delta sequence: {:?}", probe.delta);
    println!("lattice increments: {:?}", probe.increments());
    assert!(probe.delta.iter().all(|d| d.is_finite()));
}

#[test]
fn markov_ode_matches_renewal_route() {
    let m = model(
        vec![0.1, 0.0, 0.9],
        LifetimeDistribution::exponential(1.0).unwrap(),
    );
    let mesh: Vec<f64> = (0..=10).map(|i| 0.5 + 0.049 * i as f64).collect();
    let ode = markov_gamma_ode(&m, 0.5, &mesh).unwrap();
    let direct = renewal(&m, 5e-4);
    for (&s, &g) in mesh.iter().zip(&ode) {
        let reference = direct.gamma_real(s).unwrap();
        assert!((g - reference).abs() < 1e-5, "s={s}: {g} vs {reference}");
    }
}

#[test]
fn lea_coulson_gamma_on_the_ode_mesh() {
    let m = ProliferationModel::lea_coulson(1.0).unwrap();
    let mesh: Vec<f64> = (0..=20).map(|i| 0.5 + 0.02495 * i as f64).collect();
    let ode = markov_gamma_ode(&m, 0.5, &mesh).unwrap();
    for (&s, &g) in mesh.iter().zip(&ode) {
        let exact = (1.0 - lea_coulson_g(s)) / (1.0 - s);
        assert!((g - exact).abs() < 1e-6, "s={s}");
    }
}
