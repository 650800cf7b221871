use fluctuate_core::lddist::pmf_rmax;
use fluctuate_core::simulate::{culture_rng, run_experiment_with_threads};
use fluctuate_core::{
    grow_culture, ldd_pmf, CellType, CloneSizePgf, LifetimeDistribution, OffspringDistribution,
    PgfMethod, ProliferationModel, SimConfig, StopRule,
};

fn yule_cell() -> CellType {
    CellType {
        offspring: OffspringDistribution::binary(),
        lifetime: LifetimeDistribution::exponential(1.0).unwrap(),
    }
}

#[test]
fn single_culture_matches_its_stream() {
    let config = SimConfig::symmetric(yule_cell(), 1e-3, StopRule::Population(5000), 9, 1);
    let exp = run_experiment_with_threads(&config, 2).unwrap();
    let direct = grow_culture(&config, &mut culture_rng(9, 0)).unwrap();
    assert_eq!(exp.cultures, vec![direct]);
}

#[test]
fn thread_count_does_not_change_results() {
    let cell = CellType {
        offspring: OffspringDistribution::new(vec![0.1, 0.0, 0.9]).unwrap(),
        lifetime: LifetimeDistribution::kendall(3, 1.0).unwrap(),
    };
    let config = SimConfig::symmetric(cell, 2e-3, StopRule::Population(3000), 77, 200);
    let one = run_experiment_with_threads(&config, 1).unwrap();
    let eight = run_experiment_with_threads(&config, 8).unwrap();
    assert_eq!(one.counts(), eight.counts());
    for (a, b) in one.cultures.iter().zip(&eight.cultures) {
        assert_eq!(a.stop_time.to_bits(), b.stop_time.to_bits());
        assert_eq!(a.births_total, b.births_total);
    }
    assert!(one.extinct_count() > 0);
}

#[test]
fn growth_rate_matches_malthusian_parameter() {
    // Same seed and stream: the run to 10^5 cells extends the run to 10^3
    // cells, so the time between the two stops isolates exponential growth.
    for life in [
        LifetimeDistribution::exponential(1.0).unwrap(),
        LifetimeDistribution::kendall(2, 1.0).unwrap(),
    ] {
        let cell = CellType {
            offspring: OffspringDistribution::binary(),
            lifetime: life,
        };
        let beta = ProliferationModel::new(cell.offspring.clone(), cell.lifetime.clone())
            .unwrap()
            .beta();
        let run = |n| {
            let config = SimConfig::symmetric(cell.clone(), 0.0, StopRule::Population(n), 3, 10);
            run_experiment_with_threads(&config, 1).unwrap()
        };
        let (small, large) = (run(1000), run(100_000));
        let mut rates = Vec::new();
        for (a, b) in small.cultures.iter().zip(&large.cultures) {
            let growth = (b.total_cells as f64 / a.total_cells as f64).ln();
            rates.push(growth / (b.stop_time - a.stop_time));
            // The crude ln N / T estimate is biased low by the random start.
            assert!((b.total_cells as f64).ln() / b.stop_time < 1.1 * beta);
        }
        let rate = rates.iter().sum::<f64>() / rates.len() as f64;
        assert!((rate - beta).abs() < 0.05 * beta, "{rate} vs {beta}");
    }
}

#[test]
fn yule_counts_match_the_lea_coulson_law() {
    let config = SimConfig::symmetric(yule_cell(), 1e-4, StopRule::Population(100_000), 2024, 2000);
    let exp = run_experiment_with_threads(&config, 8).unwrap();
    let n = exp.cultures.len() as f64;

    // Zero cultures: Poisson thinning of the division events.
    let p0 = (-config.rho * exp.mean_births()).exp();
    let se = (p0 * (1.0 - p0) / n).sqrt();
    assert!((exp.zero_fraction() - p0).abs() <= 3.0 * se);

    // The untruncated mean is infinite in the limit law, so compare the
    // means of min(r, R) instead.
    let m = exp.matched_m();
    let pgf = CloneSizePgf::new(
        &ProliferationModel::lea_coulson(1.0).unwrap(),
        PgfMethod::Auto,
    )
    .unwrap();
    let rmax = pmf_rmax(1.0, m);
    let pmf = ldd_pmf(&pgf, m, rmax, None).unwrap();
    let cap = rmax as f64;
    let analytic: f64 = pmf
        .probs
        .iter()
        .enumerate()
        .map(|(r, p)| r as f64 * p)
        .sum::<f64>()
        + cap * (1.0 - pmf.captured_mass);
    let capped: Vec<f64> = exp.counts().iter().map(|&r| (r as f64).min(cap)).collect();
    let mean = capped.iter().sum::<f64>() / n;
    let var = capped.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let se = (var / n).sqrt();
    assert!(
        (mean - analytic).abs() <= 3.0 * se,
        "{mean} vs {analytic} (se {se})"
    );
}

#[test]
fn culture_order_is_irrelevant_to_the_count_distribution() {
    let config = SimConfig::symmetric(yule_cell(), 5e-3, StopRule::Population(2000), 5, 300);
    let exp = run_experiment_with_threads(&config, 1).unwrap();
    let mut counts = exp.counts();
    let mut reversed: Vec<u64> = counts.iter().rev().copied().collect();
    counts.sort_unstable();
    reversed.sort_unstable();
    assert_eq!(counts, reversed);
    let data = exp.data().unwrap();
    let mut shuffled = data.clone();
    shuffled.counts.reverse();
    let pgf = CloneSizePgf::new(
        &ProliferationModel::lea_coulson(1.0).unwrap(),
        PgfMethod::Auto,
    )
    .unwrap();
    let a = fluctuate_core::mle_fit(&data, &pgf).unwrap();
    let b = fluctuate_core::mle_fit(&shuffled, &pgf).unwrap();
    assert_eq!(a.a_hat, b.a_hat);
    assert_eq!(a.ci_a, b.ci_a);
}
