//! Exact event-driven simulation of fluctuation experiments: a non-mutant
//! Bellman-Harris population whose daughters turn mutant with probability
//! `ρ`, after which they proliferate under the mutant laws.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimate::ExperimentData;
use crate::lifetime::LifetimeDistribution;
use crate::malthus::{check_neutrality, Neutrality};
use crate::offspring::OffspringDistribution;

/// Living-cell count at which a culture is abandoned.
pub const MAX_CELLS: u64 = 100_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct CellType {
    pub offspring: OffspringDistribution,
    pub lifetime: LifetimeDistribution,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopRule {
    /// Stop once the living cells of both types number at least this many.
    Population(u64),
    /// Stop at this time.
    Time(f64),
    /// Whichever comes first.
    Either { population: u64, time: f64 },
}

impl StopRule {
    fn population(&self) -> u64 {
        match *self {
            StopRule::Population(n) | StopRule::Either { population: n, .. } => n,
            StopRule::Time(_) => u64::MAX,
        }
    }

    fn time(&self) -> f64 {
        match *self {
            StopRule::Time(t) | StopRule::Either { time: t, .. } => t,
            StopRule::Population(_) => f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub nonmutant: CellType,
    pub mutant: CellType,
    /// Probability that a daughter of a non-mutant cell is a mutant.
    pub rho: f64,
    pub stop: StopRule,
    pub seed: u64,
    pub cultures: usize,
}

impl SimConfig {
    /// Mutant and non-mutant cells share `cell`.
    pub fn symmetric(cell: CellType, rho: f64, stop: StopRule, seed: u64, cultures: usize) -> Self {
        SimConfig {
            nonmutant: cell.clone(),
            mutant: cell,
            rho,
            stop,
            seed,
            cultures,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.rho) {
            return Err(Error::invalid(format!(
                "rho must lie in [0, 1], got {}",
                self.rho
            )));
        }
        let ok = match self.stop {
            StopRule::Population(n) => n >= 1,
            StopRule::Time(t) => t > 0.0,
            StopRule::Either { population, time } => population >= 1 && time > 0.0,
        };
        if !ok {
            return Err(Error::invalid("stop rule needs n_max >= 1 or t_max > 0"));
        }
        if self.cultures == 0 {
            return Err(Error::invalid("at least one culture is required"));
        }
        Ok(())
    }

    /// Neutrality report of the mutant laws against the non-mutant ones.
    pub fn neutrality(&self) -> Result<Neutrality> {
        check_neutrality(
            (&self.mutant.offspring, &self.mutant.lifetime),
            (&self.nonmutant.offspring, &self.nonmutant.lifetime),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CultureResult {
    pub total_cells: u64,
    pub mutant_cells: u64,
    /// Daughters born of either type.
    pub births_total: u64,
    /// Daughters born to non-mutant parents, i.e. mutation opportunities.
    pub mutation_trials: u64,
    pub stop_time: f64,
    pub extinct: bool,
}

#[derive(Clone, Copy)]
struct Event {
    time: f64,
    seq: u64,
    mutant: bool,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Event {}
impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Event {
    // Reversed so the max-heap pops the earliest division first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then(other.seq.cmp(&self.seq))
    }
}

/// Inverse-CDF sampler for an offspring law.
struct OffspringSampler {
    cumulative: Vec<f64>,
    fixed: Option<usize>,
}

impl OffspringSampler {
    fn new(dist: &OffspringDistribution) -> Self {
        let probs = dist.probs();
        let fixed = probs.iter().position(|&p| p == 1.0);
        let mut acc = 0.0;
        let cumulative = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        OffspringSampler { cumulative, fixed }
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        if let Some(k) = self.fixed {
            return k;
        }
        let u = rng.random::<f64>() * self.cumulative.last().copied().unwrap_or(1.0);
        self.cumulative
            .partition_point(|&c| c <= u)
            .min(self.cumulative.len() - 1)
    }
}

/// The random stream of culture `index` under `seed`.
pub fn culture_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Grows one culture from a single newborn non-mutant founder.
pub fn grow_culture<R: Rng + ?Sized>(config: &SimConfig, rng: &mut R) -> Result<CultureResult> {
    config.validate()?;
    let samplers = [
        OffspringSampler::new(&config.nonmutant.offspring),
        OffspringSampler::new(&config.mutant.offspring),
    ];
    let lifetimes = [&config.nonmutant.lifetime, &config.mutant.lifetime];
    let n_max = config.stop.population();
    let t_max = config.stop.time();
    let rho = config.rho;

    let mut heap = BinaryHeap::new();
    heap.push(Event {
        time: lifetimes[0].sample(rng),
        seq: 0,
        mutant: false,
    });
    let mut seq = 1u64;
    let mut living = 1u64;
    let mut mutants = 0u64;
    let mut births = 0u64;
    let mut trials = 0u64;
    let mut now = 0.0;
    let mut extinct = false;
    loop {
        if living >= n_max {
            break;
        }
        let Some(event) = heap.pop() else {
            extinct = true;
            break;
        };
        if event.time > t_max {
            now = t_max;
            heap.push(event);
            break;
        }
        now = event.time;
        living -= 1;
        mutants -= event.mutant as u64;
        let kind = event.mutant as usize;
        let children = samplers[kind].draw(rng);
        for _ in 0..children {
            births += 1;
            let child_mutant = if event.mutant {
                true
            } else {
                trials += 1;
                rho > 0.0 && rng.random::<f64>() < rho
            };
            let life = lifetimes[child_mutant as usize].sample(rng);
            heap.push(Event {
                time: now + life,
                seq,
                mutant: child_mutant,
            });
            seq += 1;
            living += 1;
            mutants += child_mutant as u64;
        }
        if living > MAX_CELLS {
            return Err(Error::numerical(format!(
                "culture exceeded the memory guard of {MAX_CELLS} cells"
            )));
        }
    }
    Ok(CultureResult {
        total_cells: living,
        mutant_cells: mutants,
        births_total: births,
        mutation_trials: trials,
        stop_time: now,
        extinct,
    })
}

/// Results of `C` independent cultures, in culture order.
#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub cultures: Vec<CultureResult>,
    pub rho: f64,
    pub neutrality: Neutrality,
}

impl Experiment {
    pub fn counts(&self) -> Vec<u64> {
        self.cultures.iter().map(|c| c.mutant_cells).collect()
    }

    /// `m̂ = ρ × mean number of daughters born to non-mutant parents`.
    pub fn matched_m(&self) -> f64 {
        self.rho * mean(self.cultures.iter().map(|c| c.mutation_trials as f64))
    }

    pub fn mean_births(&self) -> f64 {
        mean(self.cultures.iter().map(|c| c.births_total as f64))
    }

    pub fn mean_final_size(&self) -> f64 {
        mean(self.cultures.iter().map(|c| c.total_cells as f64))
    }

    pub fn zero_fraction(&self) -> f64 {
        mean(
            self.cultures
                .iter()
                .map(|c| (c.mutant_cells == 0) as u8 as f64),
        )
    }

    pub fn extinct_count(&self) -> usize {
        self.cultures.iter().filter(|c| c.extinct).count()
    }

    /// Counts of the non-extinct cultures with the mean final size attached.
    pub fn data(&self) -> Result<ExperimentData> {
        let alive: Vec<&CultureResult> = self.cultures.iter().filter(|c| !c.extinct).collect();
        let counts = alive.iter().map(|c| c.mutant_cells).collect();
        let n_final = mean(alive.iter().map(|c| c.total_cells as f64));
        let mut data = ExperimentData::new(counts)?;
        data.n_final = Some(n_final);
        Ok(data)
    }
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}

/// Runs `config.cultures` cultures on the current rayon pool. Culture `i`
/// always draws from stream `i`, so the output does not depend on the
/// number of worker threads.
pub fn run_experiment(config: &SimConfig) -> Result<Experiment> {
    config.validate()?;
    let neutrality = config.neutrality()?;
    let cultures = (0..config.cultures as u64)
        .into_par_iter()
        .map(|i| grow_culture(config, &mut culture_rng(config.seed, i)))
        .collect::<Result<Vec<_>>>()?;
    Ok(Experiment {
        cultures,
        rho: config.rho,
        neutrality,
    })
}

/// [`run_experiment`] on a dedicated pool of `threads` workers.
pub fn run_experiment_with_threads(config: &SimConfig, threads: usize) -> Result<Experiment> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::invalid(format!("cannot build a pool of {threads} threads: {e}")))?;
    pool.install(|| run_experiment(config))
}
