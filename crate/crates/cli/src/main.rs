//! `fluctuate`: fluctuation analysis under Bellman-Harris proliferation models.

mod selftest;

use std::fmt::Write as _;
use std::io::{ErrorKind, Write as _};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fluctuate_core::bhpgf::default_probe_points;
use fluctuate_core::lddist::pmf_rmax;
use fluctuate_core::malthus::malthusian_rate;
use fluctuate_core::{
    bootstrap_ci, compute_n1, delta_probe, ldd_pmf, limit_check, mle_fit, n1_lower_bound,
    p0_estimate, run_experiment, CellType, CloneSizePgf, Complex64, Error, ExperimentData,
    GwSeries, LifetimeDistribution, MleOptions, ModelConfig, OffspringDistribution, PgfMethod,
    ProliferationModel, SimConfig, StopRule,
};
use serde_json::{json, Value};

#[derive(Parser, Debug)]
#[command(
    name = "fluctuate",
    version,
    about = "Luria-Delbrück fluctuation analysis for Bellman-Harris models"
)]
struct Cli {
    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Write results here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Malthusian parameter and n1 of a model.
    Beta(ModelArgs),
    /// n1 with its model-free lower bound.
    N1(ModelArgs),
    /// Clone-size PGF g(s), gamma(s) and the delta(s) probe.
    Pgf {
        #[command(flatten)]
        model: ModelArgs,
        /// Comma-separated real points in [0, 1].
        #[arg(long, value_delimiter = ',', default_values_t = [0.1, 0.5, 0.9])]
        s: Vec<f64>,
    },
    /// Mutant-count PMF as CSV `r,p_r`.
    Pmf {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        m: f64,
        /// Largest count (default grows with n1 m).
        #[arg(long)]
        rmax: Option<usize>,
    },
    /// Galton-Watson centering sequence as CSV `s,delta`.
    GwDemo {
        /// `s^K` for an integer K >= 2, or `fraclin(MU)`.
        #[arg(long, default_value = "s^2")]
        f: String,
        /// Probe s = 1 - 2^-j for j = 1..=N.
        #[arg(long, default_value_t = 24)]
        n: u32,
    },
    /// KS distance to the stable limit as CSV `m,KS`.
    LimitCheck {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_delimiter = ',', default_values_t = [4.0, 16.0, 64.0, 256.0])]
        m: Vec<f64>,
    },
    /// Simulated cultures as CSV.
    Simulate {
        /// Simulation config file; other flags are ignored when given.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 1e-4)]
        rho: f64,
        /// Stop each culture at this population.
        #[arg(long, default_value_t = 100_000)]
        n_max: u64,
        /// Stop each culture at this time.
        #[arg(long)]
        t_max: Option<f64>,
        #[arg(long, default_value_t = 100)]
        cultures: usize,
    },
    /// Maximum-likelihood fit of A = n1 m to observed counts, as JSON.
    Estimate {
        #[arg(long)]
        counts: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
        /// Counts above this are lumped into the tail.
        #[arg(long)]
        jackpot: Option<u64>,
        /// Mean final population size, for a rate estimate.
        #[arg(long)]
        nfinal: Option<f64>,
        /// Also report a percentile bootstrap interval with this many replicates.
        #[arg(long)]
        bootstrap: Option<usize>,
    },
    /// Built-in oracle checks.
    Selftest,
}

/// A model from a config file or from inline laws.
#[derive(Args, Debug, Clone)]
struct ModelArgs {
    /// Model config file (`key = value` lines).
    #[arg(long, conflicts_with_all = ["offspring", "mu", "lifetime"])]
    model: Option<PathBuf>,
    /// Offspring law, e.g. `[0, 0.2, 0.8]`, `binary` or `fraclin(2)`.
    #[arg(long, conflicts_with = "mu")]
    offspring: Option<String>,
    /// Mean offspring number; only `beta` and `n1` accept it.
    #[arg(long)]
    mu: Option<f64>,
    /// Life-time law, e.g. `exponential(1)`, `kendall(2, 1)`, `rahn(1, 3)`.
    #[arg(long, default_value = "exponential(1)")]
    lifetime: String,
    /// Use the phase-type ODE backend instead of choosing automatically.
    #[arg(long)]
    phase_type: bool,
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: 1,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidParameter(_) | Error::Parse(_) => 1,
            Error::Numerical(_) => 2,
            Error::Data(_) | Error::Io { .. } => 3,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

/// Parse errors inside a file are data errors, not usage errors.
fn from_file(path: &Path) -> impl FnOnce(Error) -> Failure + '_ {
    move |e| match e {
        Error::Parse(msg) => Failure {
            code: 3,
            message: format!("{}: {msg}", path.display()),
        },
        other => other.into(),
    }
}

type Outcome<T = ()> = std::result::Result<T, Failure>;

impl ModelArgs {
    fn config(&self) -> Outcome<ModelConfig> {
        if let Some(path) = &self.model {
            return ModelConfig::load(path).map_err(from_file(path));
        }
        if self.mu.is_some() {
            return Err(Failure::usage("--mu is only accepted by beta and n1"));
        }
        let offspring: OffspringDistribution =
            self.offspring.as_deref().unwrap_or("binary").parse()?;
        let lifetime: LifetimeDistribution = self.lifetime.parse()?;
        Ok(ModelConfig::symmetric(offspring, lifetime))
    }

    fn model(&self) -> Outcome<(ProliferationModel, ModelConfig)> {
        let config = self.config()?;
        let (model, neutrality) = config.build()?;
        eprintln!(
            "neutrality residual {:e}{}",
            neutrality.residual,
            if neutrality.is_neutral() {
                ""
            } else {
                " (mutant and non-mutant growth differ)"
            }
        );
        Ok((model, config))
    }

    fn pgf(&self) -> Outcome<CloneSizePgf> {
        let (model, config) = self.model()?;
        let method = if self.phase_type {
            PgfMethod::PhaseType
        } else if config.numerics.step.is_some() || config.numerics.horizon.is_some() {
            PgfMethod::Renewal {
                step: config.numerics.step,
                horizon: config.numerics.horizon,
            }
        } else {
            PgfMethod::Auto
        };
        Ok(CloneSizePgf::new(&model, method)?)
    }

    /// `(μ, lifetime)` for commands that only need the Malthusian equation.
    fn mean_and_lifetime(&self) -> Outcome<(f64, LifetimeDistribution)> {
        if let Some(mu) = self.mu {
            if self.model.is_some() || self.offspring.is_some() {
                return Err(Failure::usage(
                    "--mu conflicts with --model and --offspring",
                ));
            }
            return Ok((mu, self.lifetime.parse()?));
        }
        let config = self.config()?;
        Ok((config.mutant_offspring.mean(), config.mutant_lifetime))
    }
}

fn emit(out: &Option<PathBuf>, text: &str) -> Outcome {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|source| {
            Error::Io {
                path: path.clone(),
                source,
            }
            .into()
        }),
        None => match std::io::stdout().lock().write_all(text.as_bytes()) {
            Err(e) if e.kind() != ErrorKind::BrokenPipe => Err(Error::Io {
                path: PathBuf::from("<stdout>"),
                source: e,
            }
            .into()),
            _ => Ok(()),
        },
    }
}

fn emit_json(out: &Option<PathBuf>, value: &Value) -> Outcome {
    let mut text = serde_json::to_string_pretty(value).expect("JSON values serialize");
    text.push('\n');
    emit(out, &text)
}

fn finite(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

fn beta_and_n1(model: &ModelArgs) -> Outcome<(f64, f64, f64)> {
    let (mu, lifetime) = model.mean_and_lifetime()?;
    let beta = malthusian_rate(mu, &lifetime)?;
    Ok((mu, beta, compute_n1(mu, &lifetime, beta)))
}

fn gw_series(f: &str) -> Outcome<GwSeries> {
    let f = f.trim();
    if let Some(k) = f.strip_prefix("s^") {
        let k: u32 = k
            .parse()
            .map_err(|_| Failure::usage(format!("bad exponent in --f {f:?}")))?;
        return Ok(GwSeries::power(k)?);
    }
    let offspring: OffspringDistribution = f.parse()?;
    Ok(GwSeries::new(offspring))
}

fn run(cli: Cli) -> Outcome {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(Failure::usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Failure::usage(format!("cannot start {threads} threads: {e}")))?;
    }
    let out = &cli.out;
    match &cli.command {
        Command::Beta(model) => {
            let (_, beta, n1) = beta_and_n1(model)?;
            emit_json(out, &json!({ "beta": beta, "n1": n1 }))
        }
        Command::N1(model) => {
            let (mu, beta, n1) = beta_and_n1(model)?;
            emit_json(
                out,
                &json!({ "n1": n1, "n1_lower_bound": n1_lower_bound(mu), "beta": beta }),
            )
        }
        Command::Pgf { model, s } => {
            let pgf = model.pgf()?;
            let mut points = Vec::with_capacity(s.len());
            for &x in s {
                if !(0.0..=1.0).contains(&x) {
                    return Err(Failure::usage(format!(
                        "--s values must lie in [0, 1], got {x}"
                    )));
                }
                let g = pgf.eval(Complex64::new(x, 0.0))?.re;
                let gamma = if x < 1.0 {
                    finite(pgf.gamma_real(x)?)
                } else {
                    Value::Null
                };
                points.push(json!({ "s": x, "g": g, "gamma": gamma }));
            }
            let probe = delta_probe(&pgf, &default_probe_points())?;
            emit_json(
                out,
                &json!({
                    "method": pgf.method_name(),
                    "beta": pgf.model().beta(),
                    "n1": pgf.model().n1(),
                    "points": points,
                    "delta": {
                        "s": probe.s,
                        "delta": probe.delta,
                        "limit": probe.limit,
                        "last_increment": finite(probe.last_increment()),
                        "cauchy": probe.cauchy,
                    },
                }),
            )
        }
        Command::Pmf { model, m, rmax } => {
            let pgf = model.pgf()?;
            let numerics = model.config()?.numerics;
            let rmax = rmax
                .or(numerics.rmax)
                .unwrap_or_else(|| pmf_rmax(pgf.model().n1(), *m));
            let pmf = ldd_pmf(&pgf, *m, rmax, numerics.points)?;
            if pmf.aliasing_warning {
                eprintln!(
                    "warning: p_R = {:e} exceeds 1e-6 of the largest p_r; raise --rmax if the tail matters",
                    pmf.probs[rmax]
                );
            }
            eprintln!("captured mass {}", pmf.captured_mass);
            let mut text = String::from("r,p_r\n");
            for (r, p) in pmf.probs.iter().enumerate() {
                let _ = writeln!(text, "{r},{p:e}");
            }
            emit(out, &text)
        }
        Command::GwDemo { f, n } => {
            let series = gw_series(f)?;
            let mut text = String::from("s,delta\n");
            for j in 1..=*n as i32 {
                let s = 1.0 - 2f64.powi(-j);
                let _ = writeln!(text, "{s},{}", series.delta_gw(s)?);
            }
            emit(out, &text)
        }
        Command::LimitCheck { model, m } => {
            let pgf = model.pgf()?;
            let report = limit_check(&pgf, m)?;
            eprintln!(
                "n1 {} delta {} (last increment {:e})",
                report.n1,
                report.delta,
                report.probe.last_increment()
            );
            let mut text = String::from("m,KS\n");
            for row in &report.rows {
                if row.large_r_warning {
                    eprintln!("warning: m = {} needs R = {}", row.m, row.rmax);
                }
                let _ = writeln!(text, "{},{}", row.m, row.ks);
            }
            if !report.decreasing() {
                eprintln!("warning: KS distance does not decrease in m");
            }
            emit(out, &text)
        }
        Command::Simulate {
            config,
            model,
            rho,
            n_max,
            t_max,
            cultures,
        } => {
            let sim = match config {
                Some(path) => SimConfig::load(path).map_err(from_file(path))?,
                None => {
                    let mc = model.config()?;
                    let stop = match t_max {
                        Some(t) => StopRule::Either {
                            population: *n_max,
                            time: *t,
                        },
                        None => StopRule::Population(*n_max),
                    };
                    let mut sim = SimConfig::symmetric(
                        CellType {
                            offspring: mc.nonmutant_offspring,
                            lifetime: mc.nonmutant_lifetime,
                        },
                        *rho,
                        stop,
                        cli.seed,
                        *cultures,
                    );
                    sim.mutant = CellType {
                        offspring: mc.mutant_offspring,
                        lifetime: mc.mutant_lifetime,
                    };
                    sim
                }
            };
            let exp = run_experiment(&sim)?;
            eprintln!(
                "neutrality residual {:e}; matched m {}; {} extinct",
                exp.neutrality.residual,
                exp.matched_m(),
                exp.extinct_count()
            );
            let mut text =
                String::from("culture_id,mutants,total_cells,births,stop_time,extinct\n");
            for (i, c) in exp.cultures.iter().enumerate() {
                let _ = writeln!(
                    text,
                    "{i},{},{},{},{},{}",
                    c.mutant_cells, c.total_cells, c.births_total, c.stop_time, c.extinct
                );
            }
            emit(out, &text)
        }
        Command::Estimate {
            counts,
            model,
            jackpot,
            nfinal,
            bootstrap,
        } => {
            let mut data = ExperimentData::from_csv(counts)?;
            data.jackpot_cutoff = *jackpot;
            data.n_final = *nfinal;
            let pgf = model.pgf()?;
            let fit = mle_fit(&data, &pgf)?;
            let mut value = serde_json::to_value(&fit).expect("FitResult serializes");
            if let Some(n) = nfinal {
                if data.zeros() > 0 {
                    let p0 = p0_estimate(&data, *n)?;
                    value["p0_estimate"] = serde_json::to_value(p0).expect("serializes");
                }
            }
            if let Some(reps) = bootstrap {
                let boot = bootstrap_ci(&data, &pgf, &MleOptions::default(), *reps, cli.seed)?;
                value["bootstrap"] = serde_json::to_value(boot).expect("serializes");
            }
            emit_json(out, &value)
        }
        Command::Selftest => {
            let (report, ok) = selftest::run()?;
            emit(out, &report)?;
            if ok {
                Ok(())
            } else {
                Err(Failure {
                    code: 2,
                    message: "selftest failed".into(),
                })
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("fluctuate: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
