//! Flat `key = value` configuration files for proliferation models and
//! simulations.
//!
//! Values use the constructor spellings accepted by the offspring and
//! life-time parsers, e.g.
//!
//! ```text
//! offspring = [0, 0, 1]
//! lifetime = kendall(2, 1)
//! mutant_lifetime = rahn(1, 3)
//! ```

use std::fmt::{self, Write as _};
use std::path::Path;

use crate::error::{Error, Result};
use crate::lifetime::LifetimeDistribution;
use crate::malthus::{check_neutrality, Neutrality, ProliferationModel};
use crate::offspring::OffspringDistribution;
use crate::simulate::{CellType, SimConfig, StopRule};

/// Splits `name(a, b, c)` into its name and raw argument strings.
pub(crate) fn split_call(text: &str) -> Result<(&str, Vec<String>)> {
    let text = text.trim();
    let Some(open) = text.find('(') else {
        return Ok((text, Vec::new()));
    };
    let inner = text[open + 1..]
        .strip_suffix(')')
        .ok_or_else(|| Error::parse(format!("missing ')' in {text:?}")))?;
    let args = inner
        .split(',')
        .map(|a| a.trim().to_string())
        .filter(|a| !a.is_empty())
        .collect();
    Ok((text[..open].trim(), args))
}

pub(crate) fn parse_args<const N: usize>(name: &str, args: &[String]) -> Result<[f64; N]> {
    if args.len() != N {
        return Err(Error::parse(format!(
            "{name}(...) takes {N} argument(s), got {}",
            args.len()
        )));
    }
    let mut out = [0.0; N];
    for (slot, raw) in out.iter_mut().zip(args) {
        *slot = raw
            .parse()
            .map_err(|e| Error::parse(format!("{name}: bad number {raw:?}: {e}")))?;
    }
    Ok(out)
}

pub(crate) fn as_stages(k: f64) -> Result<u32> {
    if k >= 1.0 && k.fract() == 0.0 && k <= u32::MAX as f64 {
        Ok(k as u32)
    } else {
        Err(Error::invalid(format!(
            "stage count must be a positive integer, got {k}"
        )))
    }
}

/// Parses `key = value` lines; `#` starts a comment, surrounding quotes on
/// values are dropped. Duplicate keys are rejected.
pub fn parse_flat(text: &str) -> Result<Vec<(String, String)>> {
    let mut out: Vec<(String, String)> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::parse(format!("line {}: expected key = value", lineno + 1)))?;
        let key = key.trim().to_string();
        let value = value.trim().trim_matches('"').trim().to_string();
        if out.iter().any(|(k, _)| *k == key) {
            return Err(Error::parse(format!(
                "line {}: duplicate key {key:?}",
                lineno + 1
            )));
        }
        out.push((key, value));
    }
    Ok(out)
}

fn resolve<T: Clone>(
    specific: Option<T>,
    shared: &Option<T>,
    missing: impl FnOnce() -> String,
) -> Result<T> {
    specific
        .or_else(|| shared.clone())
        .ok_or_else(|| Error::parse(missing()))
}

fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn parse_number<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    value
        .parse()
        .map_err(|e| Error::parse(format!("{key}: bad value {value:?}: {e}")))
}

/// Optional overrides of the numerical defaults.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Numerics {
    /// Renewal time step `h`.
    pub step: Option<f64>,
    /// Renewal horizon `U`.
    pub horizon: Option<f64>,
    /// PMF truncation `R`.
    pub rmax: Option<usize>,
    /// Circle points `M`.
    pub points: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub mutant_offspring: OffspringDistribution,
    pub mutant_lifetime: LifetimeDistribution,
    pub nonmutant_offspring: OffspringDistribution,
    pub nonmutant_lifetime: LifetimeDistribution,
    pub numerics: Numerics,
}

impl ModelConfig {
    /// Same laws for mutant and non-mutant cells.
    pub fn symmetric(offspring: OffspringDistribution, lifetime: LifetimeDistribution) -> Self {
        ModelConfig {
            mutant_offspring: offspring.clone(),
            mutant_lifetime: lifetime.clone(),
            nonmutant_offspring: offspring,
            nonmutant_lifetime: lifetime,
            numerics: Numerics::default(),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&read_file(path.as_ref())?)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut shared_off = None;
        let mut shared_life = None;
        let mut off = [None, None];
        let mut life = [None, None];
        let mut numerics = Numerics::default();
        for (key, value) in parse_flat(text)? {
            match key.as_str() {
                "offspring" => shared_off = Some(value.parse()?),
                "lifetime" => shared_life = Some(value.parse()?),
                "mutant_offspring" => off[0] = Some(value.parse()?),
                "nonmutant_offspring" => off[1] = Some(value.parse()?),
                "mutant_lifetime" => life[0] = Some(value.parse()?),
                "nonmutant_lifetime" => life[1] = Some(value.parse()?),
                "h" | "step" => numerics.step = Some(parse_number(&key, &value)?),
                "horizon" | "U" => numerics.horizon = Some(parse_number(&key, &value)?),
                "rmax" | "R" => numerics.rmax = Some(parse_number(&key, &value)?),
                "points" | "M" => numerics.points = Some(parse_number(&key, &value)?),
                other => return Err(Error::parse(format!("unknown model key {other:?}"))),
            }
        }
        let [mo, no] = off;
        let [ml, nl] = life;
        let pick = |what| format!("model config lacks {what}");
        Ok(ModelConfig {
            mutant_offspring: resolve(mo, &shared_off, || pick("mutant offspring law"))?,
            nonmutant_offspring: resolve(no, &shared_off, || pick("non-mutant offspring law"))?,
            mutant_lifetime: resolve(ml, &shared_life, || pick("mutant life-time law"))?,
            nonmutant_lifetime: resolve(nl, &shared_life, || pick("non-mutant life-time law"))?,
            numerics,
        })
    }

    /// The mutant model and the neutrality report of the pair.
    pub fn build(&self) -> Result<(ProliferationModel, Neutrality)> {
        let model =
            ProliferationModel::new(self.mutant_offspring.clone(), self.mutant_lifetime.clone())?;
        let neutrality = check_neutrality(
            (&self.mutant_offspring, &self.mutant_lifetime),
            (&self.nonmutant_offspring, &self.nonmutant_lifetime),
        )?;
        Ok((model, neutrality))
    }
}

impl fmt::Display for ModelConfig {
    /// Canonical form: every key spelled out, fixed order.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "mutant_offspring = {}", self.mutant_offspring)?;
        writeln!(f, "mutant_lifetime = {}", self.mutant_lifetime)?;
        writeln!(f, "nonmutant_offspring = {}", self.nonmutant_offspring)?;
        writeln!(f, "nonmutant_lifetime = {}", self.nonmutant_lifetime)?;
        let n = &self.numerics;
        let mut extra = String::new();
        if let Some(v) = n.step {
            let _ = writeln!(extra, "h = {v}");
        }
        if let Some(v) = n.horizon {
            let _ = writeln!(extra, "horizon = {v}");
        }
        if let Some(v) = n.rmax {
            let _ = writeln!(extra, "rmax = {v}");
        }
        if let Some(v) = n.points {
            let _ = writeln!(extra, "points = {v}");
        }
        f.write_str(&extra)
    }
}

impl SimConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&read_file(path.as_ref())?)
    }

    /// Keys: `offspring`/`lifetime` (shared) or the `mutant_`/`nonmutant_`
    /// variants, `rho`, `n_max` and/or `t_max`, `seed`, `cultures`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut shared_off: Option<OffspringDistribution> = None;
        let mut shared_life: Option<LifetimeDistribution> = None;
        let mut off = [None, None];
        let mut life = [None, None];
        let mut rho = None;
        let mut n_max = None;
        let mut t_max = None;
        let mut seed = 42;
        let mut cultures = 1;
        for (key, value) in parse_flat(text)? {
            match key.as_str() {
                "offspring" => shared_off = Some(value.parse()?),
                "lifetime" => shared_life = Some(value.parse()?),
                "mutant_offspring" => off[0] = Some(value.parse()?),
                "nonmutant_offspring" => off[1] = Some(value.parse()?),
                "mutant_lifetime" => life[0] = Some(value.parse()?),
                "nonmutant_lifetime" => life[1] = Some(value.parse()?),
                "rho" => rho = Some(parse_number::<f64>(&key, &value)?),
                "n_max" => n_max = Some(parse_number::<f64>(&key, &value)? as u64),
                "t_max" => t_max = Some(parse_number::<f64>(&key, &value)?),
                "seed" => seed = parse_number(&key, &value)?,
                "cultures" => cultures = parse_number::<f64>(&key, &value)? as usize,
                other => return Err(Error::parse(format!("unknown simulation key {other:?}"))),
            }
        }
        let [mo, no] = off;
        let [ml, nl] = life;
        let need = |what| format!("simulation config lacks {what}");
        let stop = match (n_max, t_max) {
            (Some(n), None) => StopRule::Population(n),
            (None, Some(t)) => StopRule::Time(t),
            (Some(n), Some(t)) => StopRule::Either {
                population: n,
                time: t,
            },
            (None, None) => return Err(Error::parse("simulation config needs n_max or t_max")),
        };
        let cfg = SimConfig {
            nonmutant: CellType {
                offspring: resolve(no, &shared_off, || need("non-mutant offspring law"))?,
                lifetime: resolve(nl, &shared_life, || need("non-mutant life-time law"))?,
            },
            mutant: CellType {
                offspring: resolve(mo, &shared_off, || need("mutant offspring law"))?,
                lifetime: resolve(ml, &shared_life, || need("mutant life-time law"))?,
            },
            rho: rho.ok_or_else(|| Error::parse("simulation config lacks rho"))?,
            stop,
            seed,
            cultures,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

impl fmt::Display for SimConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "nonmutant_offspring = {}", self.nonmutant.offspring)?;
        writeln!(f, "nonmutant_lifetime = {}", self.nonmutant.lifetime)?;
        writeln!(f, "mutant_offspring = {}", self.mutant.offspring)?;
        writeln!(f, "mutant_lifetime = {}", self.mutant.lifetime)?;
        writeln!(f, "rho = {}", self.rho)?;
        match self.stop {
            StopRule::Population(n) => writeln!(f, "n_max = {n}")?,
            StopRule::Time(t) => writeln!(f, "t_max = {t}")?,
            StopRule::Either { population, time } => {
                writeln!(f, "n_max = {population}")?;
                writeln!(f, "t_max = {time}")?;
            }
        }
        writeln!(f, "seed = {}", self.seed)?;
        writeln!(f, "cultures = {}", self.cultures)
    }
}
