//! Command-line arguments and their validated form.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qharm_core::ffield::is_prime;
use qharm_core::grid::MAX_GRID_POINTS;
use qharm_core::opnorm::ExponentPair;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const DEFAULT_POLY: &str = "x1^2 - x2*x3";

#[derive(Debug, Parser)]
#[command(
    name = "qharm",
    version,
    about = "Finite-field Fourier decay, extension, averaging and distance-set experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Plane detection and the normalized decay constant of a homogeneous zero set.
    Decay(Common),
    /// Lower bounds for the extension norm `L^p(dσ) → L^r(dm)`.
    Extension(NormArgs),
    /// Lower bounds for the averaging norm `L^p(dx) → L^r(dx)`.
    Averaging(NormArgs),
    /// Distance-set sizes over seeded random point sets.
    Distance(DistanceArgs),
    /// Decay of every level set of a diagonal form.
    Scan(Common),
    /// Run the acceptance suite.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Polynomial in x1..xd with integer coefficients.
    #[arg(long, default_value = DEFAULT_POLY)]
    pub poly: String,
    #[arg(long, default_value_t = 3)]
    pub dim: usize,
    /// Comma-separated primes or an inclusive range `a..b`.
    #[arg(long, default_value = "5..23")]
    pub primes: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the report here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Ignore and do not write the result cache.
    #[arg(long)]
    pub no_cache: bool,
}

#[derive(Debug, Args)]
pub struct NormArgs {
    #[command(flatten)]
    pub common: Common,
    /// Source exponent, e.g. `2`, `4/3` or `inf`.
    #[arg(long)]
    pub p: Option<String>,
    /// Target exponent.
    #[arg(long)]
    pub r: Option<String>,
    /// Random restarts of the ascent search per prime.
    #[arg(long)]
    pub budget: Option<usize>,
}

#[derive(Debug, Args)]
pub struct DistanceArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 100)]
    pub trials: u64,
    /// Emit the isotropic point sets with a one-point distance set instead.
    #[arg(long)]
    pub counterexample: bool,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Comma-separated criterion numbers; all when omitted.
    #[arg(long)]
    pub criteria: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    Decay,
    Extension,
    Averaging,
    Distance,
    Scan,
}

impl CommandKind {
    pub fn name(self) -> &'static str {
        match self {
            CommandKind::Decay => "decay",
            CommandKind::Extension => "extension",
            CommandKind::Averaging => "averaging",
            CommandKind::Distance => "distance",
            CommandKind::Scan => "scan",
        }
    }
}

/// Everything that determines a report's numeric payload. Its JSON form is
/// hashed into the cache key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub command: CommandKind,
    pub poly: String,
    pub dim: usize,
    pub primes: Vec<u32>,
    pub seed: u64,
    /// Canonical exponent pair, e.g. `(4/3→4)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pair: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub budget: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    #[serde(skip_serializing_if = "std::ops::Not::not", default)]
    pub counterexample: bool,
}

/// Output options that do not affect the payload.
#[derive(Debug, Clone)]
pub struct OutputOptions {
    pub out: Option<PathBuf>,
    pub format: Format,
    pub use_cache: bool,
}

/// Primes from `5,7,11` or the odd primes in the inclusive range `5..23`.
pub fn parse_primes(text: &str) -> Result<Vec<u32>, CliError> {
    let bad = |what: &str| CliError::Config(format!("invalid prime list `{text}`: {what}"));
    let number = |s: &str| s.trim().parse::<u32>().map_err(|_| bad("not an integer"));
    let primes: Vec<u32> = if let Some((a, b)) = text.split_once("..") {
        let (a, b) = (number(a)?, number(b.trim_start_matches('='))?);
        if a > b {
            return Err(bad("empty range"));
        }
        (a..=b).filter(|&n| n > 2 && is_prime(n)).collect()
    } else {
        let list = text.split(',').map(number).collect::<Result<Vec<_>, _>>()?;
        if let Some(n) = list.iter().find(|&&n| n <= 2 || !is_prime(n)) {
            return Err(bad(&format!("{n} is not an odd prime")));
        }
        list
    };
    if primes.is_empty() {
        return Err(bad("no odd primes"));
    }
    let mut primes = primes;
    primes.sort_unstable();
    primes.dedup();
    Ok(primes)
}

fn check_grid(primes: &[u32], dim: usize) -> Result<(), CliError> {
    if dim == 0 {
        return Err(CliError::Config("dimension must be positive".into()));
    }
    for &p in primes {
        if (p as f64).powi(dim as i32) > MAX_GRID_POINTS as f64 {
            return Err(CliError::Config(format!("grid F_{p}^{dim} exceeds the limit of {MAX_GRID_POINTS} points")));
        }
    }
    Ok(())
}

fn base(command: CommandKind, c: &Common) -> Result<(ExperimentConfig, OutputOptions), CliError> {
    let primes = parse_primes(&c.primes)?;
    check_grid(&primes, c.dim)?;
    let config = ExperimentConfig {
        command,
        poly: c.poly.trim().to_string(),
        dim: c.dim,
        primes,
        seed: c.seed,
        pair: None,
        budget: None,
        trials: None,
        counterexample: false,
    };
    Ok((config, OutputOptions { out: c.out.clone(), format: c.format, use_cache: !c.no_cache }))
}

/// Default exponent pair and restart budget for the norm commands.
pub fn norm_defaults(command: CommandKind) -> (&'static str, &'static str, usize) {
    match command {
        CommandKind::Averaging => ("4/3", "4", 4),
        _ => ("2", "4", 200),
    }
}

impl Command {
    /// Validated configuration, or `None` for `verify`.
    pub fn resolve(&self) -> Result<Option<(ExperimentConfig, OutputOptions)>, CliError> {
        Ok(Some(match self {
            Command::Decay(c) => base(CommandKind::Decay, c)?,
            Command::Scan(c) => base(CommandKind::Scan, c)?,
            Command::Extension(a) | Command::Averaging(a) => {
                let kind =
                    if matches!(self, Command::Extension(_)) { CommandKind::Extension } else { CommandKind::Averaging };
                let (mut config, out) = base(kind, &a.common)?;
                let (p, r, budget) = norm_defaults(kind);
                let pair = ExponentPair::parse(a.p.as_deref().unwrap_or(p), a.r.as_deref().unwrap_or(r))
                    .map_err(|e| CliError::Config(e.to_string()))?;
                let budget = a.budget.unwrap_or(budget);
                if budget == 0 {
                    return Err(CliError::Config("budget must be at least 1".into()));
                }
                config.pair = Some(pair.to_string());
                config.budget = Some(budget);
                (config, out)
            }
            Command::Distance(a) => {
                let (mut config, out) = base(CommandKind::Distance, &a.common)?;
                if a.trials == 0 && !a.counterexample {
                    return Err(CliError::Config("trial count must be at least 1".into()));
                }
                config.trials = (!a.counterexample).then_some(a.trials);
                config.counterexample = a.counterexample;
                (config, out)
            }
            Command::Verify(_) => return Ok(None),
        }))
    }
}

/// Criterion numbers from `1,3,12`.
pub fn parse_criteria(text: &str) -> Result<Vec<u8>, CliError> {
    text.split(',')
        .map(|s| match s.trim().parse::<u8>() {
            Ok(n) if (1..=12).contains(&n) => Ok(n),
            _ => Err(CliError::Config(format!("unknown criterion `{}`", s.trim()))),
        })
        .collect()
}
