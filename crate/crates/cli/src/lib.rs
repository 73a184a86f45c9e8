//! Experiment runner for `qharm-core`: validated configurations, a result
//! cache, JSON-lines and CSV reports, and the acceptance suite.

pub mod acceptance;
pub mod cache;
pub mod commands;
pub mod config;
pub mod report;

use std::io::Write;
use std::time::Instant;

use thiserror::Error;

use crate::cache::{config_hash, Cache};
use crate::config::{parse_criteria, Cli, Command};
use crate::report::{render, ReportHeader};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("computation failed: {0}")]
    Compute(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Compute(_) => 1,
            CliError::Config(_) | CliError::Io(_) => 2,
        }
    }
}

/// Runs one invocation and returns its exit status.
pub fn run(cli: &Cli) -> Result<i32, CliError> {
    if let Command::Verify(v) = &cli.command {
        let ids = match &v.criteria {
            Some(text) => parse_criteria(text)?,
            None => acceptance::all_ids(),
        };
        let outcomes = acceptance::run(&ids, |o| println!("{o}"));
        let failed = outcomes.iter().filter(|o| !o.passed).count();
        println!("{} of {} criteria passed", outcomes.len() - failed, outcomes.len());
        return Ok(if failed == 0 { 0 } else { 1 });
    }
    let (config, out) = cli.command.resolve()?.expect("experiment commands resolve to a config");
    let start = Instant::now();
    let key = config_hash(&config);
    let cache = Cache::from_env();
    let payload = match out.use_cache.then(|| cache.load(&key)).flatten() {
        Some(payload) => payload,
        None => {
            let payload = commands::compute(&config)?;
            if out.use_cache {
                if let Err(e) = cache.store(&key, &payload) {
                    eprintln!("warning: could not write cache entry in {}: {e}", cache.dir().display());
                }
            }
            payload
        }
    };
    let text = render(&ReportHeader::new(&config, key), &config, &payload, start.elapsed().as_millis(), out.format);
    match &out.out {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(0)
}
