//! Per-prime computations behind each subcommand.

use std::fmt::Display;

use qharm_core::distance::{
    counting_function, counting_function_with, falconer_trials, isotropic_counterexample, max_nu_bound_check,
    random_point_set, DistanceError, LevelSpectra,
};
use qharm_core::ffield::PrimeField;
use qharm_core::mpoly::{parse_poly, Homogeneity, Poly};
use qharm_core::opnorm::{
    averaging_region_verdict, estimate_a, estimate_rstar, extension_necessary_region, linear_fit,
    necessity_exponent_scan, ExponentPair, NormEstimate, ScanWitness,
};
use qharm_core::qformula::{level_decay_check, odd_dimension_scan, DiagonalForm, QformulaError};
use qharm_core::seed::derive_seed;
use qharm_core::spectrum::decay_profile;
use qharm_core::variety::{contains_plane_through_origin, enumerate_level_set, VarietySlice};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{CommandKind, ExperimentConfig};
use crate::report::Payload;
use crate::CliError;

fn config_err(e: impl Display) -> CliError {
    CliError::Config(e.to_string())
}

fn compute_err(e: impl Display) -> CliError {
    CliError::Compute(e.to_string())
}

fn field(p: u32) -> Result<PrimeField, CliError> {
    PrimeField::new(p).map_err(config_err)
}

fn poly_at(config: &ExperimentConfig, p: u32) -> Result<(PrimeField, Poly), CliError> {
    let f = field(p)?;
    Ok((f, parse_poly(&config.poly, config.dim, f).map_err(config_err)?))
}

fn zero_set(poly: &Poly, f: PrimeField) -> Result<VarietySlice, CliError> {
    enumerate_level_set(poly, f.zero(), f).map_err(compute_err)
}

/// Runs `task` for every prime, possibly concurrently, keeping prime order.
fn per_prime<T: Send>(primes: &[u32], task: impl Fn(u32) -> Result<T, CliError> + Sync) -> Result<Vec<T>, CliError> {
    primes.par_iter().map(|&p| task(p)).collect()
}

fn pair(config: &ExperimentConfig) -> ExponentPair {
    let text = config.pair.as_deref().expect("norm commands carry a pair");
    let (p, r) = text.trim_start_matches('(').trim_end_matches(')').split_once('→').expect("canonical pair");
    ExponentPair::parse(p, r).expect("canonical pair parses")
}

pub fn compute(config: &ExperimentConfig) -> Result<Payload, CliError> {
    match config.command {
        CommandKind::Decay => decay(config),
        CommandKind::Extension => extension(config),
        CommandKind::Averaging => averaging(config),
        CommandKind::Distance if config.counterexample => counterexample(config),
        CommandKind::Distance => distance(config),
        CommandKind::Scan => scan(config),
    }
}

fn decay(config: &ExperimentConfig) -> Result<Payload, CliError> {
    if config.dim != 3 {
        return Err(CliError::Config(format!("decay needs dimension 3, got {}", config.dim)));
    }
    let rows = per_prime(&config.primes, |p| {
        let (f, poly) = poly_at(config, p)?;
        if !matches!(poly.is_homogeneous(), Homogeneity::Homogeneous(_)) {
            return Err(CliError::Config(format!("`{}` is not homogeneous", config.poly)));
        }
        let plane = contains_plane_through_origin(&poly, f).map_err(compute_err)?;
        let h = zero_set(&poly, f)?;
        let profile = decay_profile(&h).map_err(compute_err)?;
        Ok(json!({
            "p": p,
            "size": h.len(),
            "plane_free": plane.is_none(),
            "plane_normal": plane.map(|s| s.normal().to_vec()),
            "constant": profile.normalized_max(f.q(), 3),
            "argmax": profile.argmax,
        }))
    })?;
    let worst = rows
        .iter()
        .filter(|r| r["plane_free"] == true)
        .map(|r| r["constant"].as_f64().unwrap())
        .fold(None, |a: Option<f64>, v| Some(a.map_or(v, |a| a.max(v))));
    let planes = rows.iter().filter(|r| r["plane_free"] == false).count();
    Ok(Payload { rows, summary: json!({ "max_plane_free_constant": worst, "primes_with_plane": planes }) })
}

/// Dimension of the largest subspace through the origin known to lie in a
/// homogeneous zero set in `F_p³`.
fn subspace_dimension(poly: &Poly, f: PrimeField, h: &VarietySlice) -> Result<Option<u32>, CliError> {
    if poly.nvars() != 3 || !h.is_homogeneous() {
        return Ok(None);
    }
    if contains_plane_through_origin(poly, f).map_err(compute_err)?.is_some() {
        return Ok(Some(2));
    }
    Ok(Some(if h.len() > 1 { 1 } else { 0 }))
}

fn estimate_row(p: u32, h: &VarietySlice, est: &NormEstimate) -> Value {
    json!({
        "p": p,
        "size": h.len(),
        "lower_bound": est.lower_bound,
        "witness": est.witness,
        "evaluations": est.evaluations,
    })
}

/// Slope of `log(lower_bound)` against `log p`.
fn growth(rows: &[Value]) -> Value {
    if rows.len() < 2 {
        return Value::Null;
    }
    let xs: Vec<f64> = rows.iter().map(|r| (r["p"].as_f64().unwrap()).ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r["lower_bound"].as_f64().unwrap().ln()).collect();
    let fit = linear_fit(&xs, &ys);
    json!({ "slope": fit.slope, "std_error": fit.std_error })
}

fn scan_summary(config: &ExperimentConfig, pr: &ExponentPair, witness: ScanWitness) -> Result<Value, CliError> {
    if config.primes.len() < 4 {
        return Ok(Value::Null);
    }
    let fit = necessity_exponent_scan(&config.poly, config.dim, pr, &config.primes, witness).map_err(compute_err)?;
    Ok(json!({
        "witness": witness,
        "slope": fit.fit.slope,
        "std_error": fit.fit.std_error,
        "theory": fit.theory,
        "size_exponent": fit.size_exponent,
    }))
}

fn extension(config: &ExperimentConfig) -> Result<Payload, CliError> {
    let pr = pair(config);
    let budget = config.budget.expect("norm commands carry a budget");
    let rows = per_prime(&config.primes, |p| {
        let (f, poly) = poly_at(config, p)?;
        let h = zero_set(&poly, f)?;
        let est = estimate_rstar(&h, &pr, budget, derive_seed(config.seed, p as u64)).map_err(compute_err)?;
        let mut row = estimate_row(p, &h, &est);
        if let Some(alpha) = subspace_dimension(&poly, f, &h)? {
            row["subspace_dimension"] = json!(alpha);
            row["necessary_conditions"] = json!(extension_necessary_region(3, alpha, &pr));
        }
        Ok(row)
    })?;
    let summary = json!({
        "pair": pr.to_string(),
        "growth": growth(&rows),
        "constant_witness": scan_summary(config, &pr, ScanWitness::ExtensionConstant)?,
    });
    Ok(Payload { rows, summary })
}

fn averaging(config: &ExperimentConfig) -> Result<Payload, CliError> {
    let pr = pair(config);
    let budget = config.budget.expect("norm commands carry a budget");
    let rows = per_prime(&config.primes, |p| {
        let (f, poly) = poly_at(config, p)?;
        let h = zero_set(&poly, f)?;
        let est = estimate_a(&h, &pr, budget, derive_seed(config.seed, p as u64)).map_err(compute_err)?;
        Ok(estimate_row(p, &h, &est))
    })?;
    let summary = json!({
        "pair": pr.to_string(),
        "region": averaging_region_verdict(&pr),
        "growth": growth(&rows),
        "spike": scan_summary(config, &pr, ScanWitness::AveragingSpike)?,
    });
    Ok(Payload { rows, summary })
}

/// Trials whose point sets are regenerated to compare the two counting routes.
const IDENTITY_TRIALS: usize = 3;

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

fn distance(config: &ExperimentConfig) -> Result<Payload, CliError> {
    let trials = config.trials.expect("distance carries a trial count");
    let rows = per_prime(&config.primes, |p| {
        let (f, poly) = poly_at(config, p)?;
        let results = falconer_trials(&poly, trials, derive_seed(config.seed, p as u64)).map_err(compute_err)?;
        let mut ratios: Vec<f64> = results.iter().map(|t| t.ratio.ratio).collect();
        ratios.sort_by(f64::total_cmp);
        let spectra = LevelSpectra::new(&poly).map_err(compute_err)?;
        let mut identity = true;
        let mut max_nu: Option<f64> = None;
        for t in results.iter().take(IDENTITY_TRIALS) {
            let e = random_point_set(f, config.dim, t.size_e, t.seed_e).map_err(compute_err)?;
            let g = random_point_set(f, config.dim, t.size_f, t.seed_f).map_err(compute_err)?;
            let direct = counting_function(&poly, &e, &g).map_err(compute_err)?;
            identity &= match counting_function_with(&spectra, &e, &g) {
                Ok(s) => s.counts == direct,
                Err(DistanceError::RoundingGuard(_)) => false,
                Err(e) => return Err(compute_err(e)),
            };
            if let Ok(c) = max_nu_bound_check(&poly, &e, &g) {
                max_nu = Some(max_nu.map_or(c, |m| m.max(c)));
            }
        }
        Ok(json!({
            "p": p,
            "trials": trials,
            "min_ratio": ratios[0],
            "median_ratio": median(&ratios),
            "conjectural": results[0].ratio.conjectural,
            "identity_checked": results.len().min(IDENTITY_TRIALS),
            "identity_ok": identity,
            "max_nu_constant": max_nu,
        }))
    })?;
    let min = rows.iter().map(|r| r["min_ratio"].as_f64().unwrap()).fold(f64::INFINITY, f64::min);
    let identity = rows.iter().all(|r| r["identity_ok"] == true);
    Ok(Payload { rows, summary: json!({ "min_ratio": min, "identity_ok": identity }) })
}

/// The exponent `c` when the polynomial is `Σ xⱼ^c`.
fn fermat_degree(poly: &Poly) -> Option<u32> {
    let (c, coeffs) = poly.as_diagonal()?;
    coeffs.iter().all(|a| a.value() == 1).then_some(c)
}

fn counterexample(config: &ExperimentConfig) -> Result<Payload, CliError> {
    if config.dim % 2 == 1 {
        return Err(CliError::Config(format!("isotropic sets need an even dimension, got {}", config.dim)));
    }
    let rows = per_prime(&config.primes, |p| {
        let (f, poly) = poly_at(config, p)?;
        let c = fermat_degree(&poly)
            .ok_or_else(|| CliError::Config(format!("`{}` is not of the form Σ xⱼ^c", config.poly)))?;
        Ok(match isotropic_counterexample(f, config.dim, c) {
            Ok((e, g)) => {
                let counts = counting_function(&poly, &e, &g).map_err(compute_err)?;
                json!({ "p": p, "satisfiable": true, "size": e.len(), "distance_set": counts.distance_set() })
            }
            Err(DistanceError::Unsatisfiable { .. }) => json!({ "p": p, "satisfiable": false }),
            Err(e) => return Err(compute_err(e)),
        })
    })?;
    let hits = rows.iter().filter(|r| r["satisfiable"] == true).count();
    Ok(Payload { rows, summary: json!({ "satisfiable_primes": hits }) })
}

fn scan(config: &ExperimentConfig) -> Result<Payload, CliError> {
    let qf_err = |e: QformulaError| match e {
        QformulaError::ComputeGuard { .. } | QformulaError::UnsupportedDimension(_) => config_err(e),
        other => compute_err(other),
    };
    let (_, probe) = poly_at(config, config.primes[0])?;
    let (s, _) =
        probe.as_diagonal().ok_or_else(|| CliError::Config(format!("`{}` is not a diagonal form", config.poly)))?;
    if !(2..=5).contains(&config.dim) {
        return Err(CliError::Config(format!("scan supports dimensions 2 to 5, got {}", config.dim)));
    }
    let rows: Vec<Value> = per_prime(&config.primes, |p| {
        let (f, poly) = poly_at(config, p)?;
        let coeffs: Vec<i64> =
            poly.as_diagonal().map(|(_, a)| a.iter().map(|v| v.value() as i64).collect()).unwrap_or_default();
        if config.dim == 5 {
            return odd_dimension_scan(s, &coeffs, &[p]).map_err(qf_err);
        }
        match DiagonalForm::new(f, s, &coeffs) {
            Ok(form) => Ok(level_decay_check(&form).map_err(qf_err)?.rows().to_vec()),
            Err(QformulaError::CharacteristicDividesDegree { .. } | QformulaError::ZeroCoefficient(_)) => {
                Ok(Vec::new())
            }
            Err(e) => Err(qf_err(e)),
        }
    })?
    .into_iter()
    .flatten()
    .map(|r| serde_json::to_value(r).expect("row serializes"))
    .collect();
    let mut summary = serde_json::Map::new();
    for r in &rows {
        let branch = r["branch"].as_str().unwrap().to_string();
        let v = r["normalized_max"].as_f64().unwrap();
        let e = summary.entry(branch).or_insert(json!(v));
        if e.as_f64().unwrap() < v {
            *e = json!(v);
        }
    }
    Ok(Payload { rows, summary: json!({ "max_by_branch": summary }) })
}
