//! Quenched-disorder ensembles: one independent chain per realization.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{run_chain, RunSpec};
use crate::analysis::{estimate_xi, XiOptions};
use crate::error::{Error, Result};
use crate::lattice::sample_defects;

/// Seed of realization `r`: `base + r`. It seeds both the defect sampling
/// and the chain (on stream `r + 1`).
pub fn realization_seeds(base: u64, count: usize) -> Vec<u64> {
    (0..count as u64).map(|r| base.wrapping_add(r)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealizationResult {
    pub index: usize,
    pub seed: u64,
    pub removed: Vec<usize>,
    pub xi: Option<f64>,
    pub xi_err: Option<f64>,
    pub xi2: Option<f64>,
    pub reliable: bool,
    pub warnings: Vec<String>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub concentration: f64,
    pub realizations: Vec<RealizationResult>,
    pub succeeded: usize,
    pub xi_mean: f64,
    /// `√(var_r/R + mean(σ_r²)/R)`: realization scatter plus the average
    /// statistical error.
    pub xi_err: f64,
}

fn one(spec: &RunSpec, concentration: f64, index: usize, seed: u64, xi_opts: &XiOptions) -> RealizationResult {
    let mut res = RealizationResult {
        index,
        seed,
        removed: Vec::new(),
        xi: None,
        xi_err: None,
        xi2: None,
        reliable: false,
        warnings: Vec::new(),
        error: None,
    };
    let outcome = (|| -> Result<()> {
        let realization = sample_defects(&spec.geometry, concentration, seed)?;
        res.removed = realization.removed.clone();
        let chain = RunSpec { disorder: Some(realization), seed, stream: index as u64 + 1, ..spec.clone() };
        let series = run_chain(&chain)?;
        res.warnings = series.warnings.clone();
        let est = estimate_xi(&series.static_correlation(), xi_opts)?;
        res.xi = Some(est.xi_tail);
        res.xi_err = Some(est.xi_tail_err);
        res.xi2 = Some(est.xi_second_moment);
        res.reliable = est.reliable;
        Ok(())
    })();
    if let Err(e) = outcome {
        res.error = Some(e.to_string());
    }
    res
}

/// Runs `seeds.len()` realizations in parallel and averages the tail
/// correlation length. Failed realizations are recorded and skipped.
pub fn disorder_ensemble(spec: &RunSpec, concentration: f64, seeds: &[u64], xi_opts: &XiOptions) -> Result<EnsembleSummary> {
    if seeds.is_empty() {
        return Err(Error::InvalidParameter("at least one realization is required".into()));
    }
    spec.validate()?;
    let realizations: Vec<RealizationResult> = seeds
        .par_iter()
        .enumerate()
        .map(|(r, &seed)| one(spec, concentration, r, seed, xi_opts))
        .collect();
    let ok: Vec<(f64, f64)> = realizations.iter().filter_map(|r| r.xi.zip(r.xi_err)).collect();
    if ok.is_empty() {
        return Err(Error::Analysis(format!(
            "all {} realizations failed: {}",
            realizations.len(),
            realizations[0].error.clone().unwrap_or_default()
        )));
    }
    let r = ok.len() as f64;
    let mean = ok.iter().map(|p| p.0).sum::<f64>() / r;
    let stat = ok.iter().map(|p| p.1 * p.1).sum::<f64>() / r;
    let scatter = if ok.len() > 1 { ok.iter().map(|p| (p.0 - mean).powi(2)).sum::<f64>() / (r - 1.0) } else { 0.0 };
    Ok(EnsembleSummary {
        concentration,
        succeeded: ok.len(),
        realizations,
        xi_mean: mean,
        xi_err: ((scatter + stat) / r).sqrt(),
    })
}
