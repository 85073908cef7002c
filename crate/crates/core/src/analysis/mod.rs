//! Correlation lengths, the width-scaling fit and quench summaries.

pub mod fit;
pub mod quench;

use serde::{Deserialize, Serialize};

pub use fit::{
    asymptotic_freedom_fit, fit_with_exclusion, xi_from_tail, xi_from_tail_weighted, SaturationRule, ScalingFit,
    ScalingPoint, TailFit,
};
pub use quench::{quench_summary, QuenchSummary};

use crate::error::{Error, Result};
use crate::qmc::jackknife;

/// `C(x)` with errors for `x = 0..=x_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationFunction {
    pub x: Vec<usize>,
    pub values: Vec<f64>,
    pub errors: Vec<f64>,
    pub length: usize,
    pub periodic: bool,
}

impl CorrelationFunction {
    pub fn new(values: Vec<f64>, errors: Vec<f64>, length: usize, periodic: bool) -> Result<Self> {
        if values.len() != errors.len() || values.is_empty() {
            return Err(Error::Analysis("values and errors must be non-empty and of equal length".into()));
        }
        Ok(CorrelationFunction { x: (0..values.len()).collect(), values, errors, length, periodic })
    }

    /// Largest separation with an independent value.
    pub fn x_limit(&self) -> usize {
        *self.x.last().unwrap_or(&0)
    }
}

/// `S(k) = Σₓ w(x) C(x) cos(2πkx/L)`.
pub fn structure_factor(c: &[f64], weights: &[f64], length: usize, k: usize) -> f64 {
    let q = 2.0 * std::f64::consts::PI * k as f64 / length as f64;
    c.iter().zip(weights).enumerate().map(|(x, (c, w))| w * c * (q * x as f64).cos()).sum()
}

/// `ξ₂ = (L/2π)·√(S(0)/S(2π/L) − 1)`.
pub fn xi_second_moment(s0: f64, sk1: f64, length: f64) -> Result<f64> {
    if !(sk1 > 0.0) || !(s0 > sk1) || !s0.is_finite() {
        return Err(Error::Analysis(format!("second-moment length undefined for S(0) = {s0}, S(k1) = {sk1}")));
    }
    Ok(length / (2.0 * std::f64::consts::PI) * (s0 / sk1 - 1.0).sqrt())
}

/// `ξ₂` with Gaussian propagation of independent errors on `S(0)`, `S(k1)`.
pub fn xi_second_moment_with_error(s0: f64, e0: f64, sk1: f64, e1: f64, length: f64) -> Result<(f64, f64)> {
    let xi = xi_second_moment(s0, sk1, length)?;
    let r = s0 / sk1;
    let dr = r * ((e0 / s0).powi(2) + (e1 / sk1).powi(2)).sqrt();
    let c = length / (2.0 * std::f64::consts::PI);
    Ok((xi, c * c * dr / (2.0 * xi)))
}

/// Coarse-bin values of a correlation function, for jackknife analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinnedCorrelation {
    pub length: usize,
    pub periodic: bool,
    pub weights: Vec<f64>,
    pub bins: Vec<Vec<f64>>,
    /// Independent per-bin `[S(0), S(2π/L)]`; when present `ξ₂` uses these
    /// instead of transforming `C(x)`.
    #[serde(default)]
    pub structure: Option<Vec<[f64; 2]>>,
}

impl BinnedCorrelation {
    pub fn n_x(&self) -> usize {
        self.weights.len()
    }

    /// `C(x)/C(0)` with jackknife errors.
    pub fn normalized(&self) -> Result<CorrelationFunction> {
        let mut values = Vec::with_capacity(self.n_x());
        let mut errors = Vec::with_capacity(self.n_x());
        for x in 0..self.n_x() {
            let (v, e, _) = jackknife(&self.bins, |m| ratio(m[x], m[0]))?;
            values.push(v);
            errors.push(e);
        }
        CorrelationFunction::new(values, errors, self.length, self.periodic)
    }

    /// Per-bin `[S(0), S(2π/L)]`.
    fn structure_bins(&self) -> Vec<Vec<f64>> {
        match &self.structure {
            Some(s) => s.iter().map(|v| v.to_vec()).collect(),
            None => self
                .bins
                .iter()
                .map(|m| (0..2).map(|k| structure_factor(m, &self.weights, self.length, k)).collect())
                .collect(),
        }
    }

    /// `S(0)` and `S(2π/L)` with jackknife errors.
    pub fn structure_factors(&self) -> Result<[(f64, f64); 2]> {
        let bins = self.structure_bins();
        let s = |k: usize| jackknife(&bins, |m| Ok(m[k])).map(|r| (r.0, r.1));
        Ok([s(0)?, s(1)?])
    }

    /// `ξ₂` with a jackknife error. The error is infinite when some
    /// jackknife samples have `S(0) ≤ S(2π/L)`.
    pub fn xi_second_moment(&self) -> Result<(f64, f64)> {
        let bins = self.structure_bins();
        let l = self.length as f64;
        match jackknife(&bins, |m| xi_second_moment(m[0], m[1], l)) {
            Ok((v, e, _)) => Ok((v, e)),
            Err(_) => {
                let [(s0, _), (s1, _)] = self.structure_factors()?;
                Ok((xi_second_moment(s0, s1, l)?, f64::INFINITY))
            }
        }
    }
}

fn ratio(a: f64, b: f64) -> Result<f64> {
    if b == 0.0 {
        return Err(Error::Analysis("correlation vanishes at x = 0".into()));
    }
    Ok(a / b)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XiEstimate {
    pub xi_tail: f64,
    pub xi_tail_err: f64,
    pub xi_second_moment: f64,
    pub xi_second_moment_err: f64,
    pub window: (usize, usize),
    pub chi2_dof: f64,
    pub reliable: bool,
    /// `|ξ − ξ₂|/ξ`.
    pub discrepancy: f64,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct XiOptions {
    /// Inclusive tail-fit window; by default `[2ξ₂, min(4ξ₂, L/2−1)]`.
    pub window: Option<(usize, usize)>,
}

/// Default tail window seeded by a second-moment estimate, widened to at
/// least three points when possible.
pub fn default_window(xi2: f64, length: usize, x_limit: usize) -> (usize, usize) {
    let top = (length / 2).saturating_sub(1).min(x_limit).max(1);
    let lo = ((2.0 * xi2).ceil() as usize).clamp(1, top);
    let mut hi = ((4.0 * xi2).floor() as usize).min(top).max(lo);
    if hi < lo + 2 {
        hi = (lo + 2).min(top);
    }
    let lo = if hi < lo + 2 { hi.saturating_sub(2).max(1) } else { lo };
    (lo, hi)
}

/// Both correlation lengths with jackknife errors carried through the
/// normalization, the structure factors and the tail fit.
pub fn estimate_xi(binned: &BinnedCorrelation, opts: &XiOptions) -> Result<XiEstimate> {
    let nb = binned.bins.len();
    if nb < 2 {
        return Err(Error::Analysis("need at least two bins".into()));
    }
    let corr = binned.normalized()?;
    let l = binned.length;
    let mut notes = Vec::new();

    let (xi2, xi2_err) = match binned.xi_second_moment() {
        Ok(v) => v,
        Err(e) => {
            notes.push(format!("xi2 undefined: {e}"));
            (f64::NAN, f64::NAN)
        }
    };
    if xi2_err.is_infinite() {
        notes.push("xi2 undefined on some jackknife samples".into());
    }
    let window = match opts.window {
        Some(w) => w,
        None if xi2.is_finite() => default_window(xi2, l, corr.x_limit()),
        None => {
            // seed the window from a short-distance tail fit instead
            let top = (l / 2).saturating_sub(1).min(corr.x_limit()).max(1);
            let guess = xi_from_tail(&corr, (1.min(top), 8.min(top)))?.xi;
            notes.push(format!("window seeded from short-distance fit xi = {guess:.3}"));
            default_window(if guess.is_finite() { guess } else { 1.0 }, l, corr.x_limit())
        }
    };
    let full = xi_from_tail(&corr, window)?;
    if let Some(n) = &full.note {
        notes.push(n.clone());
    }

    let (xi_tail, xi_tail_err, _) = jackknife(&binned.bins, |m| {
        let c0 = m[0];
        let values: Vec<f64> = m.iter().map(|v| v / c0).collect();
        let sample = CorrelationFunction { values, ..corr.clone() };
        let f = xi_from_tail_weighted(&sample, &corr.errors, window)?;
        if f.xi.is_finite() {
            Ok(f.xi)
        } else {
            Err(Error::Analysis("tail fit failed on a jackknife sample".into()))
        }
    })?;
    // NaN when ξ₂ is undefined
    let discrepancy = (xi_tail - xi2).abs() / xi_tail;
    Ok(XiEstimate {
        xi_tail,
        xi_tail_err,
        xi_second_moment: xi2,
        xi_second_moment_err: xi2_err,
        window,
        chi2_dof: full.chi2_dof,
        reliable: full.reliable,
        discrepancy,
        notes,
    })
}
