//! Exponential tail fits and the ln ξ versus width regression.

use serde::{Deserialize, Serialize};

use super::CorrelationFunction;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    pub xi: f64,
    /// Error from the curvature of χ² (Δχ² = 1).
    pub xi_err: f64,
    pub amplitude: f64,
    pub window: (usize, usize),
    pub points: usize,
    pub chi2_dof: f64,
    pub reliable: bool,
    pub note: Option<String>,
}

const XI_MIN: f64 = 0.05;

struct TailData {
    x: Vec<f64>,
    log_c: Vec<f64>,
    w: Vec<f64>,
    length: f64,
    periodic: bool,
}

impl TailData {
    fn log_shape(&self, x: f64, xi: f64) -> f64 {
        if self.periodic {
            // ln(e^{−x/ξ} + e^{−(L−x)/ξ}) without underflow
            -x / xi + (-(self.length - 2.0 * x) / xi).exp().ln_1p()
        } else {
            -x / xi
        }
    }

    /// χ² at fixed ξ with the amplitude eliminated; returns (χ², ln A).
    fn chi2(&self, xi: f64) -> (f64, f64) {
        let (mut sw, mut swr) = (0.0, 0.0);
        let r: Vec<f64> = self.x.iter().zip(&self.log_c).map(|(&x, &lc)| lc - self.log_shape(x, xi)).collect();
        for (ri, wi) in r.iter().zip(&self.w) {
            sw += wi;
            swr += wi * ri;
        }
        let la = swr / sw;
        (r.iter().zip(&self.w).map(|(ri, wi)| wi * (ri - la).powi(2)).sum(), la)
    }
}

fn golden_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() < 1e-13 * (1.0 + a.abs()) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Fits `A·[e^{−x/ξ} + e^{−(L−x)/ξ}]` (periodic) or `A·e^{−x/ξ}` (open) to
/// `C(x)` for `x` in the inclusive window, by weighted least squares on
/// `ln C` with weights `(C/σ)²`.
pub fn xi_from_tail(corr: &CorrelationFunction, window: (usize, usize)) -> Result<TailFit> {
    let sigmas: Vec<f64> = corr.errors.clone();
    xi_from_tail_weighted(corr, &sigmas, window)
}

/// As [`xi_from_tail`], with per-point errors supplied separately (used to
/// refit jackknife samples with fixed weights).
pub fn xi_from_tail_weighted(corr: &CorrelationFunction, sigmas: &[f64], window: (usize, usize)) -> Result<TailFit> {
    let (lo, hi) = window;
    let last = *corr.x.last().ok_or_else(|| Error::Analysis("empty correlation function".into()))?;
    if lo > hi || hi > last {
        return Err(Error::Analysis(format!("fit window [{lo}, {hi}] outside 0..={last}")));
    }
    let mut data = TailData { x: Vec::new(), log_c: Vec::new(), w: Vec::new(), length: corr.length as f64, periodic: corr.periodic };
    let mut skipped = 0;
    for (k, &x) in corr.x.iter().enumerate() {
        if x < lo || x > hi {
            continue;
        }
        let c = corr.values[k];
        if !(c > 0.0) || !c.is_finite() {
            skipped += 1;
            continue;
        }
        let s = sigmas.get(k).copied().unwrap_or(0.0);
        let rel = if s > 0.0 && s.is_finite() { s / c } else { 1.0 };
        data.x.push(x as f64);
        data.log_c.push(c.ln());
        data.w.push(1.0 / (rel * rel));
    }
    let npts = data.x.len();
    if npts < 2 {
        return Ok(TailFit {
            xi: f64::NAN,
            xi_err: f64::NAN,
            amplitude: f64::NAN,
            window,
            points: npts,
            chi2_dof: f64::NAN,
            reliable: false,
            note: Some(format!("fewer than two positive points in window ({skipped} non-positive)")),
        });
    }
    let xi_max = 100.0 * corr.length as f64;
    let (la, lb) = (XI_MIN.ln(), xi_max.ln());
    // coarse scan guards against a local minimum, golden search refines
    let grid = 400;
    let mut best = (f64::INFINITY, la);
    for k in 0..=grid {
        let u = la + (lb - la) * k as f64 / grid as f64;
        let v = data.chi2(u.exp()).0;
        if v < best.0 {
            best = (v, u);
        }
    }
    let step = (lb - la) / grid as f64;
    let u = golden_min(|u| data.chi2(u.exp()).0, (best.1 - step).max(la), (best.1 + step).min(lb));
    let xi = u.exp();
    let (chi2, log_a) = data.chi2(xi);
    let h = 1e-4 * xi;
    let curv = (data.chi2(xi + h).0 - 2.0 * chi2 + data.chi2(xi - h).0) / (h * h);
    let xi_err = if curv > 0.0 { (2.0 / curv).sqrt() } else { f64::INFINITY };
    let dof = npts.saturating_sub(2);
    let chi2_dof = if dof > 0 { chi2 / dof as f64 } else { 0.0 };

    let mut note = None;
    let mut reliable = true;
    if xi > corr.length as f64 / 4.0 {
        reliable = false;
        note = Some(format!("xi = {xi:.3} exceeds L/4: correlation does not decay within the system"));
    } else if u >= lb - 1e-9 || u <= la + 1e-9 {
        reliable = false;
        note = Some("fit ran into the xi search bound".into());
    } else if skipped > 0 {
        note = Some(format!("{skipped} non-positive points skipped"));
    }
    Ok(TailFit { xi, xi_err, amplitude: log_a.exp(), window, points: npts, chi2_dof, reliable, note })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub n: usize,
    pub xi: f64,
    pub err: f64,
}

/// How points near thermal saturation are excluded before the fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SaturationRule {
    None,
    /// Drop points with `ξ > max_xi` (e.g. `0.5·βJ·c_eff`).
    MaxXi(f64),
    /// Drop the largest-n points until `χ²/dof ≤ max_chi2_dof`.
    DropUntilQuality { max_chi2_dof: f64 },
}

impl std::fmt::Display for SaturationRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SaturationRule::None => write!(f, "none"),
            SaturationRule::MaxXi(m) => write!(f, "drop xi > {m}"),
            SaturationRule::DropUntilQuality { max_chi2_dof } => {
                write!(f, "drop largest n until chi2/dof <= {max_chi2_dof}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub points: Vec<ScalingPoint>,
    pub excluded: Vec<ScalingPoint>,
    pub rule: String,
    /// `ln ξ = slope·n + intercept`.
    pub slope: f64,
    pub slope_err: f64,
    pub intercept: f64,
    pub intercept_err: f64,
    pub chi2_dof: f64,
    /// `slope·N/(4π)`, the combination `ρ_s/c` in lattice units.
    pub stiffness_over_velocity: f64,
}

fn linear_fit(points: &[ScalingPoint], n_colors: usize) -> ScalingFit {
    let weighted = points.iter().all(|p| p.err > 0.0 && p.err.is_finite());
    let w: Vec<f64> = points.iter().map(|p| if weighted { (p.xi / p.err).powi(2) } else { 1.0 }).collect();
    let x: Vec<f64> = points.iter().map(|p| p.n as f64).collect();
    let y: Vec<f64> = points.iter().map(|p| p.xi.ln()).collect();
    let s: f64 = w.iter().sum();
    let sx: f64 = w.iter().zip(&x).map(|(w, x)| w * x).sum();
    let sy: f64 = w.iter().zip(&y).map(|(w, y)| w * y).sum();
    let sxx: f64 = w.iter().zip(&x).map(|(w, x)| w * x * x).sum();
    let sxy: f64 = w.iter().zip(x.iter().zip(&y)).map(|(w, (x, y))| w * x * y).sum();
    let delta = s * sxx - sx * sx;
    let slope = (s * sxy - sx * sy) / delta;
    let intercept = (sxx * sy - sx * sxy) / delta;
    let chi2: f64 = w.iter().zip(x.iter().zip(&y)).map(|(w, (x, y))| w * (y - slope * x - intercept).powi(2)).sum();
    let dof = points.len().saturating_sub(2).max(1) as f64;
    // unweighted fits take their scale from the residuals
    let scale = if weighted { 1.0 } else { chi2 / dof };
    ScalingFit {
        points: points.to_vec(),
        excluded: Vec::new(),
        rule: SaturationRule::None.to_string(),
        slope,
        slope_err: (scale * s / delta).sqrt(),
        intercept,
        intercept_err: (scale * sxx / delta).sqrt(),
        chi2_dof: chi2 / dof,
        stiffness_over_velocity: slope * n_colors as f64 / (4.0 * std::f64::consts::PI),
    }
}

/// Weighted fit of `ln ξ` against even leg counts.
pub fn asymptotic_freedom_fit(points: &[ScalingPoint], n_colors: usize) -> Result<ScalingFit> {
    fit_with_exclusion(points, n_colors, SaturationRule::None)
}

pub fn fit_with_exclusion(points: &[ScalingPoint], n_colors: usize, rule: SaturationRule) -> Result<ScalingFit> {
    let mut usable: Vec<ScalingPoint> = Vec::new();
    let mut excluded = Vec::new();
    for p in points {
        if p.n % 2 != 0 || !(p.xi > 0.0) || !p.xi.is_finite() {
            excluded.push(*p);
            continue;
        }
        match rule {
            SaturationRule::MaxXi(m) if p.xi > m => excluded.push(*p),
            _ => usable.push(*p),
        }
    }
    usable.sort_by_key(|p| p.n);
    let insufficient = |k: usize| Error::Analysis(format!("insufficient points: {k} usable even-n points, need 3"));
    if usable.len() < 3 {
        return Err(insufficient(usable.len()));
    }
    let mut fit = linear_fit(&usable, n_colors);
    if let SaturationRule::DropUntilQuality { max_chi2_dof } = rule {
        while fit.chi2_dof > max_chi2_dof && usable.len() > 3 {
            excluded.push(usable.pop().expect("non-empty"));
            fit = linear_fit(&usable, n_colors);
        }
    }
    fit.excluded = excluded;
    fit.rule = rule.to_string();
    Ok(fit)
}
