//! Summary of a dimerization time series D(t).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuenchSummary {
    pub d0: f64,
    pub first_min_time: Option<f64>,
    pub first_min_value: Option<f64>,
    /// `D(0) − D(t_min)`.
    pub first_min_depth: Option<f64>,
    pub first_revival_time: Option<f64>,
    pub first_revival_value: Option<f64>,
    /// `2π/Δt` between the first two minima, or `π/t_min` with one minimum.
    pub omega: Option<f64>,
    pub oscillates: bool,
    /// D drops below D(0)/2 and later rises above it again.
    pub half_crossing_and_revival: bool,
    /// `(times, bonds)` of the per-bond map, if one was supplied.
    pub grid_shape: Option<(usize, usize)>,
    pub flags: Vec<String>,
}

/// Vertex of the parabola through three equally spaced samples.
fn parabola_vertex(t: [f64; 3], y: [f64; 3]) -> (f64, f64) {
    let h = t[1] - t[0];
    let denom = y[0] - 2.0 * y[1] + y[2];
    if denom == 0.0 {
        return (t[1], y[1]);
    }
    let off = 0.5 * (y[0] - y[2]) / denom;
    let off = off.clamp(-1.0, 1.0);
    (t[1] + off * h, y[1] - 0.25 * (y[0] - y[2]) * off)
}

fn extrema(d: &[f64], minima: bool) -> Vec<usize> {
    let tol = 1e-12 * d.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    (1..d.len().saturating_sub(1))
        .filter(|&k| {
            let (a, b, c) = if minima { (d[k - 1], d[k], d[k + 1]) } else { (-d[k - 1], -d[k], -d[k + 1]) };
            b < a - tol && b <= c
        })
        .collect()
}

pub fn quench_summary(times: &[f64], total: &[f64], per_bond: Option<&[Vec<f64>]>) -> Result<QuenchSummary> {
    if times.len() != total.len() || times.is_empty() {
        return Err(Error::Analysis("time series must be non-empty with matching lengths".into()));
    }
    let d0 = total[0];
    let mut flags = Vec::new();
    let minima = extrema(total, true);
    let maxima = extrema(total, false);
    let at = |k: usize| parabola_vertex([times[k - 1], times[k], times[k + 1]], [total[k - 1], total[k], total[k + 1]]);

    let first_min = minima.first().map(|&k| at(k));
    let first_revival = minima.first().and_then(|&m| maxima.iter().find(|&&k| k > m)).map(|&k| at(k));
    let omega = match (minima.first(), minima.get(1)) {
        (Some(_), Some(_)) => Some(2.0 * std::f64::consts::PI / (at(minima[1]).0 - at(minima[0]).0)),
        (Some(_), None) => first_min.map(|(t, _)| std::f64::consts::PI / t),
        _ => None,
    };
    if minima.is_empty() {
        flags.push(if times.len() < 3 { "series too short to contain a minimum" } else { "no oscillation" }.into());
    } else if first_revival.is_none() {
        flags.push("no revival after the first minimum".into());
    }

    let half = 0.5 * d0;
    let half_crossing_and_revival = total
        .iter()
        .position(|&v| v < half)
        .is_some_and(|k| total[k..].iter().any(|&v| v > half));

    let grid_shape = match per_bond {
        Some(grid) => {
            if grid.len() != times.len() {
                return Err(Error::Analysis("per-bond grid does not match the time axis".into()));
            }
            Some((grid.len(), grid.first().map_or(0, |r| r.len())))
        }
        None => None,
    };

    Ok(QuenchSummary {
        d0,
        first_min_time: first_min.map(|m| m.0),
        first_min_value: first_min.map(|m| m.1),
        first_min_depth: first_min.map(|m| d0 - m.1),
        first_revival_time: first_revival.map(|m| m.0),
        first_revival_value: first_revival.map(|m| m.1),
        omega,
        oscillates: !minima.is_empty(),
        half_crossing_and_revival,
        grid_shape,
        flags,
    })
}
