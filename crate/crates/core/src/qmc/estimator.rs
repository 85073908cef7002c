//! Per-sweep measurements, fine binning and jackknife error analysis.

use serde::{Deserialize, Serialize};

use super::config::{SseConfiguration, INACTIVE};
use crate::error::{Error, Result};
use crate::lattice::{Boundary, LadderGeometry};

/// Index layout of one measurement vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layout {
    /// Largest separation `x` stored (`L/2` periodic, `L−1` open).
    pub x_max: usize,
    /// Loop-averaged static `S(0)`, `S(2π/L)` columns are present.
    #[serde(default)]
    pub structure: bool,
}

impl Layout {
    pub const N_OPS: usize = 0;
    pub const ENERGY: usize = 1;
    pub const ENERGY_DENSITY: usize = 2;

    pub fn new(x_max: usize) -> Self {
        Layout { x_max, structure: false }
    }

    pub fn with_structure(x_max: usize) -> Self {
        Layout { x_max, structure: true }
    }

    pub fn n_x(&self) -> usize {
        self.x_max + 1
    }

    /// Equal-time `C(x)`.
    pub fn corr(&self, x: usize) -> usize {
        3 + x
    }

    /// Imaginary-time integrated correlation (unnormalized).
    pub fn static_corr(&self, x: usize) -> usize {
        3 + self.n_x() + x
    }

    /// Loop-averaged static structure factor at `k = 0` or `k = 1`.
    pub fn structure(&self, k: usize) -> usize {
        assert!(self.structure && k < 2, "no structure column {k}");
        3 + 2 * self.n_x() + k
    }

    pub fn len(&self) -> usize {
        3 + 2 * self.n_x() + if self.structure { 2 } else { 0 }
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Precomputed pair bookkeeping for correlation measurements along legs.
#[derive(Debug, Clone)]
pub(crate) struct Measurer {
    length: usize,
    legs: usize,
    periodic: bool,
    n_colors: usize,
    beta: f64,
    j: f64,
    n_bonds: usize,
    n_active: usize,
    layout: Layout,
    slices: usize,
    /// valid (active, active) pairs at separation x, summed over legs
    pairs: Vec<f64>,
    /// (inactive, inactive) pairs at separation x; these always match
    dead_pairs: Vec<u64>,
    // scratch
    snapshot: Vec<u8>,
    row: Vec<u8>,
    matches: Vec<u64>,
    counts: Vec<u32>,
    last_change: Vec<u32>,
    phi: Vec<f64>,
    prop: Vec<u8>,
}

impl Measurer {
    pub fn new(geometry: &LadderGeometry, n_colors: usize, beta: f64, j: f64, slices: usize) -> Self {
        let length = geometry.length();
        let legs = geometry.legs();
        let periodic = geometry.boundary_x() == Boundary::Periodic;
        let x_max = if periodic { length / 2 } else { length - 1 };
        let mut pairs = vec![0.0; x_max + 1];
        let mut dead_pairs = vec![0u64; x_max + 1];
        for y in 0..legs {
            for x in 0..=x_max {
                let span = if periodic { length } else { length - x };
                for i in 0..span {
                    let a = geometry.is_active(geometry.index(i, y));
                    let b = geometry.is_active(geometry.index((i + x) % length, y));
                    if a && b {
                        pairs[x] += 1.0;
                    } else if !a && !b {
                        dead_pairs[x] += 1;
                    }
                }
            }
        }
        Measurer {
            length,
            legs,
            periodic,
            n_colors,
            beta,
            j,
            n_bonds: geometry.bonds().len(),
            n_active: geometry.n_active(),
            layout: if periodic {
                Layout::with_structure(x_max)
            } else {
                Layout::new(x_max)
            },
            slices: slices.max(1),
            pairs,
            dead_pairs,
            snapshot: Vec::new(),
            row: vec![0; 2 * length],
            matches: vec![0; x_max + 1],
            counts: vec![0; geometry.n_sites() * n_colors],
            last_change: vec![0; geometry.n_sites()],
            phi: vec![0.0; geometry.n_sites() * n_colors],
            prop: Vec::new(),
        }
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    /// `Σ_legs Σ_m |Σ_x e^{ikx}(δ(c_x, m) − 1/N)|²` for `k = 0, 2π/L`, over
    /// active sites.
    fn slice_structure(&self, colors: &[u8]) -> [f64; 2] {
        let l = self.length;
        let nc = self.n_colors;
        let q = 2.0 * std::f64::consts::PI / l as f64;
        let mut out = [0.0; 2];
        for y in 0..self.legs {
            let mut a = vec![[0.0f64; 3]; nc];
            let mut all = [0.0f64; 3];
            for (x, &c) in colors[y * l..(y + 1) * l].iter().enumerate() {
                if c == INACTIVE {
                    continue;
                }
                let (sn, cs) = (q * x as f64).sin_cos();
                for r in [&mut a[c as usize], &mut all] {
                    r[0] += 1.0;
                    r[1] += cs;
                    r[2] += sn;
                }
            }
            let f = 1.0 / nc as f64;
            for r in &a {
                out[0] += (r[0] - f * all[0]).powi(2);
                out[1] += (r[1] - f * all[1]).powi(2) + (r[2] - f * all[2]).powi(2);
            }
        }
        out
    }

    /// Adds color-match counts of `colors` for every separation.
    fn count_matches(&mut self, colors: &[u8]) {
        let l = self.length;
        for y in 0..self.legs {
            let src = &colors[y * l..(y + 1) * l];
            self.row[..l].copy_from_slice(src);
            self.row[l..].copy_from_slice(src);
            for x in 0..=self.layout.x_max {
                let span = if self.periodic { l } else { l - x };
                let a = &self.row[..span];
                let b = &self.row[x..x + span];
                self.matches[x] += a.iter().zip(b).filter(|(p, q)| p == q).count() as u64;
            }
        }
    }

    pub fn measure(&mut self, config: &SseConfiguration, out: &mut [f64]) {
        let n = config.n_ops();
        let nc = self.n_colors;
        let lay = self.layout.clone();
        out.iter_mut().for_each(|v| *v = 0.0);
        out[Layout::N_OPS] = n as f64;
        let energy = -(n as f64) / self.beta + 2.0 * self.j / nc as f64 * self.n_bonds as f64;
        out[Layout::ENERGY] = energy;
        out[Layout::ENERGY_DENSITY] = energy / self.n_active.max(1) as f64;

        // equal-time slices and lazily accumulated color counts
        self.matches.iter_mut().for_each(|m| *m = 0);
        self.counts.iter_mut().for_each(|c| *c = 0);
        self.last_change.iter_mut().for_each(|c| *c = 0);
        let k = self.slices;
        let targets: Vec<usize> = (0..k).map(|s| s * n / k).collect();
        let mut next = 0;
        let mut prop = std::mem::take(&mut self.prop);
        let mut snapshots: Vec<Vec<u8>> = Vec::new();
        {
            let counts = &mut self.counts;
            let last = &mut self.last_change;
            config.propagate(&mut prop, |q, cur, i, j, c| {
                while next < k && targets[next] == q {
                    snapshots.push(cur.to_vec());
                    next += 1;
                }
                if cur[i] != c {
                    for s in [i, j] {
                        counts[s * nc + cur[s] as usize] += q as u32 + 1 - last[s];
                        last[s] = q as u32 + 1;
                    }
                }
            });
        }
        while next < k {
            snapshots.push(prop.clone());
            next += 1;
        }
        for (s, &c) in prop.iter().enumerate() {
            if c != INACTIVE {
                self.counts[s * nc + c as usize] += n as u32 - self.last_change[s];
            }
        }
        self.prop = prop;
        let mut slice_s = [0.0; 2];
        if lay.structure {
            for snap in &snapshots {
                let v = self.slice_structure(snap);
                slice_s[0] += v[0] / k as f64;
                slice_s[1] += v[1] / k as f64;
            }
        }
        for snap in &snapshots {
            self.snapshot.clone_from(snap);
            let snap = std::mem::take(&mut self.snapshot);
            self.count_matches(&snap);
            self.snapshot = snap;
        }

        let norm = nc as f64 / (nc as f64 - 1.0);
        let mut c_eq = vec![0.0; lay.n_x()];
        for x in 0..lay.n_x() {
            if self.pairs[x] == 0.0 {
                continue;
            }
            let valid = (self.matches[x] - k as u64 * self.dead_pairs[x]) as f64;
            c_eq[x] = norm * (valid / (k as f64 * self.pairs[x]) - 1.0 / nc as f64);
            out[lay.corr(x)] = c_eq[x];
        }

        let sites = self.n_active as f64;
        if lay.structure {
            let moments = config.loop_moments().unwrap_or([0.0; 2]);
            let nf = n as f64;
            for q in 0..2 {
                out[lay.structure(q)] = if n == 0 {
                    norm * slice_s[q] / sites
                } else {
                    (moments[q] + nf * norm * slice_s[q]) / (nf * (nf + 1.0) * sites)
                };
            }
        }
        if n == 0 {
            for x in 0..lay.n_x() {
                out[lay.static_corr(x)] = c_eq[x];
            }
            return;
        }
        let mean = n as f64 / nc as f64;
        for (s, active) in (0..config.n_sites()).map(|s| (s, config.is_active(s))) {
            for m in 0..nc {
                self.phi[s * nc + m] = if active { self.counts[s * nc + m] as f64 - mean } else { 0.0 };
            }
        }
        let l = self.length;
        let nf = n as f64;
        for x in 0..lay.n_x() {
            if self.pairs[x] == 0.0 {
                continue;
            }
            let mut acc = 0.0;
            for y in 0..self.legs {
                let span = if self.periodic { l } else { l - x };
                for i in 0..span {
                    let a = (y * l + i) * nc;
                    let b = (y * l + (i + x) % l) * nc;
                    acc += self.phi[a..a + nc].iter().zip(&self.phi[b..b + nc]).map(|(p, q)| p * q).sum::<f64>();
                }
            }
            out[lay.static_corr(x)] = (norm * acc / self.pairs[x] + nf * c_eq[x]) / (nf * (nf + 1.0));
        }
    }
}

/// Mean and standard error over equal-weight bins.
pub fn mean_and_error(bins: &[f64]) -> (f64, f64) {
    let b = bins.len() as f64;
    let mean = bins.iter().sum::<f64>() / b;
    if bins.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = bins.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (b - 1.0);
    (mean, (var / b).sqrt())
}

/// Jackknife estimate and error of `f` over coarse bins.
pub fn jackknife<F>(bins: &[Vec<f64>], f: F) -> Result<(f64, f64, Vec<f64>)>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let nb = bins.len();
    if nb < 2 {
        return Err(Error::Analysis("jackknife needs at least two bins".into()));
    }
    let width = bins[0].len();
    let total: Vec<f64> = (0..width).map(|k| bins.iter().map(|b| b[k]).sum()).collect();
    let full: Vec<f64> = total.iter().map(|t| t / nb as f64).collect();
    let value = f(&full)?;
    let mut samples = Vec::with_capacity(nb);
    let mut buf = vec![0.0; width];
    for b in bins {
        for k in 0..width {
            buf[k] = (total[k] - b[k]) / (nb as f64 - 1.0);
        }
        samples.push(f(&buf)?);
    }
    let mean = samples.iter().sum::<f64>() / nb as f64;
    let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() * (nb as f64 - 1.0) / nb as f64;
    Ok((value, var.sqrt(), samples))
}

/// Fine bins filled in order; merged into coarse bins for error analysis.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimatorAccumulator {
    pub layout: Layout,
    pub bin_width: usize,
    pub fine_bins: Vec<Vec<f64>>,
    current: Vec<f64>,
    filled: usize,
}

pub const FINE_BINS: usize = 256;
pub const COARSE_BINS: usize = 32;
/// Error ratio between 32 and 64 coarse bins above which binning has not
/// converged.
pub const PLATEAU_RATIO: f64 = 1.3;

impl EstimatorAccumulator {
    /// Accumulator for `measurements` sweeps; the first
    /// `measurements − used()` are discarded so bins are equally filled.
    pub fn new(layout: Layout, measurements: usize) -> Result<Self> {
        if measurements < 2 * COARSE_BINS {
            return Err(Error::InvalidParameter(format!(
                "at least {} measurement sweeps are needed, got {measurements}",
                2 * COARSE_BINS
            )));
        }
        let mut n_fine = FINE_BINS;
        while n_fine > measurements {
            n_fine /= 2;
        }
        let width = measurements / n_fine;
        Ok(EstimatorAccumulator {
            current: vec![0.0; layout.len()],
            layout,
            bin_width: width,
            fine_bins: Vec::with_capacity(n_fine),
            filled: 0,
        })
    }

    pub fn target_bins(measurements: usize) -> usize {
        let mut n_fine = FINE_BINS;
        while n_fine > measurements {
            n_fine /= 2;
        }
        n_fine
    }

    pub fn push(&mut self, values: &[f64]) {
        for (c, v) in self.current.iter_mut().zip(values) {
            *c += v;
        }
        self.filled += 1;
        if self.filled == self.bin_width {
            let w = self.bin_width as f64;
            self.fine_bins.push(self.current.iter().map(|c| c / w).collect());
            self.current.iter_mut().for_each(|c| *c = 0.0);
            self.filled = 0;
        }
    }

    /// Bins formed by merging fine bins into `count` groups.
    pub fn coarse(&self, count: usize) -> Vec<Vec<f64>> {
        merge_bins(&self.fine_bins, count)
    }
}

pub fn merge_bins(fine: &[Vec<f64>], count: usize) -> Vec<Vec<f64>> {
    let count = count.min(fine.len()).max(1);
    let per = fine.len() / count;
    let width = fine.first().map_or(0, |b| b.len());
    (0..count)
        .map(|g| {
            let mut acc = vec![0.0; width];
            for b in &fine[g * per..(g + 1) * per] {
                for (a, v) in acc.iter_mut().zip(b) {
                    *a += v;
                }
            }
            acc.iter_mut().for_each(|a| *a /= per as f64);
            acc
        })
        .collect()
}

/// `err(32 bins) / err(64 bins)` for column `k`; values well above 1 mean
/// the bins are still autocorrelated.
pub fn binning_ratio(fine: &[Vec<f64>], k: usize) -> f64 {
    let col = |bins: Vec<Vec<f64>>| bins.into_iter().map(|b| b[k]).collect::<Vec<_>>();
    let (_, e32) = mean_and_error(&col(merge_bins(fine, COARSE_BINS)));
    let (_, e64) = mean_and_error(&col(merge_bins(fine, 2 * COARSE_BINS)));
    if e64 > 0.0 {
        e32 / e64
    } else if e32 > 0.0 {
        f64::INFINITY
    } else {
        1.0
    }
}
