//! Stochastic series expansion with operator-loop updates for the SU(N)
//! singlet-projector ladder.

pub mod config;
pub mod ensemble;
pub mod estimator;

use serde::{Deserialize, Serialize};

pub use config::{SseConfiguration, UpdateStats};
pub use ensemble::{disorder_ensemble, realization_seeds, EnsembleSummary, RealizationResult};
pub use estimator::{jackknife, mean_and_error, EstimatorAccumulator, Layout};

use crate::analysis::BinnedCorrelation;
use crate::error::{Error, Result};
use crate::lattice::{Boundary, DisorderRealization, LadderGeometry};
use estimator::{binning_ratio, Measurer, COARSE_BINS, PLATEAU_RATIO};

/// Default number of imaginary-time slices for equal-time correlations.
pub const DEFAULT_SLICES: usize = 8;

#[derive(Debug, Clone)]
pub struct RunSpec {
    pub geometry: LadderGeometry,
    pub n_colors: usize,
    pub j: f64,
    pub beta: f64,
    pub thermalization: usize,
    pub measurements: usize,
    pub seed: u64,
    /// RNG stream; independent chains with one seed use distinct streams.
    pub stream: u64,
    pub disorder: Option<DisorderRealization>,
    pub slices: usize,
    /// Validate the configuration after every sweep.
    pub debug_checks: bool,
}

impl RunSpec {
    pub fn new(geometry: LadderGeometry, n_colors: usize, j: f64, beta: f64, measurements: usize, seed: u64) -> Self {
        RunSpec {
            geometry,
            n_colors,
            j,
            beta,
            thermalization: Self::default_thermalization(measurements),
            measurements,
            seed,
            stream: 0,
            disorder: None,
            slices: DEFAULT_SLICES,
            debug_checks: false,
        }
    }

    /// 10% of all sweeps, at least 10⁴.
    pub fn default_thermalization(measurements: usize) -> usize {
        (measurements / 9).max(10_000)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(Error::InvalidParameter(format!("beta must be positive, got {}", self.beta)));
        }
        if !(self.j.is_finite() && self.j > 0.0) {
            return Err(Error::InvalidParameter(format!("J must be positive, got {}", self.j)));
        }
        if self.n_colors < 2 {
            return Err(Error::InvalidParameter(format!("N must be at least 2, got {}", self.n_colors)));
        }
        if self.measurements == 0 {
            return Err(Error::InvalidParameter("measurement sweeps must be positive".into()));
        }
        if self.slices == 0 {
            return Err(Error::InvalidParameter("at least one time slice is needed".into()));
        }
        Ok(())
    }
}

/// Flat description of a run for metadata files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub length: usize,
    pub legs: usize,
    pub boundary_x: Boundary,
    pub n_colors: usize,
    pub j: f64,
    pub beta: f64,
    pub thermalization: usize,
    pub measurements: usize,
    pub seed: u64,
    pub stream: u64,
    pub slices: usize,
    pub concentration: f64,
    pub removed_sites: Vec<usize>,
    pub disorder_seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub name: String,
    pub value: f64,
    pub error: f64,
    pub bins: usize,
    /// `err(32 bins)/err(64 bins)`.
    pub binning_ratio: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ObservableSeries {
    pub run: RunRecord,
    pub layout: Layout,
    pub bin_width: usize,
    pub discarded_measurements: usize,
    pub fine_bins: Vec<Vec<f64>>,
    /// Weights `w(x)` with `S(k) = Σₓ w(x) C(x) cos(kx)`.
    pub pair_weights: Vec<f64>,
    pub estimates: Vec<Estimate>,
    pub warnings: Vec<String>,
    pub stats: UpdateStats,
    pub final_capacity: usize,
    pub final_n_ops: usize,
}

impl ObservableSeries {
    pub fn coarse_bins(&self) -> Vec<Vec<f64>> {
        estimator::merge_bins(&self.fine_bins, COARSE_BINS)
    }

    pub fn estimate(&self, name: &str) -> Option<&Estimate> {
        self.estimates.iter().find(|e| e.name == name)
    }

    fn binned(&self, column: impl Fn(usize) -> usize) -> BinnedCorrelation {
        let bins = self
            .coarse_bins()
            .into_iter()
            .map(|b| (0..self.layout.n_x()).map(|x| b[column(x)]).collect())
            .collect();
        BinnedCorrelation {
            length: self.run.length,
            periodic: self.run.boundary_x == Boundary::Periodic,
            weights: self.pair_weights.clone(),
            bins,
            structure: None,
        }
    }

    /// Equal-time `C(x)` per coarse bin.
    pub fn equal_time(&self) -> BinnedCorrelation {
        let lay = self.layout.clone();
        self.binned(|x| lay.corr(x))
    }

    /// Imaginary-time integrated correlation per coarse bin (unnormalized).
    /// With periodic boundaries the bins carry the loop-averaged structure
    /// factors, which `ξ₂` then uses.
    pub fn static_correlation(&self) -> BinnedCorrelation {
        let lay = self.layout.clone();
        let mut b = self.binned(|x| lay.static_corr(x));
        if lay.structure {
            b.structure =
                Some(self.coarse_bins().iter().map(|c| [c[lay.structure(0)], c[lay.structure(1)]]).collect());
        }
        b
    }
}

fn pair_weights(geometry: &LadderGeometry, x_max: usize) -> Vec<f64> {
    let l = geometry.length();
    match geometry.boundary_x() {
        Boundary::Periodic => (0..=x_max).map(|x| if x == 0 || 2 * x == l { 1.0 } else { 2.0 }).collect(),
        Boundary::Open => (0..=x_max).map(|x| if x == 0 { 1.0 } else { 2.0 * (l - x) as f64 / l as f64 }).collect(),
    }
}

fn sweep(config: &mut SseConfiguration, weight: f64, stats: &mut UpdateStats, check: bool) -> Result<()> {
    config.diagonal_update(weight, stats);
    config.adjust_capacity(stats);
    config.loop_update(stats)?;
    if check {
        config.validate()?;
    }
    Ok(())
}

/// Thermalization, then `measurements` sweeps each followed by one
/// measurement. Deterministic given the seed and stream.
pub fn run_chain(spec: &RunSpec) -> Result<ObservableSeries> {
    spec.validate()?;
    let geometry = match &spec.disorder {
        Some(d) => spec.geometry.with_defects(d)?,
        None => spec.geometry.clone(),
    };
    let mut config = SseConfiguration::new(&geometry, spec.n_colors, spec.seed, spec.stream)?;
    let mut stats = UpdateStats::default();
    let weight = spec.beta * 2.0 * spec.j;
    for _ in 0..spec.thermalization {
        sweep(&mut config, weight, &mut stats, spec.debug_checks)?;
    }

    let mut measurer = Measurer::new(&geometry, spec.n_colors, spec.beta, spec.j, spec.slices);
    let layout = measurer.layout().clone();
    if layout.structure {
        config.track_moments(geometry.length(), geometry.legs())?;
    }
    let mut acc = EstimatorAccumulator::new(layout.clone(), spec.measurements)?;
    let used = EstimatorAccumulator::target_bins(spec.measurements) * acc.bin_width;
    let discarded = spec.measurements - used;
    let mut buf = vec![0.0; layout.len()];
    for s in 0..spec.measurements {
        sweep(&mut config, weight, &mut stats, spec.debug_checks)?;
        if s >= discarded {
            measurer.measure(&config, &mut buf);
            acc.push(&buf);
        }
    }

    let coarse = acc.coarse(COARSE_BINS);
    let mut estimates = Vec::new();
    let mut warnings = Vec::new();
    let mut add = |name: String, k: usize| {
        let (value, error) = mean_and_error(&coarse.iter().map(|b| b[k]).collect::<Vec<_>>());
        let ratio = binning_ratio(&acc.fine_bins, k);
        if ratio > PLATEAU_RATIO {
            warnings.push(format!("{name}: binning error not converged (ratio {ratio:.2})"));
        }
        estimates.push(Estimate { name, value, error, bins: coarse.len(), binning_ratio: ratio });
    };
    add("n_ops".into(), Layout::N_OPS);
    add("energy".into(), Layout::ENERGY);
    add("energy_density".into(), Layout::ENERGY_DENSITY);
    for x in 0..layout.n_x() {
        add(format!("C({x})"), layout.corr(x));
    }
    for x in 0..layout.n_x() {
        add(format!("G({x})"), layout.static_corr(x));
    }
    if layout.structure {
        add("S_loop(0)".into(), layout.structure(0));
        add("S_loop(2pi/L)".into(), layout.structure(1));
    }

    let weights = pair_weights(&geometry, layout.x_max);
    let s_violations = coarse
        .iter()
        .filter(|b| {
            let (s0, s1) = if layout.structure {
                (b[layout.structure(0)], b[layout.structure(1)])
            } else {
                let c: Vec<f64> = (0..layout.n_x()).map(|x| b[layout.corr(x)]).collect();
                (
                    crate::analysis::structure_factor(&c, &weights, geometry.length(), 0),
                    crate::analysis::structure_factor(&c, &weights, geometry.length(), 1),
                )
            };
            !(s0 >= s1 && s1 >= 0.0)
        })
        .count();
    if s_violations > 0 {
        warnings.push(format!("S(0) >= S(2pi/L) >= 0 violated in {s_violations} bins"));
    }

    let run = RunRecord {
        length: geometry.length(),
        legs: geometry.legs(),
        boundary_x: geometry.boundary_x(),
        n_colors: spec.n_colors,
        j: spec.j,
        beta: spec.beta,
        thermalization: spec.thermalization,
        measurements: spec.measurements,
        seed: spec.seed,
        stream: spec.stream,
        slices: spec.slices,
        concentration: spec.disorder.as_ref().map_or(0.0, |d| d.concentration),
        removed_sites: spec.disorder.as_ref().map_or_else(Vec::new, |d| d.removed.clone()),
        disorder_seed: spec.disorder.as_ref().map(|d| d.seed),
    };
    Ok(ObservableSeries {
        run,
        layout,
        bin_width: acc.bin_width,
        discarded_measurements: discarded,
        fine_bins: acc.fine_bins,
        pair_weights: weights,
        estimates,
        warnings,
        stats,
        final_capacity: config.capacity(),
        final_n_ops: config.n_ops(),
    })
}
